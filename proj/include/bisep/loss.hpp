// include/bisep/loss.hpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef BISEP_LOSS_HPP_
#define BISEP_LOSS_HPP_

#include "bisep/ace.hpp"
#include "bisep/tensor.hpp"

namespace bisep::loss {

// Output-to-target pairing for the two-output model.
enum class Assignment { identity, swap };

struct PitResult {
  double loss = 0.0;
  Assignment assignment = Assignment::identity;
};

// Squared error summed per frame over electrodes, averaged over frames:
// (1/K) * sum_k ||tar[:,k] - out[:,k]||^2.
double mse(const Tensor& out, const Tensor& tar);
double mse(const ace::Electrodogram& out, const ace::Electrodogram& tar);

// Minimum of the two output-to-target assignments of the summed per-pair
// frame MSE; ties resolve to identity.
PitResult pit_mse(const Tensor& out1, const Tensor& out2, const Tensor& tar1,
                  const Tensor& tar2);
PitResult pit_mse(const ace::Electrodogram& out1,
                  const ace::Electrodogram& out2,
                  const ace::Electrodogram& tar1,
                  const ace::Electrodogram& tar2);

}  // namespace bisep::loss

#endif  // BISEP_LOSS_HPP_
