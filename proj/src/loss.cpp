// src/loss.cpp

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

#include "bisep/loss.hpp"

#include <cstddef>

#include "bisep/errors.hpp"

namespace bisep::loss {

namespace {

// Shared kernel over raw float buffers: sum of squared differences divided
// by the frame count.
double frame_mse_raw(const float* out, const float* tar, std::size_t numel,
                     int frames) {
  double acc = 0.0;
  for (std::size_t i = 0; i < numel; ++i) {
    const double d = static_cast<double>(tar[i]) - static_cast<double>(out[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(frames);
}

}  // namespace

double mse(const Tensor& out, const Tensor& tar) {
  if (!out.same_shape(tar)) throw ShapeError("mse: shape mismatch");
  if (out.cols < 1) throw ShapeError("mse: empty prediction");
  return frame_mse_raw(out.data.data(), tar.data.data(), out.numel(),
                       out.cols);
}

double mse(const ace::Electrodogram& out, const ace::Electrodogram& tar) {
  if (out.num_electrodes != tar.num_electrodes ||
      out.num_frames != tar.num_frames) {
    throw ShapeError("mse: electrodogram shape mismatch");
  }
  return frame_mse_raw(out.values.data(), tar.values.data(),
                       out.values.size(), out.num_frames);
}

namespace {

template <typename E>
PitResult pit_from(const E& out1, const E& out2, const E& tar1, const E& tar2,
                   double (*pair_mse)(const E&, const E&)) {
  const double identity_cost = pair_mse(out1, tar1) + pair_mse(out2, tar2);
  const double swap_cost = pair_mse(out1, tar2) + pair_mse(out2, tar1);
  PitResult r;
  if (swap_cost < identity_cost) {
    r.loss = swap_cost;
    r.assignment = Assignment::swap;
  } else {
    r.loss = identity_cost;
    r.assignment = Assignment::identity;
  }
  return r;
}

}  // namespace

PitResult pit_mse(const Tensor& out1, const Tensor& out2, const Tensor& tar1,
                  const Tensor& tar2) {
  return pit_from<Tensor>(out1, out2, tar1, tar2, &mse);
}

PitResult pit_mse(const ace::Electrodogram& out1,
                  const ace::Electrodogram& out2,
                  const ace::Electrodogram& tar1,
                  const ace::Electrodogram& tar2) {
  return pit_from<ace::Electrodogram>(out1, out2, tar1, tar2, &mse);
}

}  // namespace bisep::loss
