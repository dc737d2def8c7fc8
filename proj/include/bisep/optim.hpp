// include/bisep/optim.hpp

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

#ifndef BISEP_OPTIM_HPP_
#define BISEP_OPTIM_HPP_

#include <cmath>
#include <cstdint>
#include <vector>

#include "bisep/errors.hpp"
#include "bisep/model.hpp"
#include "bisep/tensor.hpp"

namespace bisep::optim {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First/second moment accumulators, one pair per model parameter.
template <typename T>
struct AdamStateT {
  std::int64_t step = 0;
  std::vector<TensorT<T>> m;
  std::vector<TensorT<T>> v;

  explicit AdamStateT(const model::ModelBundleT<T>& bundle) {
    m.reserve(bundle.params.size());
    v.reserve(bundle.params.size());
    for (const auto& p : bundle.params) {
      m.emplace_back(p.value.rows, p.value.cols);
      v.emplace_back(p.value.rows, p.value.cols);
    }
  }
};

// Scales all gradients so their joint L2 norm is at most max_norm; returns
// the pre-clip norm.
template <typename T>
double clip_global_norm(model::ModelBundleT<T>& bundle, double max_norm) {
  if (!(max_norm > 0.0)) throw ConfigError("clip: max_norm must be > 0");
  double sum_sq = 0.0;
  for (const auto& p : bundle.params) {
    for (const T g : p.grad.data) {
      sum_sq += static_cast<double>(g) * static_cast<double>(g);
    }
  }
  const double norm = std::sqrt(sum_sq);
  if (norm > max_norm) {
    const T scale = static_cast<T>(max_norm / norm);
    for (auto& p : bundle.params) {
      for (T& g : p.grad.data) g *= scale;
    }
  }
  return norm;
}

// One bias-corrected Adam update from the gradients stored in the bundle.
template <typename T>
void adam_step(model::ModelBundleT<T>& bundle, const AdamConfig& cfg,
               AdamStateT<T>& state) {
  if (state.m.size() != bundle.params.size()) {
    throw ShapeError("adam: state does not match the parameter list");
  }
  state.step += 1;
  const double bias1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bias2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < bundle.params.size(); ++i) {
    auto& p = bundle.params[i];
    auto& m = state.m[i];
    auto& v = state.v[i];
    if (!p.grad.same_shape(m)) throw ShapeError("adam: moment shape mismatch");
    for (std::size_t j = 0; j < p.value.numel(); ++j) {
      const double g = static_cast<double>(p.grad.data[j]);
      const double m_new = cfg.beta1 * static_cast<double>(m.data[j]) +
                           (1.0 - cfg.beta1) * g;
      const double v_new = cfg.beta2 * static_cast<double>(v.data[j]) +
                           (1.0 - cfg.beta2) * g * g;
      m.data[j] = static_cast<T>(m_new);
      v.data[j] = static_cast<T>(v_new);
      const double m_hat = m_new / bias1;
      const double v_hat = v_new / bias2;
      p.value.data[j] -= static_cast<T>(
          cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon));
    }
  }
}

}  // namespace bisep::optim

#endif  // BISEP_OPTIM_HPP_
