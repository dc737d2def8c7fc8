// src/curriculum.cpp

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

#include "bisep/curriculum.hpp"

#include <cmath>

#include "bisep/errors.hpp"
#include "bisep/rng.hpp"

namespace bisep::curriculum {

const char* kind_name(Kind k) {
  switch (k) {
    case Kind::none:
      return "none";
    case Kind::plain:
      return "plain";
    default:
      return "mixed";
  }
}

Kind kind_from_name(const std::string& name) {
  if (name == "none") return Kind::none;
  if (name == "plain") return Kind::plain;
  if (name == "mixed") return Kind::mixed;
  throw ConfigError("unknown curriculum kind: " + name);
}

void CurriculumConfig::validate() const {
  if (n_start < 0) throw ConfigError("curriculum: n_start must be >= 0");
  if (t_step < 1) throw ConfigError("curriculum: t_step must be >= 1");
  if (sigma_init < 0.0 || sigma_final < sigma_init) {
    throw ConfigError("curriculum: need sigma_final >= sigma_init >= 0");
  }
  if (delta_sigma < 0.0) {
    throw ConfigError("curriculum: delta_sigma must be >= 0");
  }
  if (p_clean < 0.0 || p_scheduled < 0.0 || p_uniform < 0.0 ||
      std::abs(p_clean + p_scheduled + p_uniform - 1.0) > 1e-12) {
    throw ConfigError("curriculum: mix probabilities must sum to 1");
  }
}

double schedule_sigma(int epoch, const CurriculumConfig& cfg) {
  cfg.validate();
  if (epoch < cfg.n_start) return 0.0;
  const double steps = std::floor(static_cast<double>(epoch - cfg.n_start) /
                                  static_cast<double>(cfg.t_step));
  return std::min(cfg.sigma_init + steps * cfg.delta_sigma, cfg.sigma_final);
}

double sample_mixed_sigma(int epoch, const CurriculumConfig& cfg,
                          std::uint64_t rng_seed) {
  const double scheduled = schedule_sigma(epoch, cfg);
  Rng rng(rng_seed);
  const double u = rng.uniform();
  if (u < cfg.p_clean) return 0.0;
  if (u < cfg.p_clean + cfg.p_scheduled) return scheduled;
  return rng.uniform(0.0, scheduled);
}

double draw_sigma(int epoch, const CurriculumConfig& cfg,
                  std::uint64_t rng_seed) {
  switch (cfg.kind) {
    case Kind::none:
      return 0.0;
    case Kind::plain:
      return schedule_sigma(epoch, cfg);
    default:
      return sample_mixed_sigma(epoch, cfg, rng_seed);
  }
}

}  // namespace bisep::curriculum
