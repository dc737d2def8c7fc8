// include/bisep/curriculum.hpp

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

#ifndef BISEP_CURRICULUM_HPP_
#define BISEP_CURRICULUM_HPP_

#include <cstdint>
#include <string>

namespace bisep::curriculum {

// How much cue noise a training epoch applies:
//   none  - cues stay clean for the whole run;
//   plain - every utterance gets the scheduled level sigma(n);
//   mixed - per utterance: clean, scheduled, or a uniform draw below the
//           scheduled level (keeps a clean fraction at all times).
enum class Kind { none, plain, mixed };

const char* kind_name(Kind k);
Kind kind_from_name(const std::string& name);

struct CurriculumConfig {
  Kind kind = Kind::mixed;
  int n_start = 10;          // first epoch with nonzero noise
  double sigma_init = 0.05;  // level at n_start
  double delta_sigma = 0.05; // increment per step
  int t_step = 5;            // epochs between increments
  double sigma_final = 0.6;  // cap
  double p_clean = 0.30;     // mixed-rule branch probabilities
  double p_scheduled = 0.65;
  double p_uniform = 0.05;

  void validate() const;
};

// Deterministic staircase: 0 before n_start, then
// min(sigma_init + floor((n - n_start)/t_step) * delta_sigma, sigma_final).
double schedule_sigma(int epoch, const CurriculumConfig& cfg);

// Mixed rule: clean with p_clean, the scheduled level with p_scheduled,
// otherwise uniform on (0, schedule_sigma(epoch)). Pure in (epoch, seed).
double sample_mixed_sigma(int epoch, const CurriculumConfig& cfg,
                          std::uint64_t rng_seed);

// The per-utterance noise level for any curriculum kind.
double draw_sigma(int epoch, const CurriculumConfig& cfg,
                  std::uint64_t rng_seed);

}  // namespace bisep::curriculum

#endif  // BISEP_CURRICULUM_HPP_
