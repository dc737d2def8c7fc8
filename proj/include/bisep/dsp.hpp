// include/bisep/dsp.hpp

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

#ifndef BISEP_DSP_HPP_
#define BISEP_DSP_HPP_

#include <cstdint>
#include <span>
#include <utility>

#include "bisep/audio.hpp"

namespace bisep::dsp {

// Audio-rate envelope cue plus provenance: sigma_applied records the noise
// level that produced it (0 for a clean cue).
struct AttentionCue {
  std::vector<double> samples;
  double sample_rate = 16000.0;
  double sigma_applied = 0.0;

  std::size_t size() const { return samples.size(); }
};

struct CueConfig {
  double envelope_rate_hz = 64.0;  // block-averaging rate of the cue
  bool standardize = true;

  // Block length in samples for a signal at the given rate.
  std::int64_t block_length(double sample_rate) const;
};

struct MixSpec {
  double sir_db = 0.0;
};

struct MixResult {
  AudioSignal mixture;
  AudioSignal scaled_interferer;
};

// Scales the interferer by g = (||target|| / ||interferer||) * 10^(-sir/20)
// and adds it to the target, so the full-utterance energy ratio of
// (target, scaled interferer) equals spec.sir_db exactly.
MixResult mix_at_sir(const AudioSignal& target, const AudioSignal& interferer,
                     const MixSpec& spec);

// Envelope proxy cue: rectify, average over non-overlapping blocks of
// length floor(sample_rate / envelope_rate_hz), then linearly interpolate
// back to audio rate. Block values are anchored at block centers with
// edge-hold extrapolation; a final partial block is averaged over its
// actual length. Output length equals input length, values nonnegative.
AttentionCue compute_proxy_cue(const AudioSignal& s, const CueConfig& cfg);

// Shifts to zero mean and scales to unit variance. After this the cue's
// signal power is 1, so a noise level sigma maps to the correlation
// 1/sqrt(1 + sigma^2).
AttentionCue standardize_cue(const AttentionCue& cue);

// Adds i.i.d. Gaussian noise with standard deviation sigma, generated
// deterministically from rng_seed. With the same seed, draws scale linearly
// in sigma (noise = sigma * z for a fixed standard-normal sequence z).
AttentionCue degrade_cue(const AttentionCue& cue, double sigma,
                         std::uint64_t rng_seed);

// Pearson correlation; requires equal lengths >= 2 and nonzero variances.
double correlation(std::span<const double> a, std::span<const double> b);

// Cue reliability as a function of additive-noise level:
// rho = 1 / sqrt(1 + sigma_noise^2 / sigma_signal^2).
double rho_from_sigma(double sigma_noise, double sigma_signal);

// Inverse of rho_from_sigma: the noise level that yields correlation rho.
double sigma_for_rho(double rho, double sigma_signal);

}  // namespace bisep::dsp

#endif  // BISEP_DSP_HPP_
