// src/dsp.cpp

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

#include "bisep/dsp.hpp"

#include <algorithm>
#include <cmath>

#include "bisep/errors.hpp"
#include "bisep/rng.hpp"

namespace bisep::dsp {

std::int64_t CueConfig::block_length(double sample_rate) const {
  if (envelope_rate_hz <= 0.0 || envelope_rate_hz > sample_rate) {
    throw ConfigError("cue envelope rate must be in (0, sample_rate]");
  }
  return static_cast<std::int64_t>(std::floor(sample_rate / envelope_rate_hz));
}

MixResult mix_at_sir(const AudioSignal& target, const AudioSignal& interferer,
                     const MixSpec& spec) {
  validate(target, "mix_at_sir target");
  validate(interferer, "mix_at_sir interferer");
  if (!std::isfinite(spec.sir_db)) {
    throw ConfigError("mix_at_sir: sir_db must be finite");
  }
  if (target.sample_rate != interferer.sample_rate) {
    throw ShapeError("mix_at_sir: sample rates differ");
  }
  if (target.size() != interferer.size()) {
    throw ShapeError("mix_at_sir: lengths differ (truncate to the shorter)");
  }
  const double target_energy = energy(target);
  const double interferer_energy = energy(interferer);
  if (target_energy <= 0.0) {
    throw DegenerateInputError("mix_at_sir: zero-energy target");
  }
  if (interferer_energy <= 0.0) {
    throw DegenerateInputError("mix_at_sir: zero-energy interferer");
  }

  const double gain = std::sqrt(target_energy / interferer_energy) *
                      std::pow(10.0, -spec.sir_db / 20.0);

  MixResult result;
  result.scaled_interferer.sample_rate = target.sample_rate;
  result.scaled_interferer.samples.resize(target.size());
  result.mixture.sample_rate = target.sample_rate;
  result.mixture.samples.resize(target.size());
  for (std::size_t n = 0; n < target.size(); ++n) {
    const double scaled = gain * interferer.samples[n];
    result.scaled_interferer.samples[n] = scaled;
    result.mixture.samples[n] = target.samples[n] + scaled;
  }
  return result;
}

AttentionCue compute_proxy_cue(const AudioSignal& s, const CueConfig& cfg) {
  validate(s, "compute_proxy_cue");
  const std::int64_t block = cfg.block_length(s.sample_rate);
  const auto length = static_cast<std::int64_t>(s.size());
  const std::int64_t num_blocks = (length + block - 1) / block;

  // Block means of |s|; the tail block averages over its actual length.
  std::vector<double> means(static_cast<std::size_t>(num_blocks));
  for (std::int64_t b = 0; b < num_blocks; ++b) {
    const std::int64_t begin = b * block;
    const std::int64_t end = std::min(begin + block, length);
    double acc = 0.0;
    for (std::int64_t n = begin; n < end; ++n) {
      acc += std::abs(s.samples[static_cast<std::size_t>(n)]);
    }
    means[static_cast<std::size_t>(b)] =
        acc / static_cast<double>(end - begin);
  }

  // Linear upsampling with block values anchored at block centers and
  // edge-hold beyond the first/last center.
  AttentionCue cue;
  cue.sample_rate = s.sample_rate;
  cue.sigma_applied = 0.0;
  cue.samples.resize(s.size());
  for (std::int64_t n = 0; n < length; ++n) {
    const double position =
        (static_cast<double>(n) - (static_cast<double>(block) - 1.0) / 2.0) /
        static_cast<double>(block);
    double value = 0.0;
    if (position <= 0.0) {
      value = means.front();
    } else if (position >= static_cast<double>(num_blocks - 1)) {
      value = means.back();
    } else {
      const auto lo = static_cast<std::int64_t>(std::floor(position));
      const double frac = position - static_cast<double>(lo);
      value = means[static_cast<std::size_t>(lo)] * (1.0 - frac) +
              means[static_cast<std::size_t>(lo + 1)] * frac;
    }
    cue.samples[static_cast<std::size_t>(n)] = value;
  }
  return cue;
}

AttentionCue standardize_cue(const AttentionCue& cue) {
  if (cue.samples.empty()) {
    throw ShapeError("standardize_cue: empty cue");
  }
  const auto count = static_cast<double>(cue.samples.size());
  double mean = 0.0;
  for (const double v : cue.samples) mean += v;
  mean /= count;
  double variance = 0.0;
  for (const double v : cue.samples) variance += (v - mean) * (v - mean);
  variance /= count;
  if (variance <= 0.0) {
    throw DegenerateInputError("standardize_cue: zero-variance cue");
  }
  const double scale = 1.0 / std::sqrt(variance);

  AttentionCue out;
  out.sample_rate = cue.sample_rate;
  out.sigma_applied = cue.sigma_applied;
  out.samples.resize(cue.samples.size());
  for (std::size_t n = 0; n < cue.samples.size(); ++n) {
    out.samples[n] = (cue.samples[n] - mean) * scale;
  }
  return out;
}

AttentionCue degrade_cue(const AttentionCue& cue, double sigma,
                         std::uint64_t rng_seed) {
  if (sigma < 0.0 || !std::isfinite(sigma)) {
    throw ConfigError("degrade_cue: sigma must be >= 0");
  }
  AttentionCue out;
  out.sample_rate = cue.sample_rate;
  out.sigma_applied = sigma;
  out.samples.resize(cue.samples.size());
  if (sigma == 0.0) {
    out.samples = cue.samples;
    return out;
  }
  Rng rng(rng_seed);
  for (std::size_t n = 0; n < cue.samples.size(); ++n) {
    out.samples[n] = cue.samples[n] + sigma * rng.gaussian();
  }
  return out;
}

double correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ShapeError("correlation: lengths differ");
  }
  if (a.size() < 2) {
    throw ShapeError("correlation: need at least 2 samples");
  }
  const auto count = static_cast<double>(a.size());
  double mean_a = 0.0;
  double mean_b = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) {
    mean_a += a[n];
    mean_b += b[n];
  }
  mean_a /= count;
  mean_b /= count;
  double cov = 0.0;
  double var_a = 0.0;
  double var_b = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) {
    const double da = a[n] - mean_a;
    const double db = b[n] - mean_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a <= 0.0 || var_b <= 0.0) {
    throw DegenerateInputError("correlation: zero variance");
  }
  const double rho = cov / std::sqrt(var_a * var_b);
  return std::clamp(rho, -1.0, 1.0);
}

double rho_from_sigma(double sigma_noise, double sigma_signal) {
  if (sigma_signal <= 0.0 || !std::isfinite(sigma_signal)) {
    throw ConfigError("rho_from_sigma: sigma_signal must be > 0");
  }
  if (sigma_noise < 0.0 || !std::isfinite(sigma_noise)) {
    throw ConfigError("rho_from_sigma: sigma_noise must be >= 0");
  }
  const double ratio = sigma_noise / sigma_signal;
  return 1.0 / std::sqrt(1.0 + ratio * ratio);
}

double sigma_for_rho(double rho, double sigma_signal) {
  if (sigma_signal <= 0.0 || !std::isfinite(sigma_signal)) {
    throw ConfigError("sigma_for_rho: sigma_signal must be > 0");
  }
  if (!(rho > 0.0) || rho > 1.0) {
    throw ConfigError("sigma_for_rho: rho must be in (0, 1]");
  }
  return sigma_signal * std::sqrt(1.0 / (rho * rho) - 1.0);
}

}  // namespace bisep::dsp
