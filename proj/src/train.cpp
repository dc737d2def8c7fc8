// src/train.cpp

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

#include "bisep/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <utility>

#include "bisep/autodiff.hpp"
#include "bisep/dsp.hpp"
#include "bisep/errors.hpp"
#include "bisep/loss.hpp"
#include "bisep/optim.hpp"
#include "bisep/rng.hpp"

namespace bisep::train {

namespace {

// Seed-stream tags so every random decision draws from its own derived
// stream: crop offsets, shuffle order, per-utterance sigma, cue noise.
constexpr std::uint64_t kCropTag = 0x63726f70;
constexpr std::uint64_t kShuffleTag = 0x73687566;
constexpr std::uint64_t kSigmaTag = 0x7369676d;
constexpr std::uint64_t kCueNoiseTag = 0x6e6f6973;

using FloatTensor = TensorT<float>;

AudioSignal crop_signal(const AudioSignal& s, std::size_t start,
                        std::size_t length) {
  AudioSignal out;
  out.sample_rate = s.sample_rate;
  out.samples.assign(s.samples.begin() + static_cast<std::ptrdiff_t>(start),
                     s.samples.begin() +
                         static_cast<std::ptrdiff_t>(start + length));
  return out;
}

FloatTensor signal_tensor(const AudioSignal& s) {
  FloatTensor t(1, static_cast<int>(s.samples.size()));
  for (std::size_t i = 0; i < s.samples.size(); ++i) {
    t.data[i] = static_cast<float>(s.samples[i]);
  }
  return t;
}

FloatTensor cue_tensor(const dsp::AttentionCue& cue) {
  FloatTensor t(1, static_cast<int>(cue.samples.size()));
  for (std::size_t i = 0; i < cue.samples.size(); ++i) {
    t.data[i] = static_cast<float>(cue.samples[i]);
  }
  return t;
}

FloatTensor egm_tensor(const ace::Electrodogram& e) {
  FloatTensor t(e.num_electrodes, e.num_frames);
  t.data.assign(e.values.begin(), e.values.end());  // same layout
  return t;
}

// Clean standardized envelope cue of the attended source.
dsp::AttentionCue clean_cue(const AudioSignal& target) {
  const dsp::CueConfig cue_cfg;
  return dsp::standardize_cue(dsp::compute_proxy_cue(target, cue_cfg));
}

struct ItemLoss {
  int loss_id = -1;
  double value = 0.0;
};

// Builds the per-crop graph loss.  The brain-informed model regresses the
// attended target's electrodogram; the audio-only baseline takes the better
// of the two output-to-source assignments (chosen on values, then built
// into the graph so gradients flow through the chosen pairing only).
ItemLoss item_loss(nn::TapeT<float>& tape,
                   const model::ModelBundleT<float>& bundle,
                   model::ForwardResultT<float>* fr_out,
                   const AudioSignal& mixture, const AudioSignal& target,
                   const AudioSignal& interferer, const ace::AceConfig& ace_cfg,
                   double sigma, std::uint64_t noise_seed) {
  const ace::ClinicalMap map =
      ace::ClinicalMap::normalized(ace_cfg.num_electrodes);
  const FloatTensor mix = signal_tensor(mixture);
  const FloatTensor target_egm = egm_tensor(ace::encode(target, ace_cfg, map));

  ItemLoss out;
  if (bundle.variant == model::Variant::brain_informed) {
    dsp::AttentionCue cue = clean_cue(target);
    if (sigma > 0.0) cue = dsp::degrade_cue(cue, sigma, noise_seed);
    const FloatTensor cue_t = cue_tensor(cue);
    *fr_out = model::forward(tape, bundle, mix, &cue_t);
    out.loss_id = tape.frame_mse(fr_out->output_id, target_egm);
  } else {
    const FloatTensor interferer_egm =
        egm_tensor(ace::encode(interferer, ace_cfg, map));
    *fr_out = model::forward(tape, bundle, mix, nullptr);
    const loss::PitResult pit =
        loss::pit_mse(tape.value(fr_out->output_id),
                      tape.value(fr_out->output2_id), target_egm,
                      interferer_egm);
    const bool swap = pit.assignment == loss::Assignment::swap;
    const int a = tape.frame_mse(fr_out->output_id,
                                 swap ? interferer_egm : target_egm);
    const int b = tape.frame_mse(fr_out->output2_id,
                                 swap ? target_egm : interferer_egm);
    out.loss_id = tape.add_scalars(a, b);
  }
  out.value = static_cast<double>(tape.value(out.loss_id).data[0]);
  return out;
}

// Clean-cue loss on a fixed center crop, no gradients.
double validation_loss(const model::ModelBundleT<float>& bundle,
                       const Dataset& valid_set,
                       const ace::AceConfig& ace_cfg,
                       std::size_t crop_samples) {
  double total = 0.0;
  for (const Utterance& utt : valid_set) {
    const std::size_t length = std::min(crop_samples, utt.mixture.size());
    const std::size_t start = (utt.mixture.size() - length) / 2;
    const AudioSignal mix = crop_signal(utt.mixture, start, length);
    const AudioSignal tar = crop_signal(utt.target, start, length);
    const AudioSignal inter = crop_signal(utt.interferer, start, length);
    nn::TapeT<float> tape(false);
    model::ForwardResultT<float> fr;
    total += item_loss(tape, bundle, &fr, mix, tar, inter, ace_cfg,
                       /*sigma=*/0.0, /*noise_seed=*/0)
                 .value;
  }
  return total / static_cast<double>(valid_set.size());
}

}  // namespace

double evaluate_loss(const model::ModelBundleT<float>& bundle,
                     const Dataset& set, const ace::AceConfig& ace_cfg,
                     double crop_s) {
  if (set.empty()) throw ConfigError("evaluate_loss: empty dataset");
  if (!(crop_s > 0.0)) throw ConfigError("evaluate_loss: crop_s must be > 0");
  const auto crop_samples = static_cast<std::size_t>(
      std::llround(crop_s * set.front().mixture.sample_rate));
  return validation_loss(bundle, set, ace_cfg, crop_samples);
}

Utterance make_utterance(const data::LoadedPair& pair) {
  dsp::MixSpec spec;
  spec.sir_db = pair.sir_db;
  dsp::MixResult mixed = dsp::mix_at_sir(pair.target, pair.interferer, spec);
  Utterance utt;
  utt.id = pair.id;
  utt.mixture = std::move(mixed.mixture);
  utt.target = pair.target;
  utt.interferer = std::move(mixed.scaled_interferer);
  utt.seed = pair.seed;
  return utt;
}

Dataset make_dataset(const std::vector<data::LoadedPair>& pairs) {
  Dataset set;
  set.reserve(pairs.size());
  for (const auto& p : pairs) set.push_back(make_utterance(p));
  return set;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (patience < 1) throw ConfigError("patience must be >= 1");
  if (min_delta < 0.0) throw ConfigError("min_delta must be >= 0");
  if (!(clip_max_norm > 0.0)) throw ConfigError("clip_max_norm must be > 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(crop_s > 0.0)) throw ConfigError("crop_s must be > 0");
}

FitResult fit(const model::ModelBundleT<float>& init, const Dataset& train_set,
              const Dataset& valid_set, const TrainConfig& tc,
              const curriculum::CurriculumConfig& cc,
              const ace::AceConfig& ace_cfg) {
  tc.validate();
  cc.validate();
  if (train_set.empty()) throw ConfigError("fit: empty training set");
  if (valid_set.empty()) throw ConfigError("fit: empty validation set");

  const bool brain_informed =
      init.variant == model::Variant::brain_informed;
  const std::size_t n_train = train_set.size();

  model::ModelBundleT<float> bundle = init;
  optim::AdamConfig adam;
  adam.learning_rate = tc.learning_rate;
  optim::AdamStateT<float> state(bundle);

  FitResult result;
  result.best_valid_loss = std::numeric_limits<double>::infinity();
  model::ModelBundleT<float> best = bundle;
  int epochs_without_improvement = 0;

  std::vector<std::size_t> order(n_train);
  std::vector<double> sigmas(n_train, 0.0);

  for (int epoch = 0; epoch < tc.max_epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();

    // Per-utterance curriculum draw for this epoch (baseline trains on
    // clean audio only, so its sigma columns stay zero).
    for (std::size_t i = 0; i < n_train; ++i) {
      sigmas[i] = brain_informed
                      ? curriculum::draw_sigma(
                            epoch, cc,
                            Rng::derive(train_set[i].seed,
                                        {kSigmaTag,
                                         static_cast<std::uint64_t>(epoch)}))
                      : 0.0;
    }

    // Fresh crop offsets and presentation order each epoch.
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(Rng::derive(
        tc.seed, {kShuffleTag, static_cast<std::uint64_t>(epoch)}));
    for (std::size_t i = n_train; i > 1; --i) {
      const auto j = static_cast<std::size_t>(
          shuffle_rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(order[i - 1], order[j]);
    }

    double epoch_loss = 0.0;
    std::size_t cursor = 0;
    int batch_index = 0;
    while (cursor < n_train) {
      const std::size_t batch_end =
          std::min(cursor + static_cast<std::size_t>(tc.batch_size), n_train);
      const auto batch_n = static_cast<double>(batch_end - cursor);
      model::zero_grads(bundle);
      for (std::size_t j = cursor; j < batch_end; ++j) {
        const std::size_t idx = order[j];
        const Utterance& utt = train_set[idx];
        const auto crop_samples = static_cast<std::size_t>(
            std::llround(tc.crop_s * utt.mixture.sample_rate));
        const std::size_t length = std::min(crop_samples, utt.mixture.size());
        Rng crop_rng(Rng::derive(
            tc.seed, {kCropTag, static_cast<std::uint64_t>(epoch),
                      static_cast<std::uint64_t>(idx)}));
        const auto start = static_cast<std::size_t>(crop_rng.uniform_int(
            0, static_cast<std::int64_t>(utt.mixture.size() - length)));
        const AudioSignal mix = crop_signal(utt.mixture, start, length);
        const AudioSignal tar = crop_signal(utt.target, start, length);
        const AudioSignal inter = crop_signal(utt.interferer, start, length);

        nn::TapeT<float> tape(true);
        model::ForwardResultT<float> fr;
        const std::uint64_t noise_seed = Rng::derive(
            utt.seed, {kCueNoiseTag, static_cast<std::uint64_t>(epoch)});
        const ItemLoss loss = item_loss(tape, bundle, &fr, mix, tar, inter,
                                        ace_cfg, sigmas[idx], noise_seed);
        if (!std::isfinite(loss.value)) {
          char msg[160];
          std::snprintf(msg, sizeof(msg),
                        "fit: non-finite training loss (epoch %d, batch %d, "
                        "sigma %.6g)",
                        epoch, batch_index, sigmas[idx]);
          throw TrainingError(msg);
        }
        tape.backward(loss.loss_id);
        model::accumulate_grads(bundle, tape, fr);
        epoch_loss += loss.value;
      }
      for (auto& param : bundle.params) {
        for (auto& g : param.grad.data) {
          g /= static_cast<float>(batch_n);
        }
      }
      optim::clip_global_norm(bundle, tc.clip_max_norm);
      optim::adam_step(bundle, adam, state);
      cursor = batch_end;
      ++batch_index;
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = epoch_loss / static_cast<double>(n_train);
    const auto crop_samples = static_cast<std::size_t>(
        std::llround(tc.crop_s * valid_set.front().mixture.sample_rate));
    record.valid_loss =
        validation_loss(bundle, valid_set, ace_cfg, crop_samples);
    if (!std::isfinite(record.valid_loss)) {
      char msg[128];
      std::snprintf(msg, sizeof(msg),
                    "fit: non-finite validation loss (epoch %d)", epoch);
      throw TrainingError(msg);
    }
    record.sigma_mean =
        std::accumulate(sigmas.begin(), sigmas.end(), 0.0) /
        static_cast<double>(n_train);
    record.sigma_max = *std::max_element(sigmas.begin(), sigmas.end());
    record.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      epoch_start)
            .count();
    result.history.push_back(record);

    if (result.best_valid_loss - record.valid_loss > tc.min_delta) {
      result.best_valid_loss = record.valid_loss;
      result.best_epoch = epoch;
      best = bundle;
      epochs_without_improvement = 0;
    } else {
      ++epochs_without_improvement;
      if (epochs_without_improvement >= tc.patience) break;
    }
  }

  result.best_model = std::move(best);
  return result;
}

void write_history_csv(const std::string& path,
                       const std::vector<EpochRecord>& history) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open history CSV for writing: " + path);
  out << "epoch,train_loss,valid_loss,sigma_mean,sigma_max,seconds\n";
  char buf[192];
  for (const auto& r : history) {
    std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,%.9g,%.9g\n", r.epoch,
                  r.train_loss, r.valid_loss, r.sigma_mean, r.sigma_max,
                  r.seconds);
    out << buf;
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace bisep::train
