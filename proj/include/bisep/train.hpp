// include/bisep/train.hpp

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

#ifndef BISEP_TRAIN_HPP_
#define BISEP_TRAIN_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "bisep/ace.hpp"
#include "bisep/audio.hpp"
#include "bisep/curriculum.hpp"
#include "bisep/dataset.hpp"
#include "bisep/model.hpp"

namespace bisep::train {

// One training utterance with the interferer already scaled to the mixture
// SIR, so target + interferer == mixture sample-for-sample.  The per-item
// seed drives every stochastic decision tied to this utterance (sigma draws
// and cue noise), keeping runs reproducible under reordering.
struct Utterance {
  std::string id;
  AudioSignal mixture;
  AudioSignal target;
  AudioSignal interferer;
  std::uint64_t seed = 0;
};

using Dataset = std::vector<Utterance>;

// Mixes a loaded pair at its manifest SIR.
Utterance make_utterance(const data::LoadedPair& pair);
Dataset make_dataset(const std::vector<data::LoadedPair>& pairs);

struct TrainConfig {
  double learning_rate = 1e-3;
  int max_epochs = 100;
  int patience = 10;
  double min_delta = 1e-5;
  double clip_max_norm = 5.0;
  int batch_size = 4;
  double crop_s = 1.0;  // length of the random training crop, in seconds
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double valid_loss = 0.0;
  double sigma_mean = 0.0;
  double sigma_max = 0.0;
  double seconds = 0.0;
};

struct FitResult {
  model::ModelBundleT<float> best_model;
  std::vector<EpochRecord> history;
  int best_epoch = -1;
  double best_valid_loss = 0.0;
};

// Trains a copy of `init` and returns the checkpoint with the best
// validation loss.  Brain-informed models train on curriculum-degraded cues
// (sigma drawn once per utterance per epoch) against the attended target's
// electrodogram; the audio-only baseline trains with the permutation
//-invariant loss over both sources and ignores the curriculum.  Validation
// always uses clean cues on fixed center crops.  Stops early after
// `patience` epochs without improvement greater than `min_delta`.  A
// non-finite loss aborts with the epoch, batch and sigma in the message.
FitResult fit(const model::ModelBundleT<float>& init, const Dataset& train_set,
              const Dataset& valid_set, const TrainConfig& tc,
              const curriculum::CurriculumConfig& cc,
              const ace::AceConfig& ace_cfg);

// Clean-cue loss of `bundle` over fixed center crops of `set` — the same
// measurement fit() uses for validation.  Evaluating the untrained bundle
// gives the initial loss that training is expected to shrink.
double evaluate_loss(const model::ModelBundleT<float>& bundle,
                     const Dataset& set, const ace::AceConfig& ace_cfg,
                     double crop_s);

// History CSV: "epoch,train_loss,valid_loss,sigma_mean,sigma_max,seconds".
void write_history_csv(const std::string& path,
                       const std::vector<EpochRecord>& history);

}  // namespace bisep::train

#endif  // BISEP_TRAIN_HPP_
