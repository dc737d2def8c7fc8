// include/bisep/experiment.hpp

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

#ifndef BISEP_EXPERIMENT_HPP_
#define BISEP_EXPERIMENT_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "bisep/ace.hpp"
#include "bisep/curriculum.hpp"
#include "bisep/dataset.hpp"
#include "bisep/model.hpp"
#include "bisep/train.hpp"

namespace bisep::experiment {

// Everything a full run needs, loadable from a key=value text file.  The
// model, codec and corpus share one sample rate; the model stride must match
// the codec hop so predictions and targets live on the same frame grid.
struct ExperimentConfig {
  // Corpus.
  int train_count = 200;
  int valid_count = 40;
  int test_count = 40;
  double duration_s = 3.0;
  double sample_rate = 16000.0;

  model::ModelConfig model;
  ace::AceConfig ace;
  train::TrainConfig train;
  curriculum::CurriculumConfig curriculum;

  // Brain-informed cells to train/evaluate (the baseline is always one cell).
  std::vector<curriculum::Kind> curricula = {
      curriculum::Kind::none, curriculum::Kind::plain,
      curriculum::Kind::mixed};

  // Evaluation grids.  rho values must lie in (0, 1].
  std::vector<double> rho_grid;               // default 0.2 .. 1.0 step 0.1
  std::vector<double> sir_grid = {0.0, 2.5, 5.0, 7.5, 10.0};

  std::string out_dir = "out";
  std::uint64_t master_seed = 1;
  int threads = 1;

  void validate() const;
};

ExperimentConfig default_config();

// One "key = value" per line; '#' starts a comment.  Unknown keys are a
// config error.  See apply_option for the key list.
ExperimentConfig load_config_file(const std::string& path);
void apply_option(ExperimentConfig& cfg, const std::string& key,
                  const std::string& value);

// Output layout under cfg.out_dir.
std::string corpus_dir(const ExperimentConfig& cfg);
std::string manifest_path(const ExperimentConfig& cfg);
std::string checkpoint_path(const ExperimentConfig& cfg, model::Variant v,
                            curriculum::Kind kind);
std::string history_path(const ExperimentConfig& cfg, model::Variant v,
                         curriculum::Kind kind);
std::string eval_sir_csv_path(const ExperimentConfig& cfg);
std::string sweep_rho_csv_path(const ExperimentConfig& cfg);
std::string report_dir(const ExperimentConfig& cfg);

// Pipeline stages.  Each writes its outputs atomically (temp file + rename)
// and returns what downstream stages need.
data::CorpusManifest run_synth_data(const ExperimentConfig& cfg);

// Clean standardized target-envelope cues as float32 WAVs (cues/<id>.wav).
void run_cue_gen(const ExperimentConfig& cfg);

// Clean target electrodograms in the text format (egm/<id>.egm).
void run_ace_encode(const ExperimentConfig& cfg);

// Trains one cell and writes its checkpoint + history CSV.  The baseline
// ignores `kind` for training (clean audio throughout) but the artifact is
// still filed under the given kind for bookkeeping.
void run_train(const ExperimentConfig& cfg, model::Variant variant,
               curriculum::Kind kind);

// Oracle-cue comparison on the test split, remixed at every grid SIR.
// Needs the baseline checkpoint and the no-curriculum brain-informed one.
void run_eval_sir(const ExperimentConfig& cfg);

// Cue-reliability sweep of every curriculum-trained brain-informed cell at
// manifest SIRs; noise is scaled from one per-utterance draw so rho moves
// along a common random path.
void run_sweep_rho(const ExperimentConfig& cfg);

// Plots + backing tables derived purely from the two results CSVs.
void run_report(const ExperimentConfig& cfg);

// Fast invariant suite; prints one verdict line per check to stdout.
// `inject_bug` is a test fixture: "gradient" corrupts the analytic
// gradients before comparison, which a healthy checker must flag.
bool run_selfcheck(const std::string& inject_bug = "");

// Writes content to path via a temp file in the same directory + rename.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace bisep::experiment

#endif  // BISEP_EXPERIMENT_HPP_
