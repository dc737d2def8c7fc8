// src/experiment.cpp

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

#include "bisep/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "bisep/autodiff.hpp"
#include "bisep/dsp.hpp"
#include "bisep/errors.hpp"
#include "bisep/loss.hpp"
#include "bisep/metrics.hpp"
#include "bisep/rng.hpp"

namespace bisep::experiment {

namespace {

constexpr std::uint64_t kDataTag = 0x64617461;   // corpus synthesis
constexpr std::uint64_t kInitTag = 0x696e6974;   // model initialization
constexpr std::uint64_t kTrainTag = 0x7472616e;  // crop/shuffle streams
constexpr std::uint64_t kSweepTag = 0x73776565;  // cue-noise draws

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (value.empty() || end != value.c_str() + value.size()) {
    throw ConfigError("config: bad number for " + key + ": '" + value + "'");
  }
  return v;
}

int parse_int(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const long v = std::strtol(value.c_str(), &end, 10);
  if (value.empty() || end != value.c_str() + value.size()) {
    throw ConfigError("config: bad integer for " + key + ": '" + value + "'");
  }
  return static_cast<int>(v);
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
  if (value.empty() || end != value.c_str() + value.size()) {
    throw ConfigError("config: bad seed for " + key + ": '" + value + "'");
  }
  return static_cast<std::uint64_t>(v);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  std::string::size_type start = 0;
  while (start <= value.size()) {
    const auto pos = value.find(',', start);
    const auto piece = pos == std::string::npos
                           ? value.substr(start)
                           : value.substr(start, pos - start);
    items.push_back(trim(piece));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return items;
}

std::vector<double> parse_double_list(const std::string& key,
                                      const std::string& value) {
  std::vector<double> out;
  for (const auto& item : split_list(value)) {
    out.push_back(parse_double(key, item));
  }
  return out;
}

const char* variant_file_tag(model::Variant v) {
  return v == model::Variant::baseline ? "baseline" : "brain_informed";
}

std::uint64_t cell_tag(model::Variant v, curriculum::Kind k) {
  return (v == model::Variant::baseline ? 0u : 1u) * 16 +
         static_cast<std::uint64_t>(k);
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory: " + dir);
}

void rename_over(const std::string& from, const std::string& to) {
  std::error_code ec;
  std::filesystem::rename(from, to, ec);
  if (ec) throw IoError("cannot move " + from + " to " + to);
}

}  // namespace

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + tmp);
    out << content;
    if (!out) throw IoError("write failed: " + tmp);
  }
  rename_over(tmp, path);
}

ExperimentConfig default_config() {
  ExperimentConfig cfg;
  for (int i = 2; i <= 10; ++i) {
    cfg.rho_grid.push_back(i / 10.0);  // built by division so the nominal
                                       // values round-trip text formatting
  }
  return cfg;
}

void ExperimentConfig::validate() const {
  if (train_count < 1 || valid_count < 1 || test_count < 1) {
    throw ConfigError("config: all split counts must be >= 1");
  }
  if (!(duration_s > 0.0)) throw ConfigError("config: duration_s must be > 0");
  if (!(sample_rate > 0.0)) {
    throw ConfigError("config: sample_rate must be > 0");
  }
  model.validate();
  ace.validate();
  train.validate();
  curriculum.validate();
  if (model.sample_rate != sample_rate || ace.sample_rate != sample_rate) {
    throw ConfigError("config: model/codec sample rate mismatch");
  }
  if (model.num_electrodes != ace.num_electrodes) {
    throw ConfigError("config: model and codec electrode counts differ");
  }
  if (model.stride != ace.hop()) {
    throw ConfigError(
        "config: model stride must equal the codec hop so predictions and "
        "targets share a frame grid");
  }
  const auto num_samples =
      static_cast<std::int64_t>(std::llround(duration_s * sample_rate));
  if (num_samples < model.kernel_length || num_samples < 2 * ace.hop()) {
    throw ConfigError("config: utterances too short for the frame grid");
  }
  if (curricula.empty()) throw ConfigError("config: curricula list is empty");
  std::set<curriculum::Kind> seen;
  for (const auto k : curricula) {
    if (!seen.insert(k).second) {
      throw ConfigError("config: duplicate curriculum kind");
    }
  }
  if (rho_grid.empty()) throw ConfigError("config: rho_grid is empty");
  for (const double r : rho_grid) {
    if (!(r > 0.0 && r <= 1.0)) {
      throw ConfigError("config: rho_grid values must lie in (0, 1]");
    }
  }
  if (sir_grid.empty()) throw ConfigError("config: sir_grid is empty");
  if (out_dir.empty()) throw ConfigError("config: out_dir is empty");
  if (threads < 1) throw ConfigError("config: threads must be >= 1");
}

void apply_option(ExperimentConfig& cfg, const std::string& key,
                  const std::string& value) {
  // Corpus.
  if (key == "train_count") {
    cfg.train_count = parse_int(key, value);
  } else if (key == "valid_count") {
    cfg.valid_count = parse_int(key, value);
  } else if (key == "test_count") {
    cfg.test_count = parse_int(key, value);
  } else if (key == "duration_s") {
    cfg.duration_s = parse_double(key, value);
  } else if (key == "sample_rate") {
    cfg.sample_rate = parse_double(key, value);
    cfg.model.sample_rate = cfg.sample_rate;
    cfg.ace.sample_rate = cfg.sample_rate;
    // Model geometry.
  } else if (key == "kernel_length") {
    cfg.model.kernel_length = parse_int(key, value);
  } else if (key == "stride") {
    cfg.model.stride = parse_int(key, value);
  } else if (key == "num_filters") {
    cfg.model.num_filters = parse_int(key, value);
  } else if (key == "bottleneck_channels") {
    cfg.model.bottleneck_channels = parse_int(key, value);
  } else if (key == "hidden_channels") {
    cfg.model.hidden_channels = parse_int(key, value);
  } else if (key == "num_stacks") {
    cfg.model.num_stacks = parse_int(key, value);
  } else if (key == "blocks_per_stack") {
    cfg.model.blocks_per_stack = parse_int(key, value);
  } else if (key == "depthwise_kernel") {
    cfg.model.depthwise_kernel = parse_int(key, value);
  } else if (key == "num_electrodes") {
    cfg.model.num_electrodes = parse_int(key, value);
    cfg.ace.num_electrodes = cfg.model.num_electrodes;
    // Codec.
  } else if (key == "n_sel") {
    cfg.ace.n_sel = parse_int(key, value);
  } else if (key == "frame_rate") {
    cfg.ace.frame_rate = parse_double(key, value);
  } else if (key == "analysis_window") {
    cfg.ace.analysis_window = parse_int(key, value);
  } else if (key == "band_lo_hz") {
    cfg.ace.band_lo_hz = parse_double(key, value);
  } else if (key == "band_hi_hz") {
    cfg.ace.band_hi_hz = parse_double(key, value);
    // Training.
  } else if (key == "learning_rate") {
    cfg.train.learning_rate = parse_double(key, value);
  } else if (key == "max_epochs") {
    cfg.train.max_epochs = parse_int(key, value);
  } else if (key == "patience") {
    cfg.train.patience = parse_int(key, value);
  } else if (key == "min_delta") {
    cfg.train.min_delta = parse_double(key, value);
  } else if (key == "clip_max_norm") {
    cfg.train.clip_max_norm = parse_double(key, value);
  } else if (key == "batch_size") {
    cfg.train.batch_size = parse_int(key, value);
  } else if (key == "crop_s") {
    cfg.train.crop_s = parse_double(key, value);
    // Curriculum schedule constants.
  } else if (key == "n_start") {
    cfg.curriculum.n_start = parse_int(key, value);
  } else if (key == "sigma_init") {
    cfg.curriculum.sigma_init = parse_double(key, value);
  } else if (key == "delta_sigma") {
    cfg.curriculum.delta_sigma = parse_double(key, value);
  } else if (key == "t_step") {
    cfg.curriculum.t_step = parse_int(key, value);
  } else if (key == "sigma_final") {
    cfg.curriculum.sigma_final = parse_double(key, value);
  } else if (key == "p_clean") {
    cfg.curriculum.p_clean = parse_double(key, value);
  } else if (key == "p_scheduled") {
    cfg.curriculum.p_scheduled = parse_double(key, value);
  } else if (key == "p_uniform") {
    cfg.curriculum.p_uniform = parse_double(key, value);
    // Experiment-level lists and bookkeeping.
  } else if (key == "curricula") {
    cfg.curricula.clear();
    for (const auto& name : split_list(value)) {
      cfg.curricula.push_back(curriculum::kind_from_name(name));
    }
  } else if (key == "rho_grid") {
    cfg.rho_grid = parse_double_list(key, value);
  } else if (key == "sir_grid") {
    cfg.sir_grid = parse_double_list(key, value);
  } else if (key == "out_dir") {
    cfg.out_dir = value;
  } else if (key == "seed") {
    cfg.master_seed = parse_u64(key, value);
  } else if (key == "threads") {
    cfg.threads = parse_int(key, value);
  } else {
    throw ConfigError("config: unknown key '" + key + "'");
  }
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file: " + path);
  ExperimentConfig cfg = default_config();
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = trim(line);
    if (text.empty() || text[0] == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: missing '=' at " + path + ":" +
                        std::to_string(line_no));
    }
    apply_option(cfg, trim(text.substr(0, eq)), trim(text.substr(eq + 1)));
  }
  return cfg;
}

std::string corpus_dir(const ExperimentConfig& cfg) {
  return cfg.out_dir + "/corpus";
}
std::string manifest_path(const ExperimentConfig& cfg) {
  return corpus_dir(cfg) + "/manifest.tsv";
}
std::string checkpoint_path(const ExperimentConfig& cfg, model::Variant v,
                            curriculum::Kind kind) {
  if (v == model::Variant::baseline) {
    return cfg.out_dir + "/ckpt/baseline.ckpt";
  }
  return cfg.out_dir + "/ckpt/" + std::string(variant_file_tag(v)) + "_" +
         curriculum::kind_name(kind) + ".ckpt";
}
std::string history_path(const ExperimentConfig& cfg, model::Variant v,
                         curriculum::Kind kind) {
  if (v == model::Variant::baseline) {
    return cfg.out_dir + "/history/baseline.csv";
  }
  return cfg.out_dir + "/history/" + std::string(variant_file_tag(v)) + "_" +
         curriculum::kind_name(kind) + ".csv";
}
std::string eval_sir_csv_path(const ExperimentConfig& cfg) {
  return cfg.out_dir + "/results/eval_sir.csv";
}
std::string sweep_rho_csv_path(const ExperimentConfig& cfg) {
  return cfg.out_dir + "/results/sweep_rho.csv";
}
std::string report_dir(const ExperimentConfig& cfg) {
  return cfg.out_dir + "/report";
}

data::CorpusManifest run_synth_data(const ExperimentConfig& cfg) {
  cfg.validate();
  data::SynthConfig synth;
  synth.train_count = cfg.train_count;
  synth.valid_count = cfg.valid_count;
  synth.test_count = cfg.test_count;
  synth.duration_s = cfg.duration_s;
  synth.sample_rate = cfg.sample_rate;
  return data::synth_corpus(synth, corpus_dir(cfg),
                            Rng::derive(cfg.master_seed, {kDataTag}));
}

void run_cue_gen(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto manifest = data::read_manifest(manifest_path(cfg));
  ensure_dir(cfg.out_dir + "/cues");
  const dsp::CueConfig cue_cfg;
  for (const auto& e : manifest.entries) {
    const AudioSignal target = wav::read(corpus_dir(cfg) + "/" + e.target_path);
    const dsp::AttentionCue cue =
        dsp::standardize_cue(dsp::compute_proxy_cue(target, cue_cfg));
    AudioSignal cue_signal;
    cue_signal.sample_rate = cue.sample_rate;
    cue_signal.samples = cue.samples;
    const std::string path = cfg.out_dir + "/cues/" + e.id + ".wav";
    wav::write(path + ".tmp", cue_signal, wav::SampleFormat::float32);
    rename_over(path + ".tmp", path);
  }
}

void run_ace_encode(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto manifest = data::read_manifest(manifest_path(cfg));
  ensure_dir(cfg.out_dir + "/egm");
  const auto map = ace::ClinicalMap::normalized(cfg.ace.num_electrodes);
  for (const auto& e : manifest.entries) {
    const AudioSignal target = wav::read(corpus_dir(cfg) + "/" + e.target_path);
    const ace::Electrodogram egm = ace::encode(target, cfg.ace, map);
    const std::string path = cfg.out_dir + "/egm/" + e.id + ".egm";
    ace::write_electrodogram(egm, path + ".tmp", ace::EgmFormat::text);
    rename_over(path + ".tmp", path);
  }
}

void run_train(const ExperimentConfig& cfg, model::Variant variant,
               curriculum::Kind kind) {
  cfg.validate();
  const auto manifest = data::read_manifest(manifest_path(cfg));
  const auto train_set = train::make_dataset(
      data::load_split(manifest, manifest_path(cfg), "train"));
  const auto valid_set = train::make_dataset(
      data::load_split(manifest, manifest_path(cfg), "valid"));

  const std::uint64_t init_seed =
      Rng::derive(cfg.master_seed, {kInitTag, cell_tag(variant, kind)});
  const auto bundle = model::build_model<float>(variant, cfg.model, init_seed);

  train::TrainConfig tc = cfg.train;
  tc.seed = Rng::derive(cfg.master_seed, {kTrainTag, cell_tag(variant, kind)});
  curriculum::CurriculumConfig cc = cfg.curriculum;
  cc.kind = variant == model::Variant::baseline ? curriculum::Kind::none : kind;

  const auto result =
      train::fit(bundle, train_set, valid_set, tc, cc, cfg.ace);

  ensure_dir(cfg.out_dir + "/ckpt");
  ensure_dir(cfg.out_dir + "/history");
  const std::string ckpt = checkpoint_path(cfg, variant, kind);
  model::save_checkpoint(result.best_model, ckpt + ".tmp", init_seed);
  rename_over(ckpt + ".tmp", ckpt);
  const std::string history = history_path(cfg, variant, kind);
  train::write_history_csv(history + ".tmp", result.history);
  rename_over(history + ".tmp", history);
}

namespace {

// Runs fn(i) for i in [0, n) across cfg.threads workers.  Each index's work
// must be independent; results land in preallocated slots so the output
// order never depends on scheduling.
void parallel_for(int threads, std::size_t n,
                  const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const auto worker_count =
      std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  std::vector<std::thread> workers;
  workers.reserve(worker_count);
  for (std::size_t w = 0; w < worker_count; ++w) {
    workers.emplace_back([&, w]() {
      for (std::size_t i = w; i < n; i += worker_count) fn(i);
    });
  }
  for (auto& t : workers) t.join();
}

dsp::AttentionCue clean_standardized_cue(const AudioSignal& target) {
  const dsp::CueConfig cue_cfg;
  return dsp::standardize_cue(dsp::compute_proxy_cue(target, cue_cfg));
}

}  // namespace

void run_eval_sir(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto manifest = data::read_manifest(manifest_path(cfg));
  const auto pairs =
      data::load_split(manifest, manifest_path(cfg), "test");
  if (pairs.empty()) throw ConfigError("eval: empty test split");

  const auto baseline =
      model::load_checkpoint(
          checkpoint_path(cfg, model::Variant::baseline,
                          curriculum::Kind::none))
          .model;
  const auto informed =
      model::load_checkpoint(
          checkpoint_path(cfg, model::Variant::brain_informed,
                          curriculum::Kind::none))
          .model;
  const auto map = ace::ClinicalMap::normalized(cfg.ace.num_electrodes);

  std::vector<std::vector<metrics::EvalRecord>> per_pair(pairs.size());
  parallel_for(cfg.threads, pairs.size(), [&](std::size_t i) {
    const auto& pair = pairs[i];
    const ace::Electrodogram p_tar = ace::encode(pair.target, cfg.ace, map);
    const dsp::AttentionCue cue = clean_standardized_cue(pair.target);
    for (const double sir : cfg.sir_grid) {
      dsp::MixSpec spec;
      spec.sir_db = sir;
      const auto mixed = dsp::mix_at_sir(pair.target, pair.interferer, spec);
      const ace::Electrodogram p_mix =
          ace::encode(mixed.mixture, cfg.ace, map);
      const ace::Electrodogram p_int =
          ace::encode(mixed.scaled_interferer, cfg.ace, map);

      // Audio-only baseline, scored with the better output-to-source
      // assignment (joint, consistent with the training loss).
      const auto outputs = model::forward_baseline(mixed.mixture, baseline);
      const auto assignment =
          loss::pit_mse(outputs.first, outputs.second, p_tar, p_int)
              .assignment;
      const ace::Electrodogram& chosen =
          assignment == loss::Assignment::identity ? outputs.first
                                                   : outputs.second;
      metrics::EvalRecord base_row;
      base_row.utt_id = pair.id;
      base_row.variant = model::Variant::baseline;
      base_row.curriculum = curriculum::Kind::none;
      base_row.input_sir_db = sir;
      base_row.rho = 1.0;
      base_row.rho_measured = 1.0;
      base_row.siri = metrics::siri(p_mix, p_tar, chosen);
      base_row.lcc = metrics::lcc_per_electrode(chosen, p_tar);
      per_pair[i].push_back(std::move(base_row));

      // Brain-informed with the oracle (clean) cue.
      const ace::Electrodogram p_hat =
          model::forward_brain(mixed.mixture, cue, informed);
      metrics::EvalRecord bi_row;
      bi_row.utt_id = pair.id;
      bi_row.variant = model::Variant::brain_informed;
      bi_row.curriculum = curriculum::Kind::none;
      bi_row.input_sir_db = sir;
      bi_row.rho = 1.0;
      bi_row.rho_measured = 1.0;
      bi_row.siri = metrics::siri(p_mix, p_tar, p_hat);
      bi_row.lcc = metrics::lcc_per_electrode(p_hat, p_tar);
      per_pair[i].push_back(std::move(bi_row));
    }
  });

  std::vector<metrics::EvalRecord> records;
  for (auto& chunk : per_pair) {
    for (auto& r : chunk) records.push_back(std::move(r));
  }
  ensure_dir(cfg.out_dir + "/results");
  const std::string path = eval_sir_csv_path(cfg);
  metrics::write_results_csv(path + ".tmp", records,
                             cfg.ace.num_electrodes);
  rename_over(path + ".tmp", path);
}

void run_sweep_rho(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto manifest = data::read_manifest(manifest_path(cfg));
  const auto pairs =
      data::load_split(manifest, manifest_path(cfg), "test");
  if (pairs.empty()) throw ConfigError("sweep: empty test split");

  std::vector<model::ModelBundleT<float>> cells;
  for (const auto kind : cfg.curricula) {
    cells.push_back(
        model::load_checkpoint(
            checkpoint_path(cfg, model::Variant::brain_informed, kind))
            .model);
  }
  const auto map = ace::ClinicalMap::normalized(cfg.ace.num_electrodes);

  std::vector<std::vector<metrics::EvalRecord>> per_pair(pairs.size());
  parallel_for(cfg.threads, pairs.size(), [&](std::size_t i) {
    const auto& pair = pairs[i];
    dsp::MixSpec spec;
    spec.sir_db = pair.sir_db;
    const auto mixed = dsp::mix_at_sir(pair.target, pair.interferer, spec);
    const ace::Electrodogram p_tar = ace::encode(pair.target, cfg.ace, map);
    const ace::Electrodogram p_mix = ace::encode(mixed.mixture, cfg.ace, map);
    const dsp::AttentionCue clean = clean_standardized_cue(pair.target);
    // One noise stream per utterance: every rho reuses the same draw scaled
    // to its sigma, so the sweep moves along a common random path.
    const std::uint64_t noise_seed = Rng::derive(pair.seed, {kSweepTag});

    for (const double rho : cfg.rho_grid) {
      const double sigma = dsp::sigma_for_rho(rho, 1.0);
      const dsp::AttentionCue cue =
          sigma > 0.0 ? dsp::degrade_cue(clean, sigma, noise_seed) : clean;
      const double rho_measured =
          sigma > 0.0 ? dsp::correlation(clean.samples, cue.samples) : 1.0;
      for (std::size_t c = 0; c < cells.size(); ++c) {
        const ace::Electrodogram p_hat =
            model::forward_brain(mixed.mixture, cue, cells[c]);
        metrics::EvalRecord row;
        row.utt_id = pair.id;
        row.variant = model::Variant::brain_informed;
        row.curriculum = cfg.curricula[c];
        row.input_sir_db = pair.sir_db;
        row.rho = rho;
        row.rho_measured = rho_measured;
        row.siri = metrics::siri(p_mix, p_tar, p_hat);
        row.lcc = metrics::lcc_per_electrode(p_hat, p_tar);
        per_pair[i].push_back(std::move(row));
      }
    }
  });

  std::vector<metrics::EvalRecord> records;
  for (auto& chunk : per_pair) {
    for (auto& r : chunk) records.push_back(std::move(r));
  }
  ensure_dir(cfg.out_dir + "/results");
  const std::string path = sweep_rho_csv_path(cfg);
  metrics::write_results_csv(path + ".tmp", records,
                             cfg.ace.num_electrodes);
  rename_over(path + ".tmp", path);
}

// ---------------------------------------------------------------------------
// Report: CSV tables + SVG plots derived purely from the two results files.
// ---------------------------------------------------------------------------

namespace {

std::string fmt9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string fmt_px(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (const char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct PlotSeries {
  std::string label;
  std::string color;
  std::vector<metrics::AggregateRow> rows;  // group = x, mean = y, se = bar
};

// Hand-rolled line plot. Every drawn mean carries a <title> child holding the
// value formatted exactly as in the backing CSV, so plots can be checked
// against their tables verbatim.
std::string render_plot(const std::string& title, const std::string& x_label,
                        const std::string& y_label,
                        const std::vector<PlotSeries>& series) {
  const int width = 640, height = 420;
  const double x0 = 70.0, x1 = 470.0;  // plot box
  const double y0 = 44.0, y1 = 372.0;

  double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
  bool first = true;
  for (const auto& s : series) {
    for (const auto& r : s.rows) {
      const double lo = r.mean - r.standard_error;
      const double hi = r.mean + r.standard_error;
      if (first) {
        xmin = xmax = r.group;
        ymin = lo;
        ymax = hi;
        first = false;
      } else {
        xmin = std::min(xmin, r.group);
        xmax = std::max(xmax, r.group);
        ymin = std::min(ymin, lo);
        ymax = std::max(ymax, hi);
      }
    }
  }
  auto pad_range = [](double& lo, double& hi) {
    const double span = hi - lo;
    const double pad = span > 0.0 ? 0.05 * span : 1.0;
    lo -= pad;
    hi += pad;
  };
  pad_range(xmin, xmax);
  pad_range(ymin, ymax);

  const auto px = [&](double x) {
    return x0 + (x - xmin) / (xmax - xmin) * (x1 - x0);
  };
  const auto py = [&](double y) {
    return y1 - (y - ymin) / (ymax - ymin) * (y1 - y0);
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' '
      << height << "\">\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\""
      << height << "\" fill=\"#ffffff\"/>\n";
  svg << "<text x=\"" << fmt_px((x0 + x1) / 2) << "\" y=\"24\" "
         "text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
      << xml_escape(title) << "</text>\n";

  // Axes with five ticks each.
  svg << "<line x1=\"" << fmt_px(x0) << "\" y1=\"" << fmt_px(y1) << "\" x2=\""
      << fmt_px(x1) << "\" y2=\"" << fmt_px(y1)
      << "\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
  svg << "<line x1=\"" << fmt_px(x0) << "\" y1=\"" << fmt_px(y0) << "\" x2=\""
      << fmt_px(x0) << "\" y2=\"" << fmt_px(y1)
      << "\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
  for (int i = 0; i < 5; ++i) {
    const double fx = xmin + (xmax - xmin) * i / 4.0;
    const double fy = ymin + (ymax - ymin) * i / 4.0;
    char label[64];
    svg << "<line x1=\"" << fmt_px(px(fx)) << "\" y1=\"" << fmt_px(y1)
        << "\" x2=\"" << fmt_px(px(fx)) << "\" y2=\"" << fmt_px(y1 + 5)
        << "\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
    std::snprintf(label, sizeof(label), "%.4g", fx);
    svg << "<text x=\"" << fmt_px(px(fx)) << "\" y=\"" << fmt_px(y1 + 18)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << xml_escape(label) << "</text>\n";
    svg << "<line x1=\"" << fmt_px(x0 - 5) << "\" y1=\"" << fmt_px(py(fy))
        << "\" x2=\"" << fmt_px(x0) << "\" y2=\"" << fmt_px(py(fy))
        << "\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
    std::snprintf(label, sizeof(label), "%.4g", fy);
    svg << "<text x=\"" << fmt_px(x0 - 8) << "\" y=\"" << fmt_px(py(fy) + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << xml_escape(label) << "</text>\n";
  }
  svg << "<text x=\"" << fmt_px((x0 + x1) / 2) << "\" y=\"406\" "
         "text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
      << xml_escape(x_label) << "</text>\n";
  svg << "<text x=\"18\" y=\"" << fmt_px((y0 + y1) / 2)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"12\" transform=\"rotate(-90 18 "
      << fmt_px((y0 + y1) / 2) << ")\">" << xml_escape(y_label)
      << "</text>\n";

  // Legend in the right margin.
  double legend_y = y0 + 8;
  for (const auto& s : series) {
    svg << "<line x1=\"482\" y1=\"" << fmt_px(legend_y) << "\" x2=\"506\" "
           "y2=\""
        << fmt_px(legend_y) << "\" stroke=\"" << s.color
        << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"512\" y=\"" << fmt_px(legend_y + 4)
        << "\" font-family=\"sans-serif\" font-size=\"12\">"
        << xml_escape(s.label) << "</text>\n";
    legend_y += 20;
  }

  for (const auto& s : series) {
    if (s.rows.empty()) continue;
    svg << "<polyline fill=\"none\" stroke=\"" << s.color
        << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.rows.size(); ++i) {
      if (i) svg << ' ';
      svg << fmt_px(px(s.rows[i].group)) << ',' << fmt_px(py(s.rows[i].mean));
    }
    svg << "\"/>\n";
    for (const auto& r : s.rows) {
      const double cx = px(r.group);
      if (r.standard_error > 0.0) {
        const double top = py(r.mean + r.standard_error);
        const double bot = py(r.mean - r.standard_error);
        svg << "<line x1=\"" << fmt_px(cx) << "\" y1=\"" << fmt_px(top)
            << "\" x2=\"" << fmt_px(cx) << "\" y2=\"" << fmt_px(bot)
            << "\" stroke=\"" << s.color << "\" stroke-width=\"1\"/>\n";
        for (const double ey : {top, bot}) {
          svg << "<line x1=\"" << fmt_px(cx - 3) << "\" y1=\"" << fmt_px(ey)
              << "\" x2=\"" << fmt_px(cx + 3) << "\" y2=\"" << fmt_px(ey)
              << "\" stroke=\"" << s.color << "\" stroke-width=\"1\"/>\n";
        }
      }
      svg << "<circle cx=\"" << fmt_px(cx) << "\" cy=\"" << fmt_px(py(r.mean))
          << "\" r=\"3\" fill=\"" << s.color << "\"><title>" << fmt9(r.mean)
          << "</title></circle>\n";
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

std::vector<metrics::EvalRecord> filter_records(
    const std::vector<metrics::EvalRecord>& records, model::Variant variant) {
  std::vector<metrics::EvalRecord> out;
  for (const auto& r : records) {
    if (r.variant == variant) out.push_back(r);
  }
  return out;
}

std::vector<metrics::EvalRecord> filter_records(
    const std::vector<metrics::EvalRecord>& records, model::Variant variant,
    curriculum::Kind kind) {
  std::vector<metrics::EvalRecord> out;
  for (const auto& r : records) {
    if (r.variant == variant && r.curriculum == kind) out.push_back(r);
  }
  return out;
}

const char* series_color(model::Variant v, curriculum::Kind k) {
  if (v == model::Variant::baseline) return "#555555";
  switch (k) {
    case curriculum::Kind::none: return "#1f77b4";
    case curriculum::Kind::plain: return "#2ca02c";
    case curriculum::Kind::mixed: return "#d62728";
  }
  return "#000000";
}

}  // namespace

void run_report(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto eval_records =
      metrics::read_results_csv(eval_sir_csv_path(cfg));
  const auto sweep_records =
      metrics::read_results_csv(sweep_rho_csv_path(cfg));
  ensure_dir(report_dir(cfg));

  // Curriculum cells present in the sweep, in enum order.
  std::set<curriculum::Kind> kind_set;
  for (const auto& r : sweep_records) {
    if (r.variant == model::Variant::brain_informed) {
      kind_set.insert(r.curriculum);
    }
  }
  const std::vector<curriculum::Kind> kinds(kind_set.begin(), kind_set.end());

  // (a) SIR improvement against the input SIR grid, oracle cue.
  {
    std::string csv =
        "variant,curriculum,input_sir_db,mean_siri_db,se_siri_db,count\n";
    std::vector<PlotSeries> series;
    for (const auto variant :
         {model::Variant::baseline, model::Variant::brain_informed}) {
      const auto rows = metrics::aggregate(
          filter_records(eval_records, variant), metrics::GroupBy::input_sir);
      for (const auto& row : rows) {
        csv += std::string(model::variant_name(variant)) + "," +
               curriculum::kind_name(curriculum::Kind::none) + "," +
               fmt9(row.group) + "," + fmt9(row.mean) + "," +
               fmt9(row.standard_error) + "," + std::to_string(row.count) +
               "\n";
      }
      PlotSeries s;
      s.label = model::variant_name(variant);
      s.color = series_color(variant, curriculum::Kind::none);
      s.rows = rows;
      series.push_back(std::move(s));
    }
    write_file_atomic(report_dir(cfg) + "/siri_vs_input_sir.csv", csv);
    write_file_atomic(
        report_dir(cfg) + "/siri_vs_input_sir.svg",
        render_plot("SIR improvement vs input SIR, oracle cue",
                    "input SIR (dB)", "mean SIRi (dB)", series));
  }

  // (b) SIR improvement against cue reliability, per curriculum cell.
  {
    std::string csv = "variant,curriculum,rho,mean_siri_db,se_siri_db,count\n";
    std::vector<PlotSeries> series;
    for (const auto kind : kinds) {
      const auto rows = metrics::aggregate(
          filter_records(sweep_records, model::Variant::brain_informed, kind),
          metrics::GroupBy::rho);
      for (const auto& row : rows) {
        csv += std::string(model::variant_name(
                   model::Variant::brain_informed)) +
               "," + curriculum::kind_name(kind) + "," + fmt9(row.group) +
               "," + fmt9(row.mean) + "," + fmt9(row.standard_error) + "," +
               std::to_string(row.count) + "\n";
      }
      PlotSeries s;
      s.label = curriculum::kind_name(kind);
      s.color = series_color(model::Variant::brain_informed, kind);
      s.rows = rows;
      series.push_back(std::move(s));
    }
    write_file_atomic(report_dir(cfg) + "/siri_vs_rho.csv", csv);
    write_file_atomic(
        report_dir(cfg) + "/siri_vs_rho.svg",
        render_plot("SIR improvement vs cue reliability",
                    "cue-target correlation", "mean SIRi (dB)", series));
  }

  // (c) Electrode-wise correlation at the degraded-cue operating point
  // (the sweep rho closest to 0.7), with the cue-free baseline pooled over
  // its SIR grid for reference.
  {
    double rho_star = 0.0;
    bool have_rho = false;
    for (const auto& r : sweep_records) {
      if (!have_rho || std::abs(r.rho - 0.7) < std::abs(rho_star - 0.7) ||
          (std::abs(r.rho - 0.7) == std::abs(rho_star - 0.7) &&
           r.rho < rho_star)) {
        rho_star = r.rho;
        have_rho = true;
      }
    }

    std::string csv =
        "variant,curriculum,rho,electrode,mean_lcc,se_lcc,count\n";
    std::vector<PlotSeries> series;

    const auto base_rows =
        metrics::aggregate(filter_records(eval_records,
                                          model::Variant::baseline),
                           metrics::GroupBy::electrode);
    for (const auto& row : base_rows) {
      csv += std::string(model::variant_name(model::Variant::baseline)) +
             "," + curriculum::kind_name(curriculum::Kind::none) + "," +
             fmt9(1.0) + "," + fmt9(row.group) + "," + fmt9(row.mean) + "," +
             fmt9(row.standard_error) + "," + std::to_string(row.count) +
             "\n";
    }
    PlotSeries base_series;
    base_series.label = model::variant_name(model::Variant::baseline);
    base_series.color =
        series_color(model::Variant::baseline, curriculum::Kind::none);
    base_series.rows = base_rows;
    series.push_back(std::move(base_series));

    for (const auto kind : kinds) {
      std::vector<metrics::EvalRecord> cell;
      for (const auto& r : sweep_records) {
        if (r.variant == model::Variant::brain_informed &&
            r.curriculum == kind && r.rho == rho_star) {
          cell.push_back(r);
        }
      }
      const auto rows =
          metrics::aggregate(cell, metrics::GroupBy::electrode);
      for (const auto& row : rows) {
        csv += std::string(model::variant_name(
                   model::Variant::brain_informed)) +
               "," + curriculum::kind_name(kind) + "," + fmt9(rho_star) +
               "," + fmt9(row.group) + "," + fmt9(row.mean) + "," +
               fmt9(row.standard_error) + "," + std::to_string(row.count) +
               "\n";
      }
      PlotSeries s;
      s.label = curriculum::kind_name(kind);
      s.color = series_color(model::Variant::brain_informed, kind);
      s.rows = rows;
      series.push_back(std::move(s));
    }
    write_file_atomic(report_dir(cfg) + "/lcc_per_electrode.csv", csv);
    const std::string title = have_rho
                                  ? "Electrode-wise correlation, cue at " +
                                        fmt9(rho_star) + " reliability"
                                  : "Electrode-wise correlation";
    write_file_atomic(report_dir(cfg) + "/lcc_per_electrode.svg",
                      render_plot(title, "electrode", "mean LCC", series));
  }
}

// ---------------------------------------------------------------------------
// Selfcheck: fast, deterministic invariant probes.
// ---------------------------------------------------------------------------

namespace {

struct CheckResult {
  std::string name;
  bool ok = false;
  std::string detail;
};

TensorT<double> random_tensor(int rows, int cols, Rng& rng, double scale) {
  TensorT<double> t(rows, cols);
  for (auto& v : t.data) v = scale * rng.gaussian();
  return t;
}

// Central finite differences against the tape's analytic gradients on a tiny
// double-precision brain-informed model. `inject` perturbs the analytic
// gradients first; a healthy checker must then report failure.
CheckResult check_gradients(bool inject) {
  CheckResult res;
  res.name = "gradient-check";

  model::ModelConfig cfg;
  cfg.kernel_length = 8;
  cfg.stride = 4;
  cfg.num_filters = 6;
  cfg.bottleneck_channels = 6;
  cfg.hidden_channels = 8;
  cfg.num_stacks = 1;
  cfg.blocks_per_stack = 2;
  cfg.depthwise_kernel = 3;
  cfg.num_electrodes = 4;
  auto bundle = model::build_model<double>(model::Variant::brain_informed,
                                           cfg, 20240u);
  // Freshly built models have zero biases, so rectified features gate whole
  // frames to exactly zero and later pre-activations sit exactly on prelu
  // kinks, where difference quotients measure the average branch slope.
  // Jitter to a generic point before probing.
  {
    Rng jitter(20241u);
    for (auto& p : bundle.params) {
      for (auto& v : p.value.data) {
        v +=
            jitter.uniform(0.02, 0.08) * (jitter.uniform() < 0.5 ? -1.0 : 1.0);
      }
    }
  }

  const int T = 48;
  const int K = cfg.frames_for(T);
  Rng rng(77u);
  const TensorT<double> mixture = random_tensor(1, T, rng, 0.5);
  const TensorT<double> cue = random_tensor(1, T, rng, 0.5);
  TensorT<double> target(cfg.num_electrodes, K);
  for (auto& v : target.data) v = rng.uniform();

  const auto loss_value = [&](const model::ModelBundleT<double>& b) {
    nn::TapeT<double> tape(false);
    const auto fr = model::forward(tape, b, mixture, &cue);
    const int loss = tape.frame_mse(fr.output_id, target);
    return tape.value(loss).data[0];
  };

  nn::TapeT<double> tape;
  const auto fr = model::forward(tape, bundle, mixture, &cue);
  const int loss = tape.frame_mse(fr.output_id, target);
  tape.backward(loss);

  std::vector<TensorT<double>> analytic;
  analytic.reserve(bundle.params.size());
  for (std::size_t i = 0; i < bundle.params.size(); ++i) {
    analytic.push_back(tape.grad(fr.param_ids[i]));
    if (inject) {
      for (auto& g : analytic.back().data) g = g * 1.02 + 1e-3;
    }
  }

  const double h = 1e-5;
  double max_rel = 0.0;
  std::string worst;
  for (std::size_t i = 0; i < bundle.params.size(); ++i) {
    auto& value = bundle.params[i].value;
    const std::size_t n = value.numel();
    const std::size_t picks[3] = {0, n / 2, n - 1};
    for (const std::size_t j : picks) {
      const double saved = value.data[j];
      value.data[j] = saved + h;
      const double up = loss_value(bundle);
      value.data[j] = saved - h;
      const double down = loss_value(bundle);
      value.data[j] = saved;
      const double fd = (up - down) / (2.0 * h);
      const double ana = analytic[i].data[j];
      const double rel = std::abs(ana - fd) /
                         std::max({std::abs(ana), std::abs(fd), 1e-4});
      if (rel > max_rel) {
        max_rel = rel;
        worst = bundle.params[i].name;
      }
    }
  }
  res.ok = max_rel < 1e-4;
  res.detail = "max relative error " + fmt9(max_rel) +
               (worst.empty() ? "" : " (" + worst + ")");
  return res;
}

// Output frame k may depend on input samples [0, k*stride + kernel) only;
// gradients past that bound must be exactly zero for both variants.
CheckResult check_causality() {
  CheckResult res;
  res.name = "causality";
  res.ok = true;

  model::ModelConfig cfg;  // shipped geometry
  const int T = 720;
  const int K = cfg.frames_for(T);
  const int probe = K / 2;
  const std::size_t future_start = static_cast<std::size_t>(
      probe * cfg.stride + cfg.kernel_length);

  Rng rng(311u);
  const TensorT<float> mixture = [&] {
    TensorT<float> t(1, T);
    for (auto& v : t.data) v = static_cast<float>(0.5 * rng.gaussian());
    return t;
  }();
  const TensorT<float> cue = [&] {
    TensorT<float> t(1, T);
    for (auto& v : t.data) v = static_cast<float>(0.5 * rng.gaussian());
    return t;
  }();

  for (const auto variant :
       {model::Variant::baseline, model::Variant::brain_informed}) {
    const auto bundle = model::build_model<float>(variant, cfg, 99u);
    nn::TapeT<float> tape;
    const auto fr =
        variant == model::Variant::brain_informed
            ? model::forward(tape, bundle, mixture, &cue)
            : model::forward(tape, bundle, mixture, nullptr);
    tape.backward(tape.frame_pick_sum(fr.output_id, probe));

    std::vector<int> probes = {fr.input_id};
    if (fr.cue_id >= 0) probes.push_back(fr.cue_id);
    for (const int id : probes) {
      const auto& g = tape.grad(id);
      double past_mag = 0.0;
      for (std::size_t t = 0; t < g.numel(); ++t) {
        if (t >= future_start) {
          if (g.data[t] != 0.0f) {
            res.ok = false;
            res.detail = std::string(model::variant_name(variant)) +
                         ": nonzero gradient at future sample " +
                         std::to_string(t);
          }
        } else {
          past_mag = std::max(past_mag, std::abs(double(g.data[t])));
        }
      }
      if (past_mag == 0.0) {
        res.ok = false;
        res.detail = std::string(model::variant_name(variant)) +
                     ": gradient vanished inside the receptive field";
      }
    }
  }
  if (res.ok) {
    res.detail = "no gradient beyond sample " +
                 std::to_string(future_start - 1) + " for probe frame " +
                 std::to_string(probe);
  }
  return res;
}

CheckResult check_schedule() {
  CheckResult res;
  res.name = "noise-schedule";
  res.ok = true;

  const curriculum::CurriculumConfig cfg;
  const struct {
    int epoch;
    double expected;
  } table[] = {{0, 0.0},   {9, 0.0},   {10, 0.05}, {14, 0.05}, {15, 0.10},
               {20, 0.15}, {64, 0.55}, {65, 0.60}, {70, 0.60}, {500, 0.60}};
  for (const auto& row : table) {
    const double got = curriculum::schedule_sigma(row.epoch, cfg);
    if (std::abs(got - row.expected) > 1e-12) {
      res.ok = false;
      res.detail = "sigma(" + std::to_string(row.epoch) + ") = " + fmt9(got) +
                   ", expected " + fmt9(row.expected);
      return res;
    }
  }

  // Mixed-rule branch frequencies at a saturated epoch.
  const int draws = 200000;
  const int epoch = 100;
  const double sched = curriculum::schedule_sigma(epoch, cfg);
  int clean = 0, scheduled = 0, uniform = 0;
  for (int i = 0; i < draws; ++i) {
    const double s = curriculum::sample_mixed_sigma(
        epoch, cfg, Rng::derive(424242u, {static_cast<std::uint64_t>(i)}));
    if (s < 0.0 || s > sched + 1e-15) {
      res.ok = false;
      res.detail = "mixed draw " + fmt9(s) + " outside [0, " + fmt9(sched) +
                   "]";
      return res;
    }
    if (s == 0.0) {
      ++clean;
    } else if (s == sched) {
      ++scheduled;
    } else {
      ++uniform;
    }
  }
  const double fc = double(clean) / draws;
  const double fs = double(scheduled) / draws;
  const double fu = double(uniform) / draws;
  if (std::abs(fc - cfg.p_clean) > 0.01 ||
      std::abs(fs - cfg.p_scheduled) > 0.01 ||
      std::abs(fu - cfg.p_uniform) > 0.01) {
    res.ok = false;
    res.detail = "mixed branch rates " + fmt9(fc) + "/" + fmt9(fs) + "/" +
                 fmt9(fu) + " drifted from " + fmt9(cfg.p_clean) + "/" +
                 fmt9(cfg.p_scheduled) + "/" + fmt9(cfg.p_uniform);
    return res;
  }
  res.detail = "staircase exact; mixed branch rates " + fmt9(fc) + "/" +
               fmt9(fs) + "/" + fmt9(fu);
  return res;
}

CheckResult check_pit() {
  CheckResult res;
  res.name = "pit-assignment";
  res.ok = true;

  Rng rng(5150u);
  const auto random_egm = [&](int m, int k) {
    ace::Electrodogram e;
    e.num_electrodes = m;
    e.num_frames = k;
    e.frame_rate = 1000.0;
    e.values.resize(static_cast<std::size_t>(m) * k);
    for (auto& v : e.values) v = static_cast<float>(rng.uniform());
    return e;
  };

  for (int trial = 0; trial < 200; ++trial) {
    const auto t1 = random_egm(3, 5);
    const auto t2 = random_egm(3, 5);
    const auto o1 = random_egm(3, 5);
    const auto o2 = random_egm(3, 5);

    const auto direct = loss::pit_mse(o1, o2, t1, t2);
    const auto flipped_outputs = loss::pit_mse(o2, o1, t1, t2);
    const auto flipped_targets = loss::pit_mse(o1, o2, t2, t1);
    if (std::abs(direct.loss - flipped_outputs.loss) > 1e-6 ||
        std::abs(direct.loss - flipped_targets.loss) > 1e-6) {
      res.ok = false;
      res.detail = "loss changed under output/target relabeling";
      return res;
    }
    if (flipped_outputs.assignment == direct.assignment) {
      res.ok = false;
      res.detail = "assignment failed to flip with the outputs";
      return res;
    }

    const auto oracle = loss::pit_mse(t1, t2, t1, t2);
    if (oracle.loss != 0.0 ||
        oracle.assignment != loss::Assignment::identity) {
      res.ok = false;
      res.detail = "oracle outputs did not give zero loss via identity";
      return res;
    }
    const auto swapped = loss::pit_mse(t2, t1, t1, t2);
    if (swapped.loss != 0.0 || swapped.assignment != loss::Assignment::swap) {
      res.ok = false;
      res.detail = "swapped oracle outputs did not give zero loss via swap";
      return res;
    }
  }
  res.detail = "200 random instances: relabeling-invariant, oracle-exact";
  return res;
}

CheckResult check_cue_noise() {
  CheckResult res;
  res.name = "cue-noise-law";
  res.ok = true;

  const int n = 200000;
  Rng rng(8086u);
  dsp::AttentionCue cue;
  cue.sample_rate = 64.0;
  cue.samples.resize(n);
  for (auto& v : cue.samples) v = rng.gaussian();
  cue = dsp::standardize_cue(cue);

  int case_id = 0;
  for (const double sigma : {0.5, 1.0, 2.0}) {
    const double expected = 1.0 / std::sqrt(1.0 + sigma * sigma);
    const auto noisy = dsp::degrade_cue(
        cue, sigma, Rng::derive(31337u, {static_cast<std::uint64_t>(
                                   case_id++)}));
    const double measured = dsp::correlation(cue.samples, noisy.samples);
    if (std::abs(measured - expected) > 0.01) {
      res.ok = false;
      res.detail = "sigma " + fmt9(sigma) + ": correlation " +
                   fmt9(measured) + " vs expected " + fmt9(expected);
      return res;
    }
  }
  for (const double rho : {0.3, 0.7}) {
    const double sigma = dsp::sigma_for_rho(rho, 1.0);
    const auto noisy = dsp::degrade_cue(
        cue, sigma, Rng::derive(31337u, {static_cast<std::uint64_t>(
                                   case_id++)}));
    const double measured = dsp::correlation(cue.samples, noisy.samples);
    if (std::abs(measured - rho) > 0.01) {
      res.ok = false;
      res.detail = "target correlation " + fmt9(rho) + ": measured " +
                   fmt9(measured);
      return res;
    }
  }
  res.detail = "measured correlations within 0.01 of 1/sqrt(1+sigma^2)";
  return res;
}

CheckResult check_determinism() {
  CheckResult res;
  res.name = "determinism";
  res.ok = true;

  Rng a(12345u), b(12345u);
  const auto ua = data::synth_utterance(0.25, 16000.0, a);
  const auto ub = data::synth_utterance(0.25, 16000.0, b);
  if (ua.samples != ub.samples) {
    res.ok = false;
    res.detail = "same-seed synthesis diverged";
    return res;
  }

  model::ModelConfig cfg;
  cfg.num_filters = 16;
  cfg.bottleneck_channels = 16;
  cfg.hidden_channels = 32;
  cfg.num_stacks = 1;
  cfg.blocks_per_stack = 2;
  cfg.num_electrodes = 6;
  const auto m1 =
      model::build_model<float>(model::Variant::brain_informed, cfg, 7u);
  const auto m2 =
      model::build_model<float>(model::Variant::brain_informed, cfg, 7u);
  for (std::size_t i = 0; i < m1.params.size(); ++i) {
    if (m1.params[i].value.data != m2.params[i].value.data) {
      res.ok = false;
      res.detail = "same-seed initialization diverged at " +
                   m1.params[i].name;
      return res;
    }
  }

  ace::AceConfig ace_cfg;
  const auto map = ace::ClinicalMap::normalized(ace_cfg.num_electrodes);
  const auto e1 = ace::encode(ua, ace_cfg, map);
  const auto e2 = ace::encode(ub, ace_cfg, map);
  if (e1.values != e2.values) {
    res.ok = false;
    res.detail = "same-input encoding diverged";
    return res;
  }
  res.detail = "synthesis, initialization and encoding repeat bit-exactly";
  return res;
}

}  // namespace

bool run_selfcheck(const std::string& inject_bug) {
  if (!inject_bug.empty() && inject_bug != "gradient") {
    throw ConfigError("selfcheck: unknown fixture '" + inject_bug + "'");
  }
  std::vector<CheckResult> results;
  results.push_back(check_gradients(inject_bug == "gradient"));
  results.push_back(check_causality());
  results.push_back(check_schedule());
  results.push_back(check_pit());
  results.push_back(check_cue_noise());
  results.push_back(check_determinism());

  bool all_ok = true;
  for (const auto& r : results) {
    std::printf("%s %-16s %s\n", r.ok ? "[ ok ]" : "[FAIL]", r.name.c_str(),
                r.detail.c_str());
    all_ok = all_ok && r.ok;
  }
  std::fflush(stdout);
  return all_ok;
}

}  // namespace bisep::experiment
