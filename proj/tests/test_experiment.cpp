// tests/test_experiment.cpp

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

#include <cctype>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "bisep/errors.hpp"
#include "bisep/metrics.hpp"
#include "doctest.h"

namespace {

using namespace bisep;

std::string temp_dir(const char* tag) {
  static int counter = 0;
  const auto dir = std::filesystem::temp_directory_path() /
                   (std::string("bisep_experiment_") + tag + "_" +
                    std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(bool(in));
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

// A configuration small enough for an end-to-end run in seconds. The model
// stride (8) matches the codec hop (16000 / 2000).
experiment::ExperimentConfig smoke_config(const std::string& out_dir) {
  auto cfg = experiment::default_config();
  cfg.train_count = 3;
  cfg.valid_count = 2;
  cfg.test_count = 2;
  cfg.duration_s = 0.5;

  cfg.model.kernel_length = 16;
  cfg.model.stride = 8;
  cfg.model.num_filters = 16;
  cfg.model.bottleneck_channels = 16;
  cfg.model.hidden_channels = 32;
  cfg.model.num_stacks = 1;
  cfg.model.blocks_per_stack = 2;
  cfg.model.num_electrodes = 6;

  cfg.ace.num_electrodes = 6;
  cfg.ace.n_sel = 3;
  cfg.ace.frame_rate = 2000.0;
  cfg.ace.analysis_window = 64;

  cfg.train.max_epochs = 2;
  cfg.train.batch_size = 2;
  cfg.train.crop_s = 0.25;

  cfg.rho_grid = {0.6, 1.0};
  cfg.sir_grid = {0.0, 10.0};
  cfg.out_dir = out_dir;
  cfg.master_seed = 11;
  return cfg;
}

// Minimal XML well-formedness: every opened element is closed in order.
bool svg_well_formed(const std::string& text) {
  std::vector<std::string> stack;
  std::string::size_type i = 0;
  while ((i = text.find('<', i)) != std::string::npos) {
    const auto j = text.find('>', i);
    if (j == std::string::npos) return false;
    std::string tag = text.substr(i + 1, j - i - 1);
    i = j + 1;
    if (tag.empty() || tag[0] == '?' || tag[0] == '!') continue;
    const bool closing = tag[0] == '/';
    const bool self_closing = !closing && tag.back() == '/';
    if (closing) tag = tag.substr(1);
    std::string name;
    for (const char c : tag) {
      if (std::isspace(static_cast<unsigned char>(c)) || c == '/') break;
      name += c;
    }
    if (name.empty()) return false;
    if (closing) {
      if (stack.empty() || stack.back() != name) return false;
      stack.pop_back();
    } else if (!self_closing) {
      stack.push_back(name);
    }
  }
  return stack.empty();
}

std::vector<std::string> extract_titles(const std::string& svg) {
  std::vector<std::string> titles;
  std::string::size_type i = 0;
  while ((i = svg.find("<title>", i)) != std::string::npos) {
    const auto j = svg.find("</title>", i);
    REQUIRE(j != std::string::npos);
    titles.push_back(svg.substr(i + 7, j - i - 7));
    i = j + 8;
  }
  return titles;
}

}  // namespace

TEST_CASE("default config is valid with the documented grids") {
  const auto cfg = experiment::default_config();
  CHECK_NOTHROW(cfg.validate());
  REQUIRE(cfg.rho_grid.size() == 9);
  CHECK(cfg.rho_grid.front() == 0.2);
  CHECK(cfg.rho_grid.back() == 1.0);
  REQUIRE(cfg.sir_grid.size() == 5);
  CHECK(cfg.sir_grid[2] == 5.0);
  REQUIRE(cfg.curricula.size() == 3);
  CHECK(cfg.model.stride == cfg.ace.hop());
}

TEST_CASE("options apply to nested configs and reject bad input") {
  auto cfg = experiment::default_config();
  experiment::apply_option(cfg, "hidden_channels", "96");
  CHECK(cfg.model.hidden_channels == 96);
  experiment::apply_option(cfg, "learning_rate", "0.005");
  CHECK(cfg.train.learning_rate == 0.005);
  experiment::apply_option(cfg, "n_start", "2");
  CHECK(cfg.curriculum.n_start == 2);
  experiment::apply_option(cfg, "curricula", "none, mixed");
  REQUIRE(cfg.curricula.size() == 2);
  CHECK(cfg.curricula[1] == curriculum::Kind::mixed);
  experiment::apply_option(cfg, "rho_grid", "0.5,1.0");
  REQUIRE(cfg.rho_grid.size() == 2);
  CHECK(cfg.rho_grid[0] == 0.5);
  experiment::apply_option(cfg, "seed", "99");
  CHECK(cfg.master_seed == 99);

  // Electrode count propagates to both the model and the codec.
  experiment::apply_option(cfg, "num_electrodes", "12");
  CHECK(cfg.model.num_electrodes == 12);
  CHECK(cfg.ace.num_electrodes == 12);

  CHECK_THROWS_AS(experiment::apply_option(cfg, "no_such_key", "1"),
                  ConfigError);
  CHECK_THROWS_AS(experiment::apply_option(cfg, "max_epochs", "ten"),
                  ConfigError);
  CHECK_THROWS_AS(experiment::apply_option(cfg, "duration_s", "3.0x"),
                  ConfigError);
}

TEST_CASE("config files parse comments and fail loudly") {
  const auto dir = temp_dir("cfg");
  const std::string path = dir + "/run.cfg";
  {
    std::ofstream out(path);
    out << "# experiment overrides\n"
        << "\n"
        << "max_epochs = 7\n"
        << "out_dir = " << dir << "/out\n"
        << "sir_grid = 0, 5, 10\n";
  }
  const auto cfg = experiment::load_config_file(path);
  CHECK(cfg.train.max_epochs == 7);
  CHECK(cfg.out_dir == dir + "/out");
  REQUIRE(cfg.sir_grid.size() == 3);
  CHECK(cfg.sir_grid[1] == 5.0);

  {
    std::ofstream out(path);
    out << "max_epochs 7\n";
  }
  CHECK_THROWS_AS(experiment::load_config_file(path), ConfigError);
  CHECK_THROWS_AS(experiment::load_config_file(dir + "/missing.cfg"),
                  IoError);
}

TEST_CASE("validation enforces one frame grid across model and codec") {
  const auto dir = temp_dir("val");
  auto cfg = smoke_config(dir + "/out");
  CHECK_NOTHROW(cfg.validate());

  auto bad = cfg;
  bad.ace.frame_rate = 500.0;  // hop 32 vs stride 8
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = cfg;
  bad.model.num_electrodes = 5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = cfg;
  bad.model.sample_rate = 8000.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = cfg;
  bad.rho_grid = {0.5, 1.5};
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = cfg;
  bad.rho_grid.clear();
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = cfg;
  bad.threads = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = cfg;
  bad.curricula = {curriculum::Kind::mixed, curriculum::Kind::mixed};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("atomic writes replace files whole and leave no temp behind") {
  const auto dir = temp_dir("atomic");
  const std::string path = dir + "/table.csv";
  experiment::write_file_atomic(path, "a,b\n1,2\n");
  CHECK(slurp(path) == "a,b\n1,2\n");
  experiment::write_file_atomic(path, "a,b\n3,4\n");
  CHECK(slurp(path) == "a,b\n3,4\n");
  CHECK_FALSE(std::filesystem::exists(path + ".tmp"));
}

TEST_CASE("pipeline smoke run produces coherent artifacts end to end") {
  const auto dir = temp_dir("smoke");
  const auto cfg = smoke_config(dir + "/out");

  // Data, cues, codec targets.
  const auto manifest = experiment::run_synth_data(cfg);
  CHECK(manifest.entries.size() == 7);
  CHECK(std::filesystem::exists(experiment::manifest_path(cfg)));
  experiment::run_cue_gen(cfg);
  experiment::run_ace_encode(cfg);
  for (const auto& e : manifest.entries) {
    CHECK(std::filesystem::exists(cfg.out_dir + "/cues/" + e.id + ".wav"));
    CHECK(std::filesystem::exists(cfg.out_dir + "/egm/" + e.id + ".egm"));
  }
  {
    const AudioSignal cue =
        wav::read(cfg.out_dir + "/cues/" + manifest.entries[0].id + ".wav");
    CHECK(cue.size() == 8000);  // sample-aligned with the audio
    const auto egm = ace::read_electrodogram(
        cfg.out_dir + "/egm/" + manifest.entries[0].id + ".egm");
    CHECK(egm.num_electrodes == 6);
    CHECK(egm.num_frames == cfg.model.frames_for(8000));
  }

  // All four model cells.
  experiment::run_train(cfg, model::Variant::baseline,
                        curriculum::Kind::none);
  for (const auto kind : cfg.curricula) {
    experiment::run_train(cfg, model::Variant::brain_informed, kind);
  }
  for (const auto kind : cfg.curricula) {
    const auto ckpt = experiment::checkpoint_path(
        cfg, model::Variant::brain_informed, kind);
    CHECK(std::filesystem::exists(ckpt));
    CHECK(model::load_checkpoint(ckpt).model.variant ==
          model::Variant::brain_informed);
    CHECK(std::filesystem::exists(experiment::history_path(
        cfg, model::Variant::brain_informed, kind)));
  }
  CHECK(std::filesystem::exists(experiment::checkpoint_path(
      cfg, model::Variant::baseline, curriculum::Kind::none)));

  // Oracle-cue evaluation: one row per (pair, grid SIR, variant), baseline
  // first within each condition.
  experiment::run_eval_sir(cfg);
  const auto eval_rows =
      metrics::read_results_csv(experiment::eval_sir_csv_path(cfg));
  REQUIRE(eval_rows.size() == 2 * 2 * 2);
  CHECK(eval_rows[0].variant == model::Variant::baseline);
  CHECK(eval_rows[1].variant == model::Variant::brain_informed);
  CHECK(eval_rows[0].utt_id == eval_rows[1].utt_id);
  CHECK(eval_rows[0].input_sir_db == 0.0);
  CHECK(eval_rows[2].input_sir_db == 10.0);
  CHECK(eval_rows[4].utt_id != eval_rows[0].utt_id);
  for (const auto& r : eval_rows) {
    CHECK(r.curriculum == curriculum::Kind::none);
    CHECK(r.rho == 1.0);
    REQUIRE(r.lcc.size() == 6);
  }

  // The parallel path must not change a byte.
  const std::string eval_bytes = slurp(experiment::eval_sir_csv_path(cfg));
  auto threaded = cfg;
  threaded.threads = 2;
  experiment::run_eval_sir(threaded);
  CHECK(slurp(experiment::eval_sir_csv_path(cfg)) == eval_bytes);

  // Reliability sweep: one row per (pair, rho, curriculum cell).
  experiment::run_sweep_rho(cfg);
  const auto sweep_rows =
      metrics::read_results_csv(experiment::sweep_rho_csv_path(cfg));
  REQUIRE(sweep_rows.size() == 2 * 2 * 3);
  for (std::size_t i = 0; i < sweep_rows.size(); i += 3) {
    // Same degraded cue feeds every cell of a (pair, rho) condition.
    CHECK(sweep_rows[i].rho_measured == sweep_rows[i + 1].rho_measured);
    CHECK(sweep_rows[i].rho_measured == sweep_rows[i + 2].rho_measured);
    CHECK(sweep_rows[i].curriculum == curriculum::Kind::none);
    CHECK(sweep_rows[i + 1].curriculum == curriculum::Kind::plain);
    CHECK(sweep_rows[i + 2].curriculum == curriculum::Kind::mixed);
  }
  for (const auto& r : sweep_rows) {
    CHECK(r.variant == model::Variant::brain_informed);
    if (r.rho == 1.0) {
      CHECK(r.rho_measured == 1.0);  // oracle cue is bit-identical
    } else {
      CHECK(r.rho_measured > 0.2);
      CHECK(r.rho_measured < 0.95);
    }
  }

  // Report: tables + plots, reproducible byte for byte.
  experiment::run_report(cfg);
  const auto report = experiment::report_dir(cfg);
  const char* stems[] = {"siri_vs_input_sir", "siri_vs_rho",
                         "lcc_per_electrode"};
  std::vector<std::string> csv_bytes, svg_bytes;
  for (const auto* stem : stems) {
    csv_bytes.push_back(slurp(report + "/" + stem + ".csv"));
    svg_bytes.push_back(slurp(report + "/" + stem + ".svg"));
  }
  experiment::run_report(cfg);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(slurp(report + "/" + stems[i] + ".csv") == csv_bytes[i]);
    CHECK(slurp(report + "/" + stems[i] + ".svg") == svg_bytes[i]);
  }

  CHECK(csv_bytes[0].rfind(
            "variant,curriculum,input_sir_db,mean_siri_db,se_siri_db,count\n",
            0) == 0);
  CHECK(csv_bytes[1].rfind(
            "variant,curriculum,rho,mean_siri_db,se_siri_db,count\n", 0) ==
        0);
  CHECK(csv_bytes[2].rfind(
            "variant,curriculum,rho,electrode,mean_lcc,se_lcc,count\n", 0) ==
        0);

  // Every plotted mean is the exact string written to the backing table.
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(svg_well_formed(svg_bytes[i]));
    const auto titles = extract_titles(svg_bytes[i]);
    CHECK(!titles.empty());
    for (const auto& t : titles) {
      CHECK(csv_bytes[i].find("," + t + ",") != std::string::npos);
    }
  }
}

TEST_CASE("selfcheck passes clean and flags an injected gradient bug") {
  CHECK(experiment::run_selfcheck());
  CHECK_FALSE(experiment::run_selfcheck("gradient"));
  CHECK_THROWS_AS(experiment::run_selfcheck("optimizer"), ConfigError);
}
