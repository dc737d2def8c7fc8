// tools/bisep_main.cpp

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

// Experiment driver. Every stage reads one key=value config (defaults are
// baked in; --config overrides; --seed/--out/--threads override the config)
// and writes its artifacts under the output directory, so a full run is:
//
//   bisep synth-data && bisep cue-gen && bisep ace-encode
//   bisep train --variant baseline
//   bisep train --variant brain_informed --curriculum none   (plain, mixed)
//   bisep eval-sir && bisep sweep-rho && bisep report
//
// Exit codes: 0 success, 1 invariant/validation failure, 2 I/O or config
// error (including command-line errors).

#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "bisep/errors.hpp"
#include "bisep/experiment.hpp"

namespace {

using namespace bisep;

struct GlobalArgs {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  int threads = 0;
  bool seed_set = false;
  bool out_set = false;
  bool threads_set = false;
};

experiment::ExperimentConfig resolve_config(const GlobalArgs& args) {
  experiment::ExperimentConfig cfg =
      args.config_path.empty() ? experiment::default_config()
                               : experiment::load_config_file(args.config_path);
  if (args.out_set) cfg.out_dir = args.out_dir;
  if (args.seed_set) cfg.master_seed = args.seed;
  if (args.threads_set) cfg.threads = args.threads;
  cfg.validate();
  return cfg;
}

void add_global_flags(CLI::App* cmd, GlobalArgs& args) {
  cmd->add_option("--config", args.config_path,
                  "key=value config file (defaults apply otherwise)");
  cmd->add_option("--out", args.out_dir, "output directory")
      ->each([&](const std::string&) { args.out_set = true; });
  cmd->add_option("--seed", args.seed, "master seed")
      ->each([&](const std::string&) { args.seed_set = true; });
  cmd->add_option("--threads", args.threads,
                  "worker threads for evaluation loops")
      ->each([&](const std::string&) { args.threads_set = true; });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Brain-informed speech separation: corpus synthesis, training, "
      "evaluation and reporting"};
  app.require_subcommand(1);

  GlobalArgs args;

  auto* synth = app.add_subcommand(
      "synth-data", "Synthesize the two-talker corpus and its manifest");
  add_global_flags(synth, args);

  auto* cue_gen = app.add_subcommand(
      "cue-gen", "Write clean standardized attention cues per utterance");
  add_global_flags(cue_gen, args);

  auto* ace_encode = app.add_subcommand(
      "ace-encode", "Write clean-target electrodograms per utterance");
  add_global_flags(ace_encode, args);

  auto* train_cmd =
      app.add_subcommand("train", "Train one (variant, curriculum) cell");
  add_global_flags(train_cmd, args);
  std::string variant_name = "brain_informed";
  std::string curriculum_name = "mixed";
  train_cmd->add_option("--variant", variant_name,
                        "baseline or brain_informed");
  train_cmd->add_option("--curriculum", curriculum_name,
                        "none, plain or mixed (ignored by the baseline)");

  auto* eval_sir = app.add_subcommand(
      "eval-sir",
      "Score both variants with oracle cues across the input-SIR grid");
  add_global_flags(eval_sir, args);

  auto* sweep_rho = app.add_subcommand(
      "sweep-rho",
      "Score every curriculum cell across the cue-reliability grid");
  add_global_flags(sweep_rho, args);

  auto* report = app.add_subcommand(
      "report", "Render CSV tables and SVG plots from the results");
  add_global_flags(report, args);

  auto* selfcheck = app.add_subcommand(
      "selfcheck", "Run the fast invariant suite (one verdict per line)");
  std::string inject_bug;
  selfcheck->add_option("--inject-bug", inject_bug,
                        "test fixture: corrupt a named stage and expect the "
                        "matching check to fail");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // --help exits 0; bad usage is a config error
  }

  try {
    if (synth->parsed()) {
      experiment::run_synth_data(resolve_config(args));
    } else if (cue_gen->parsed()) {
      experiment::run_cue_gen(resolve_config(args));
    } else if (ace_encode->parsed()) {
      experiment::run_ace_encode(resolve_config(args));
    } else if (train_cmd->parsed()) {
      experiment::run_train(resolve_config(args),
                            model::variant_from_name(variant_name),
                            curriculum::kind_from_name(curriculum_name));
    } else if (eval_sir->parsed()) {
      experiment::run_eval_sir(resolve_config(args));
    } else if (sweep_rho->parsed()) {
      experiment::run_sweep_rho(resolve_config(args));
    } else if (report->parsed()) {
      experiment::run_report(resolve_config(args));
    } else if (selfcheck->parsed()) {
      if (!experiment::run_selfcheck(inject_bug)) return 1;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
