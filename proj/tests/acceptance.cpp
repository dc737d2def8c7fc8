// tests/acceptance.cpp

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

// Release gate. Prints one verdict line per criterion on stdout; progress
// goes to stderr. Criteria 7-9 and 11 share two full experiment runs (corpus
// synthesis, four training cells, both evaluations) in the system temp
// directory; everything else runs in-process on small fixtures.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "bisep/ace.hpp"
#include "bisep/autodiff.hpp"
#include "bisep/curriculum.hpp"
#include "bisep/dataset.hpp"
#include "bisep/dsp.hpp"
#include "bisep/errors.hpp"
#include "bisep/experiment.hpp"
#include "bisep/loss.hpp"
#include "bisep/metrics.hpp"
#include "bisep/model.hpp"
#include "bisep/rng.hpp"
#include "bisep/train.hpp"

namespace {

using namespace bisep;

int g_failures = 0;

void verdict(int index, const char* label, bool pass,
             const std::string& detail) {
  std::printf("[%s] %2d. %s — %s\n", pass ? "PASS" : "FAIL", index, label,
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

void progress(const std::string& message) {
  std::fprintf(stderr, "... %s\n", message.c_str());
  std::fflush(stderr);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("acceptance: cannot read " + path);
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

// --------------------------------------------------------------------------
// 1. Noise schedule: staircase values and mixed-branch frequencies.
// --------------------------------------------------------------------------
void criterion_schedule() {
  const curriculum::CurriculumConfig cfg;
  const struct {
    int epoch;
    double expected;
  } table[] = {{0, 0.0},   {9, 0.0},   {10, 0.05}, {14, 0.05}, {15, 0.10},
               {25, 0.20}, {64, 0.55}, {65, 0.60}, {1000, 0.60}};
  bool pass = true;
  std::string detail;
  for (const auto& row : table) {
    const double got = curriculum::schedule_sigma(row.epoch, cfg);
    if (std::abs(got - row.expected) > 1e-12) {
      pass = false;
      detail = "sigma(" + std::to_string(row.epoch) + ") = " + fmt(got) +
               ", expected " + fmt(row.expected);
      break;
    }
  }

  int clean = 0, scheduled = 0, uniform = 0;
  const int draws = 100000;
  const int epoch = 200;  // saturated level
  const double sched = curriculum::schedule_sigma(epoch, cfg);
  for (int i = 0; i < draws; ++i) {
    const double s = curriculum::sample_mixed_sigma(
        epoch, cfg, Rng::derive(90210u, {static_cast<std::uint64_t>(i)}));
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
  if (std::abs(fc - 0.30) > 0.01 || std::abs(fs - 0.65) > 0.01 ||
      std::abs(fu - 0.05) > 0.01) {
    pass = false;
    detail = "mixed branch rates " + fmt(fc) + "/" + fmt(fs) + "/" + fmt(fu);
  }
  if (pass) {
    detail = "staircase exact at 9 probe epochs; mixed branch rates " +
             fmt(fc) + "/" + fmt(fs) + "/" + fmt(fu);
  }
  verdict(1, "cue-noise schedule staircase and mixed-branch rates", pass,
          detail);
}

// --------------------------------------------------------------------------
// 2. Degradation law: measured correlation tracks 1/sqrt(1+sigma^2).
// --------------------------------------------------------------------------
void criterion_rho_law() {
  const int n = 100000;
  Rng rng(64738u);
  dsp::AttentionCue cue;
  cue.sample_rate = 64.0;
  cue.samples.resize(n);
  for (auto& v : cue.samples) v = rng.gaussian();
  cue = dsp::standardize_cue(cue);

  bool pass = true;
  double worst = 0.0;
  std::string detail;
  int case_id = 0;
  for (const double sigma : {0.25, 0.5, 1.0, 2.0}) {
    const double expected = 1.0 / std::sqrt(1.0 + sigma * sigma);
    const auto noisy = dsp::degrade_cue(
        cue, sigma,
        Rng::derive(1701u, {static_cast<std::uint64_t>(case_id++)}));
    const double measured = dsp::correlation(cue.samples, noisy.samples);
    const double dev = std::abs(measured - expected);
    worst = std::max(worst, dev);
    if (dev > 0.02) {
      pass = false;
      detail = "sigma " + fmt(sigma) + ": measured " + fmt(measured) +
               " vs " + fmt(expected);
    }
  }
  if (pass) {
    detail =
        "max deviation " + fmt(worst) + " across sigma {0.25, 0.5, 1, 2}";
  }
  verdict(2, "cue degradation follows the correlation law", pass, detail);
}

// --------------------------------------------------------------------------
// 3. Gradients: finite differences across random small geometries, both
//    variants, probing every parameter tensor.
// --------------------------------------------------------------------------
void criterion_gradients() {
  double max_rel = 0.0;
  std::string worst;
  int probed = 0, skipped = 0;
  Rng rng(4004u);

  for (int trial = 0; trial < 20; ++trial) {
    model::ModelConfig cfg;
    cfg.stride = 2 << rng.uniform_int(0, 1);  // 2 or 4
    cfg.kernel_length = 2 * cfg.stride;
    cfg.num_filters = rng.uniform_int(3, 8);
    cfg.bottleneck_channels = rng.uniform_int(3, 8);
    cfg.hidden_channels = rng.uniform_int(4, 10);
    cfg.num_stacks = rng.uniform_int(1, 2);
    cfg.blocks_per_stack = rng.uniform_int(1, 2);
    cfg.depthwise_kernel = rng.uniform_int(2, 3);
    cfg.num_electrodes = rng.uniform_int(2, 5);
    const auto variant = trial % 2 == 0 ? model::Variant::brain_informed
                                        : model::Variant::baseline;
    auto bundle = model::build_model<double>(
        variant, cfg, 1000u + static_cast<std::uint64_t>(trial));

    const int T = cfg.kernel_length + cfg.stride * rng.uniform_int(5, 12);
    const int K = cfg.frames_for(T);
    TensorT<double> mixture(1, T), cue(1, T);
    for (auto& v : mixture.data) v = 0.5 * rng.gaussian();
    for (auto& v : cue.data) v = 0.5 * rng.gaussian();
    TensorT<double> tar1(cfg.num_electrodes, K), tar2(cfg.num_electrodes, K);
    for (auto& v : tar1.data) v = rng.uniform();
    for (auto& v : tar2.data) v = rng.uniform();
    const bool fused = variant == model::Variant::brain_informed;
    const auto build_loss = [&](nn::TapeT<double>& tape,
                                const model::ModelBundleT<double>& b,
                                model::ForwardResultT<double>* out_fr) {
      const auto fr = fused ? model::forward(tape, b, mixture, &cue)
                            : model::forward(tape, b, mixture, nullptr);
      int loss = tape.frame_mse(fr.output_id, tar1);
      if (!fused) {
        loss = tape.add_scalars(loss, tape.frame_mse(fr.output2_id, tar2));
      }
      if (out_fr) *out_fr = fr;
      return loss;
    };

    nn::TapeT<double> tape;
    model::ForwardResultT<double> fr;
    tape.backward(build_loss(tape, bundle, &fr));

    const auto eval_loss = [&](const model::ModelBundleT<double>& b) {
      nn::TapeT<double> t(/*track_gradients=*/false);
      return t.value(build_loss(t, b, nullptr)).data[0];
    };

    for (std::size_t i = 0; i < bundle.params.size(); ++i) {
      const auto& analytic = tape.grad(fr.param_ids[i]);
      auto& value = bundle.params[i].value;
      const std::size_t coords[2] = {0, value.numel() - 1};
      for (const std::size_t j : coords) {
        const double saved = value.data[j];
        const auto central_diff = [&](double h) {
          value.data[j] = saved + h;
          const double up = eval_loss(bundle);
          value.data[j] = saved - h;
          const double down = eval_loss(bundle);
          value.data[j] = saved;
          return (up - down) / (2.0 * h);
        };
        // Two step sizes: where they disagree, the probe straddles an
        // activation kink and the difference quotient is meaningless there
        // (the loss is only piecewise smooth), so skip that coordinate. A
        // wrong analytic gradient still fails: both quotients agree away
        // from kinks, and every parameter tensor keeps its other probe.
        const double fd1 = central_diff(1e-5);
        const double fd2 = central_diff(5e-6);
        if (std::abs(fd1 - fd2) >
            1e-3 * std::max({std::abs(fd1), std::abs(fd2), 1e-6})) {
          ++skipped;
          continue;
        }
        ++probed;
        // Relative against a 1e-5 floor: below that scale the quotient is
        // round-off (the loss is O(1), so |f(x+h)-f(x-h)| ~ 1e-10 there).
        const double ana = analytic.data[j];
        const double rel = std::abs(ana - fd2) /
                           std::max({std::abs(ana), std::abs(fd2), 1e-5});
        if (rel > max_rel) {
          max_rel = rel;
          worst = std::string(model::variant_name(variant)) + " " +
                  bundle.params[i].name;
        }
      }
    }
  }
  const bool pass = max_rel < 1e-4 && skipped * 50 < probed;
  verdict(3, "finite-difference gradient agreement", pass,
          "20 random geometries, both variants: max relative error " +
              fmt(max_rel) + " over " + std::to_string(probed) +
              " coordinates (" + std::to_string(skipped) +
              " near activation kinks)" +
              (worst.empty() ? "" : ", worst at " + worst));
}

// --------------------------------------------------------------------------
// 4. Causality: no output frame reads input past its encoder window.
// --------------------------------------------------------------------------
void criterion_causality() {
  model::ModelConfig cfg;  // shipped geometry: 32-sample window, stride 16
  const int T = 720;
  const int K = cfg.frames_for(T);

  Rng rng(2631u);
  TensorT<float> mixture(1, T), cue(1, T);
  for (auto& v : mixture.data) v = static_cast<float>(0.5 * rng.gaussian());
  for (auto& v : cue.data) v = static_cast<float>(0.5 * rng.gaussian());

  bool pass = true;
  std::string detail;
  const int probes[3] = {0, K / 2, K - 1};
  for (const auto variant :
       {model::Variant::baseline, model::Variant::brain_informed}) {
    const auto bundle = model::build_model<float>(variant, cfg, 4242u);
    for (const int k : probes) {
      for (const bool second : {false, true}) {
        if (second && variant != model::Variant::baseline) continue;
        nn::TapeT<float> tape;
        const auto fr = variant == model::Variant::brain_informed
                            ? model::forward(tape, bundle, mixture, &cue)
                            : model::forward(tape, bundle, mixture, nullptr);
        tape.backward(tape.frame_pick_sum(
            second ? fr.output2_id : fr.output_id, k));
        const std::size_t future_start =
            static_cast<std::size_t>(k) * cfg.stride + cfg.kernel_length;

        std::vector<int> inputs = {fr.input_id};
        if (fr.cue_id >= 0) inputs.push_back(fr.cue_id);
        for (const int id : inputs) {
          const auto& g = tape.grad(id);
          double inside = 0.0;
          for (std::size_t t = 0; t < g.numel(); ++t) {
            if (t >= future_start) {
              if (g.data[t] != 0.0f) {
                pass = false;
                detail = std::string(model::variant_name(variant)) +
                         ": frame " + std::to_string(k) +
                         " touched future sample " + std::to_string(t);
              }
            } else {
              inside = std::max(inside, std::abs(double(g.data[t])));
            }
          }
          if (inside == 0.0) {
            pass = false;
            detail = std::string(model::variant_name(variant)) + ": frame " +
                     std::to_string(k) + " saw no gradient in its window";
          }
        }
      }
    }
  }
  if (pass) {
    detail = "frames {0, " + std::to_string(K / 2) + ", " +
             std::to_string(K - 1) + "}: zero gradient past each " +
             std::to_string(cfg.kernel_length) + "-sample window, both "
             "variants";
  }
  verdict(4, "output frames never read future input samples", pass, detail);
}

// --------------------------------------------------------------------------
// 5. Pair loss: brute-force assignment minimum, symmetry, relabeling.
// --------------------------------------------------------------------------
void criterion_pit() {
  Rng rng(555u);
  const auto random_egm = [&](int m, int k) {
    ace::Electrodogram e;
    e.num_electrodes = m;
    e.num_frames = k;
    e.frame_rate = 1000.0;
    e.values.resize(static_cast<std::size_t>(m) * k);
    for (auto& v : e.values) v = static_cast<float>(rng.uniform());
    return e;
  };

  bool pass = true;
  std::string detail;
  for (int trial = 0; trial < 500 && pass; ++trial) {
    const int m = rng.uniform_int(2, 4);
    const int k = rng.uniform_int(3, 6);
    const auto o1 = random_egm(m, k), o2 = random_egm(m, k);
    const auto t1 = random_egm(m, k), t2 = random_egm(m, k);

    const double keep = loss::mse(o1, t1) + loss::mse(o2, t2);
    const double swap = loss::mse(o1, t2) + loss::mse(o2, t1);
    const auto pit = loss::pit_mse(o1, o2, t1, t2);
    const double brute = std::min(keep, swap);
    if (std::abs(pit.loss - brute) > 1e-9 * std::max(1.0, brute)) {
      pass = false;
      detail = "loss " + fmt(pit.loss) + " differs from brute-force " +
               fmt(brute);
      break;
    }
    const double chosen =
        pit.assignment == loss::Assignment::identity ? keep : swap;
    if (std::abs(pit.loss - chosen) > 1e-9 * std::max(1.0, chosen)) {
      pass = false;
      detail = "reported assignment does not yield the reported loss";
      break;
    }
    const auto outputs_swapped = loss::pit_mse(o2, o1, t1, t2);
    const auto targets_swapped = loss::pit_mse(o1, o2, t2, t1);
    if (std::abs(outputs_swapped.loss - pit.loss) > 1e-12 ||
        std::abs(targets_swapped.loss - pit.loss) > 1e-12) {
      pass = false;
      detail = "loss changed under output/target relabeling";
      break;
    }
  }
  if (pass) {
    detail =
        "500 random instances: equals the brute-force minimum, "
        "relabeling-invariant";
  }
  verdict(5, "pair loss equals its brute-force assignment minimum", pass,
          detail);
}

// --------------------------------------------------------------------------
// 6. Parameter budgets against the reference sizes.
// --------------------------------------------------------------------------
void criterion_param_counts() {
  const model::ModelConfig cfg;
  const auto baseline =
      model::build_model<float>(model::Variant::baseline, cfg, 1u);
  const auto informed =
      model::build_model<float>(model::Variant::brain_informed, cfg, 1u);
  const auto nb = model::param_count(baseline);
  const auto ni = model::param_count(informed);
  const long ref_b = 171409, ref_i = 167405;
  const bool pass =
      std::abs(double(nb) - double(ref_b)) <= 0.10 * double(ref_b) &&
      std::abs(double(ni) - double(ref_i)) <= 0.10 * double(ref_i) && ni < nb;
  verdict(6, "parameter budgets near the reference sizes", pass,
          "audio-only " + std::to_string(nb) + " (reference " +
              std::to_string(ref_b) + "), brain-informed " +
              std::to_string(ni) + " (reference " + std::to_string(ref_i) +
              ")");
}

// --------------------------------------------------------------------------
// Criteria 7-9 + 11 share two full experiment runs.
// --------------------------------------------------------------------------

experiment::ExperimentConfig acceptance_config(const std::string& out_dir) {
  auto cfg = experiment::default_config();
  cfg.train.max_epochs = 30;
  // Compressed noise staircase: the clinical-length constants need ~70
  // epochs to reach the cap, so at this epoch budget the curriculum cells
  // would barely differ. Start at epoch 2 and step every 2 epochs instead;
  // the cap and the mixed-branch probabilities keep their standard values.
  cfg.curriculum.n_start = 2;
  cfg.curriculum.t_step = 2;
  cfg.curriculum.delta_sigma = 0.1;
  cfg.out_dir = out_dir;
  cfg.master_seed = 1;
  return cfg;
}

void run_pipeline(const experiment::ExperimentConfig& cfg) {
  progress("synthesizing corpus under " + cfg.out_dir);
  experiment::run_synth_data(cfg);
  progress("training audio-only baseline");
  experiment::run_train(cfg, model::Variant::baseline,
                        curriculum::Kind::none);
  for (const auto kind : cfg.curricula) {
    progress(std::string("training brain-informed cell: ") +
             curriculum::kind_name(kind));
    experiment::run_train(cfg, model::Variant::brain_informed, kind);
  }
  progress("evaluating across the input-SIR grid");
  experiment::run_eval_sir(cfg);
  progress("sweeping cue reliability");
  experiment::run_sweep_rho(cfg);
}

std::vector<metrics::AggregateRow> cell_aggregate(
    const std::vector<metrics::EvalRecord>& records, model::Variant variant,
    curriculum::Kind kind, metrics::GroupBy group_by) {
  std::vector<metrics::EvalRecord> subset;
  for (const auto& r : records) {
    if (r.variant == variant && r.curriculum == kind) subset.push_back(r);
  }
  return metrics::aggregate(subset, group_by);
}

double lookup_mean(const std::vector<metrics::AggregateRow>& rows,
                   double group) {
  for (const auto& r : rows) {
    if (std::abs(r.group - group) < 1e-9) return r.mean;
  }
  throw ConfigError("acceptance: missing aggregate group " + fmt(group));
}

double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
  const std::size_t n = xs.size();
  const auto ranks = [n](const std::vector<double>& v) {
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) {
      double rank = 1.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (v[j] < v[i]) rank += 1.0;
        if (j < i && v[j] == v[i]) rank += 1.0;  // stable tie ordering
      }
      r[i] = rank;
    }
    return r;
  };
  const auto rx = ranks(xs), ry = ranks(ys);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= double(n);
  my /= double(n);
  double num = 0.0, dx = 0.0, dy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    num += (rx[i] - mx) * (ry[i] - my);
    dx += (rx[i] - mx) * (rx[i] - mx);
    dy += (ry[i] - my) * (ry[i] - my);
  }
  return num / std::sqrt(dx * dy);
}

double mean_defined_lcc(const std::vector<metrics::EvalRecord>& records,
                        model::Variant variant, curriculum::Kind kind,
                        bool rho_filter, double rho) {
  double sum = 0.0;
  int count = 0;
  for (const auto& r : records) {
    if (r.variant != variant || r.curriculum != kind) continue;
    if (rho_filter && std::abs(r.rho - rho) > 1e-9) continue;
    for (const auto& l : r.lcc) {
      if (l.defined) {
        sum += l.value;
        ++count;
      }
    }
  }
  if (count == 0) {
    throw ConfigError("acceptance: no defined correlations in cell");
  }
  return sum / count;
}

void criteria_pipeline() {
  const auto base = std::filesystem::temp_directory_path() /
                    "bisep_acceptance";
  std::filesystem::remove_all(base);
  const auto cfg_a = acceptance_config((base / "run_a").string());

  run_pipeline(cfg_a);
  const auto eval_rows =
      metrics::read_results_csv(experiment::eval_sir_csv_path(cfg_a));
  const auto sweep_rows =
      metrics::read_results_csv(experiment::sweep_rho_csv_path(cfg_a));

  // 7. Oracle-cue comparison across the input-SIR grid.
  {
    const auto bi =
        cell_aggregate(eval_rows, model::Variant::brain_informed,
                       curriculum::Kind::none, metrics::GroupBy::input_sir);
    const auto ao =
        cell_aggregate(eval_rows, model::Variant::baseline,
                       curriculum::Kind::none, metrics::GroupBy::input_sir);
    bool pass = bi.size() == cfg_a.sir_grid.size() && bi.size() == ao.size();
    std::string margins;
    double aggregate_margin = 0.0;
    for (std::size_t i = 0; pass && i < bi.size(); ++i) {
      const double margin = bi[i].mean - ao[i].mean;
      aggregate_margin += margin;
      if (!margins.empty()) margins += ", ";
      margins += fmt(bi[i].group) + " dB: +" + fmt(margin);
      if (margin <= 0.0) pass = false;
    }
    if (pass) {
      aggregate_margin /= double(bi.size());
      pass = aggregate_margin >= 0.5;
    }
    verdict(7, "informed separator beats the baseline at every input SIR",
            pass,
            "margins {" + margins + "}; aggregate mean margin " +
                fmt(aggregate_margin) + " dB");
  }

  // 8. Reliability-sweep trends across the curriculum cells.
  {
    const auto none_rows =
        cell_aggregate(sweep_rows, model::Variant::brain_informed,
                       curriculum::Kind::none, metrics::GroupBy::rho);
    const auto plain_rows =
        cell_aggregate(sweep_rows, model::Variant::brain_informed,
                       curriculum::Kind::plain, metrics::GroupBy::rho);
    const auto mixed_rows =
        cell_aggregate(sweep_rows, model::Variant::brain_informed,
                       curriculum::Kind::mixed, metrics::GroupBy::rho);

    std::vector<double> rhos, means;
    for (const auto& r : none_rows) {
      rhos.push_back(r.group);
      means.push_back(r.mean);
    }
    const double rank_corr = spearman(rhos, means);

    const double hi1_m = lookup_mean(mixed_rows, 0.9);
    const double hi2_m = lookup_mean(mixed_rows, 1.0);
    const double hi1_p = lookup_mean(plain_rows, 0.9);
    const double hi2_p = lookup_mean(plain_rows, 1.0);

    const auto range_of = [](const std::vector<metrics::AggregateRow>& rows) {
      double lo = rows.front().mean, hi = rows.front().mean;
      for (const auto& r : rows) {
        lo = std::min(lo, r.mean);
        hi = std::max(hi, r.mean);
      }
      return hi - lo;
    };
    const double range_mixed = range_of(mixed_rows);
    const double range_none = range_of(none_rows);

    const bool pass = rank_corr >= 0.9 && hi1_m >= hi1_p && hi2_m >= hi2_p &&
                      range_mixed <= range_none;
    verdict(8, "reliability-sweep trends across curricula", pass,
            "rank correlation " + fmt(rank_corr) +
                "; high-reliability mixed-plain margins +" +
                fmt(hi1_m - hi1_p) + "/+" + fmt(hi2_m - hi2_p) +
                " dB; ranges " + fmt(range_mixed) + " vs " +
                fmt(range_none) + " dB");
  }

  // 9. Electrode-correlation ranking at the degraded-cue operating point.
  {
    const double at_rho = 0.7;
    const double mixed = mean_defined_lcc(
        sweep_rows, model::Variant::brain_informed, curriculum::Kind::mixed,
        true, at_rho);
    const double plain = mean_defined_lcc(
        sweep_rows, model::Variant::brain_informed, curriculum::Kind::plain,
        true, at_rho);
    const double baseline = mean_defined_lcc(
        eval_rows, model::Variant::baseline, curriculum::Kind::none, false,
        0.0);
    const bool pass = mixed >= plain && mixed >= baseline;
    verdict(9, "electrode correlation ranking under degraded cues", pass,
            "mean correlations: mixed " + fmt(mixed) + ", scheduled-only " +
                fmt(plain) + ", audio-only " + fmt(baseline));
  }

  // 11 runs after criterion 10 from main(); stash run A's tables.
  // (Handled by caller via the returned paths.)
}

// 10. Tiny-corpus overfit drives the loss below a tenth of its start.
void criterion_overfit() {
  ace::AceConfig ace_cfg;
  ace_cfg.num_electrodes = 6;
  ace_cfg.n_sel = 6;  // smooth targets keep this about optimizer wiring
  ace_cfg.frame_rate = 2000.0;
  ace_cfg.analysis_window = 64;

  model::ModelConfig cfg;
  cfg.kernel_length = 16;
  cfg.stride = 8;
  cfg.num_filters = 24;
  cfg.bottleneck_channels = 24;
  cfg.hidden_channels = 64;
  cfg.num_stacks = 2;
  cfg.blocks_per_stack = 2;
  cfg.num_electrodes = 6;

  const auto make_set = [](int count, std::uint64_t seed) {
    std::vector<data::LoadedPair> pairs;
    for (int i = 0; i < count; ++i) {
      data::LoadedPair p;
      p.id = "utt_" + std::to_string(i);
      Rng rng_t(Rng::derive(seed, {1, static_cast<std::uint64_t>(i)}));
      Rng rng_i(Rng::derive(seed, {2, static_cast<std::uint64_t>(i)}));
      p.target = data::synth_utterance(0.2, 16000.0, rng_t);
      p.interferer = data::synth_utterance(0.2, 16000.0, rng_i);
      Rng rng_m(Rng::derive(seed, {3, static_cast<std::uint64_t>(i)}));
      p.sir_db = rng_m.uniform(0.0, 10.0);
      p.seed = Rng::derive(seed, {4, static_cast<std::uint64_t>(i)});
      pairs.push_back(std::move(p));
    }
    return train::make_dataset(pairs);
  };

  bool pass = true;
  std::string detail;
  for (const auto variant :
       {model::Variant::brain_informed, model::Variant::baseline}) {
    progress(std::string("overfit run: ") + model::variant_name(variant));
    const auto bundle = model::build_model<float>(variant, cfg, 17u);
    const auto train_set = make_set(10, 41u);
    const auto valid_set = make_set(2, 42u);

    curriculum::CurriculumConfig cc;
    cc.kind = curriculum::Kind::none;
    train::TrainConfig tc;
    tc.learning_rate = 5e-3;
    tc.max_epochs = 200;
    tc.patience = 200;
    tc.batch_size = 1;
    tc.crop_s = 0.2;
    tc.seed = 7u;
    const double initial =
        train::evaluate_loss(bundle, train_set, ace_cfg, tc.crop_s);
    const auto result =
        train::fit(bundle, train_set, valid_set, tc, cc, ace_cfg);
    double lowest = result.history.front().train_loss;
    for (const auto& r : result.history) {
      lowest = std::min(lowest, r.train_loss);
    }
    const double ratio = lowest / initial;
    if (!detail.empty()) detail += ", ";
    detail += std::string(model::variant_name(variant)) + " " + fmt(ratio);
    if (!(ratio < 0.1)) pass = false;
  }
  verdict(10, "tiny-corpus training collapses the loss", pass,
          "loss ratios after 200 epochs on 10 utterances: " + detail +
              " (bound 0.1)");
}

// 11. Determinism of the full pipeline.
void criterion_determinism() {
  const auto base = std::filesystem::temp_directory_path() /
                    "bisep_acceptance";
  const auto cfg_a = acceptance_config((base / "run_a").string());
  const auto cfg_b = acceptance_config((base / "run_b").string());
  run_pipeline(cfg_b);

  const bool eval_same = slurp(experiment::eval_sir_csv_path(cfg_a)) ==
                         slurp(experiment::eval_sir_csv_path(cfg_b));
  const bool sweep_same = slurp(experiment::sweep_rho_csv_path(cfg_a)) ==
                          slurp(experiment::sweep_rho_csv_path(cfg_b));
  verdict(11, "same seed reproduces identical result tables",
          eval_same && sweep_same,
          std::string("input-SIR table ") +
              (eval_same ? "identical" : "DIFFERS") +
              ", reliability table " +
              (sweep_same ? "identical" : "DIFFERS"));
}

}  // namespace

int main() {
  try {
    criterion_schedule();
    criterion_rho_law();
    criterion_gradients();
    criterion_causality();
    criterion_pit();
    criterion_param_counts();
    criteria_pipeline();  // 7, 8, 9
    criterion_overfit();  // 10
    criterion_determinism();  // 11
  } catch (const std::exception& e) {
    std::printf("[FAIL] acceptance aborted: %s\n", e.what());
    return 1;
  }
  std::printf("%d of 11 criteria passed\n", 11 - g_failures);
  return g_failures == 0 ? 0 : 1;
}
