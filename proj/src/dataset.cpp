// src/dataset.cpp

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

#include "bisep/dataset.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bisep/errors.hpp"

namespace bisep::data {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

const char* const kManifestHeader = "id\ttarget\tinterferer\tsir_db\tsplit\tseed";

bool known_split(const std::string& s) {
  return s == "train" || s == "valid" || s == "test";
}

std::vector<std::string> split_fields(const std::string& line, char sep) {
  std::vector<std::string> fields;
  std::string::size_type start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

double parse_double_field(const std::string& s, const char* what) {
  if (s.empty()) throw FormatError(std::string("manifest: empty ") + what);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) {
    throw FormatError(std::string("manifest: bad ") + what + " '" + s + "'");
  }
  return v;
}

std::uint64_t parse_seed_field(const std::string& s) {
  if (s.empty()) throw FormatError("manifest: empty seed");
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (end != s.c_str() + s.size()) {
    throw FormatError("manifest: bad seed '" + s + "'");
  }
  return static_cast<std::uint64_t>(v);
}

// First-order RC low-pass / high-pass pair used to confine a noise burst to
// a rough frequency band.  Gentle slopes are fine here; the bursts only need
// to sound consonant-like, not meet a filter spec.
void band_limit(std::vector<double>& x, double lo_hz, double hi_hz,
                double sample_rate) {
  const double a_lp = std::exp(-kTwoPi * hi_hz / sample_rate);
  double lp = 0.0;
  for (double& v : x) {
    lp = a_lp * lp + (1.0 - a_lp) * v;
    v = lp;
  }
  const double a_hp = std::exp(-kTwoPi * lo_hz / sample_rate);
  double prev_in = 0.0;
  double hp = 0.0;
  for (double& v : x) {
    const double in = v;
    hp = a_hp * (hp + in - prev_in);
    prev_in = in;
    v = hp;
  }
}

double rms(const std::vector<double>& x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc / static_cast<double>(x.size()));
}

}  // namespace

std::vector<ManifestEntry> CorpusManifest::split(const std::string& name) const {
  std::vector<ManifestEntry> out;
  for (const auto& e : entries) {
    if (e.split == name) out.push_back(e);
  }
  return out;
}

void CorpusManifest::validate() const {
  std::set<std::string> ids;
  for (const auto& e : entries) {
    if (e.id.empty()) throw FormatError("manifest: empty utterance id");
    if (!ids.insert(e.id).second) {
      throw FormatError("manifest: duplicate utterance id '" + e.id + "'");
    }
    if (!known_split(e.split)) {
      throw FormatError("manifest: unknown split '" + e.split + "' for id '" +
                        e.id + "'");
    }
    if (!(e.sir_db >= 0.0 && e.sir_db <= 10.0)) {
      throw FormatError("manifest: sir_db out of [0, 10] for id '" + e.id +
                        "'");
    }
    if (e.target_path.empty() || e.interferer_path.empty()) {
      throw FormatError("manifest: empty path for id '" + e.id + "'");
    }
  }
}

void write_manifest(const std::string& path, const CorpusManifest& manifest) {
  manifest.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open manifest for writing: " + path);
  out << kManifestHeader << '\n';
  char buf[64];
  for (const auto& e : manifest.entries) {
    std::snprintf(buf, sizeof(buf), "%.17g", e.sir_db);
    out << e.id << '\t' << e.target_path << '\t' << e.interferer_path << '\t'
        << buf << '\t' << e.split << '\t' << e.seed << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

CorpusManifest read_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest: " + path);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("manifest is empty: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kManifestHeader) {
    throw FormatError("manifest header mismatch in " + path);
  }
  CorpusManifest manifest;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line, '\t');
    if (fields.size() != 6) {
      throw FormatError("manifest: expected 6 fields, got " +
                        std::to_string(fields.size()) + " in " + path);
    }
    ManifestEntry e;
    e.id = fields[0];
    e.target_path = fields[1];
    e.interferer_path = fields[2];
    e.sir_db = parse_double_field(fields[3], "sir_db");
    e.split = fields[4];
    e.seed = parse_seed_field(fields[5]);
    manifest.entries.push_back(std::move(e));
  }
  manifest.validate();
  return manifest;
}

void SynthConfig::validate() const {
  if (train_count < 0 || valid_count < 0 || test_count < 0) {
    throw ConfigError("corpus counts must be non-negative");
  }
  if (train_count + valid_count + test_count <= 0) {
    throw ConfigError("corpus is empty");
  }
  if (!(duration_s > 0.0)) throw ConfigError("duration_s must be positive");
  if (!(sample_rate > 0.0)) throw ConfigError("sample_rate must be positive");
}

AudioSignal synth_utterance(double duration_s, double sample_rate, Rng& rng) {
  const auto num_samples =
      static_cast<std::size_t>(std::llround(duration_s * sample_rate));
  if (num_samples == 0) throw ConfigError("utterance duration too short");

  // Voiced source: harmonics of a random fundamental, shaped by two formant
  // peaks.  Each harmonic is an incrementally rotated complex phasor, which
  // is far cheaper than a per-sample sin() and just as deterministic.
  const double f0 = rng.uniform(100.0, 250.0);
  const double formant1 = rng.uniform(300.0, 900.0);
  const double bw1 = rng.uniform(80.0, 160.0);
  const double formant2 = rng.uniform(1000.0, 2500.0);
  const double bw2 = rng.uniform(150.0, 300.0);
  const double syllable_rate = rng.uniform(2.0, 6.0);

  const int num_harmonics =
      static_cast<int>(std::floor(0.45 * sample_rate / f0));
  std::vector<std::complex<double>> phasor(num_harmonics);
  std::vector<std::complex<double>> step(num_harmonics);
  std::vector<double> amp(num_harmonics);
  for (int h = 0; h < num_harmonics; ++h) {
    const double freq = f0 * (h + 1);
    const double g1 = std::exp(-0.5 * std::pow((freq - formant1) / bw1, 2.0));
    const double g2 = std::exp(-0.5 * std::pow((freq - formant2) / bw2, 2.0));
    amp[h] = (0.1 + g1 + 0.7 * g2) / (h + 1);
    const double phase = rng.uniform(0.0, kTwoPi);
    phasor[h] = std::polar(1.0, phase);
    step[h] = std::polar(1.0, kTwoPi * freq / sample_rate);
  }

  std::vector<double> voiced(num_samples, 0.0);
  for (std::size_t t = 0; t < num_samples; ++t) {
    double acc = 0.0;
    for (int h = 0; h < num_harmonics; ++h) {
      acc += amp[h] * phasor[h].imag();
      phasor[h] *= step[h];
    }
    voiced[t] = acc;
  }
  const double voiced_rms = rms(voiced);
  for (double& v : voiced) v /= voiced_rms;

  // Syllabic amplitude modulation: a train of sharpened raised-cosine bumps
  // with jittered slot lengths, variable duty and occasional whole-slot
  // pauses. The jitter makes each utterance's energy contour an aperiodic
  // fingerprint — which is exactly what the envelope cue rides on — and the
  // pauses give real gaps the way speech does. A small floor keeps the
  // signal from fully gating (energies and cue blocks stay well-defined).
  std::vector<double> envelope(num_samples, 0.0);
  const double slot_nominal = sample_rate / syllable_rate;
  double t_next = rng.uniform(0.0, 0.5) * slot_nominal;
  while (t_next < static_cast<double>(num_samples)) {
    const double slot = slot_nominal * rng.uniform(0.7, 1.4);
    const double duty = rng.uniform(0.5, 0.85);
    const bool pause = rng.uniform() < 0.25;
    if (!pause) {
      const auto start = static_cast<std::size_t>(std::llround(t_next));
      const auto len =
          std::max<std::size_t>(2, std::llround(slot * duty));
      for (std::size_t i = 0; i < len && start + i < num_samples; ++i) {
        const double c =
            0.5 * (1.0 - std::cos(kTwoPi * static_cast<double>(i) /
                                  static_cast<double>(len)));
        envelope[start + i] = c * c;
      }
    }
    t_next += slot;
  }
  std::vector<double> samples(num_samples);
  for (std::size_t t = 0; t < num_samples; ++t) {
    samples[t] = voiced[t] * (0.05 + 0.95 * envelope[t]);
  }

  // Consonant-like band-limited noise bursts.
  const int num_bursts = static_cast<int>(
      rng.uniform_int(2, 2 + static_cast<std::int64_t>(2.0 * duration_s)));
  for (int b = 0; b < num_bursts; ++b) {
    const auto burst_len = static_cast<std::size_t>(
        std::llround(rng.uniform(0.02, 0.08) * sample_rate));
    const double lo_hz = rng.uniform(1500.0, 4000.0);
    const double hi_hz = lo_hz + rng.uniform(500.0, 2000.0);
    const double gain = rng.uniform(0.3, 0.8);
    const auto start = static_cast<std::size_t>(rng.uniform_int(
        0, static_cast<std::int64_t>(num_samples - burst_len)));
    std::vector<double> burst(burst_len);
    for (double& v : burst) v = rng.gaussian();
    band_limit(burst, lo_hz, hi_hz, sample_rate);
    const double burst_rms = rms(burst);
    if (burst_rms > 0.0) {
      for (std::size_t t = 0; t < burst_len; ++t) {
        const double window =
            0.5 * (1.0 - std::cos(kTwoPi * t / (burst_len - 1 + 1e-9)));
        samples[start + t] += gain * window * burst[t] / burst_rms;
      }
    }
  }

  // Normalize to a fixed RMS with a peak guard so float32 WAVs stay in a
  // sane range for any downstream consumer.
  AudioSignal out;
  out.sample_rate = sample_rate;
  out.samples = std::move(samples);
  const double out_rms = rms(out.samples);
  double scale = 0.1 / out_rms;
  double peak = 0.0;
  for (double v : out.samples) peak = std::max(peak, std::abs(v) * scale);
  if (peak > 0.99) scale *= 0.99 / peak;
  for (double& v : out.samples) v *= scale;
  return out;
}

CorpusManifest synth_corpus(const SynthConfig& cfg, const std::string& out_dir,
                            std::uint64_t master_seed) {
  cfg.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir + "/wav", ec);
  if (ec) throw IoError("cannot create corpus directory: " + out_dir);

  const struct {
    const char* name;
    std::uint64_t tag;
    int count;
  } splits[] = {{"train", 1, cfg.train_count},
                {"valid", 2, cfg.valid_count},
                {"test", 3, cfg.test_count}};

  CorpusManifest manifest;
  char id_buf[64];
  for (const auto& sp : splits) {
    for (int i = 0; i < sp.count; ++i) {
      std::snprintf(id_buf, sizeof(id_buf), "%s_%03d", sp.name, i);
      ManifestEntry e;
      e.id = id_buf;
      e.split = sp.name;
      e.seed = Rng::derive(master_seed,
                           {sp.tag, static_cast<std::uint64_t>(i)});
      Rng rng_target(Rng::derive(e.seed, {0x74}));
      Rng rng_interferer(Rng::derive(e.seed, {0x69}));
      Rng rng_mix(Rng::derive(e.seed, {0x6d}));
      const AudioSignal target =
          synth_utterance(cfg.duration_s, cfg.sample_rate, rng_target);
      const AudioSignal interferer =
          synth_utterance(cfg.duration_s, cfg.sample_rate, rng_interferer);
      e.sir_db = rng_mix.uniform(0.0, 10.0);
      e.target_path = std::string("wav/") + e.id + "_t.wav";
      e.interferer_path = std::string("wav/") + e.id + "_i.wav";
      wav::write(out_dir + "/" + e.target_path, target,
                 wav::SampleFormat::float32);
      wav::write(out_dir + "/" + e.interferer_path, interferer,
                 wav::SampleFormat::float32);
      manifest.entries.push_back(std::move(e));
    }
  }
  write_manifest(out_dir + "/manifest.tsv", manifest);
  return manifest;
}

std::string parent_dir(const std::string& path) {
  const auto pos = path.find_last_of('/');
  if (pos == std::string::npos) return ".";
  if (pos == 0) return "/";
  return path.substr(0, pos);
}

std::vector<LoadedPair> load_split(const CorpusManifest& manifest,
                                   const std::string& manifest_path,
                                   const std::string& split) {
  if (!known_split(split)) throw ConfigError("unknown split: " + split);
  const std::string base = parent_dir(manifest_path);
  std::vector<LoadedPair> pairs;
  for (const auto& e : manifest.split(split)) {
    LoadedPair p;
    p.id = e.id;
    p.target = wav::read(base + "/" + e.target_path);
    p.interferer = wav::read(base + "/" + e.interferer_path);
    p.sir_db = e.sir_db;
    p.seed = e.seed;
    pairs.push_back(std::move(p));
  }
  return pairs;
}

}  // namespace bisep::data
