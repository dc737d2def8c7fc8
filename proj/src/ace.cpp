// src/ace.cpp

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

#include "bisep/ace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "bisep/errors.hpp"

namespace bisep::ace {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

int AceConfig::hop() const {
  const double ratio = sample_rate / frame_rate;
  const double rounded = std::round(ratio);
  if (frame_rate <= 0.0 || std::abs(ratio - rounded) > 1e-9 || rounded < 1.0) {
    throw ConfigError("ace: frame_rate must divide sample_rate");
  }
  return static_cast<int>(rounded);
}

std::vector<double> AceConfig::band_edges() const {
  std::vector<double> edges(static_cast<std::size_t>(num_electrodes) + 1);
  const double log_lo = std::log(band_lo_hz);
  const double log_hi = std::log(band_hi_hz);
  for (int i = 0; i <= num_electrodes; ++i) {
    const double t = static_cast<double>(i) / num_electrodes;
    edges[static_cast<std::size_t>(i)] =
        std::exp(log_lo + t * (log_hi - log_lo));
  }
  return edges;
}

std::vector<double> AceConfig::band_centers() const {
  const std::vector<double> edges = band_edges();
  std::vector<double> centers(static_cast<std::size_t>(num_electrodes));
  for (int m = 0; m < num_electrodes; ++m) {
    centers[static_cast<std::size_t>(m)] =
        std::sqrt(edges[static_cast<std::size_t>(m)] *
                  edges[static_cast<std::size_t>(m) + 1]);
  }
  return centers;
}

void AceConfig::validate() const {
  if (num_electrodes < 1) throw ConfigError("ace: need at least 1 electrode");
  if (n_sel < 1 || n_sel > num_electrodes) {
    throw ConfigError("ace: n_sel must be in [1, num_electrodes]");
  }
  if (!(band_lo_hz > 0.0) || !(band_hi_hz > band_lo_hz)) {
    throw ConfigError("ace: band edges must be increasing and positive");
  }
  if (band_hi_hz > sample_rate / 2.0) {
    throw ConfigError("ace: upper band edge above Nyquist");
  }
  const int h = hop();
  if (analysis_window < 2 * h) {
    throw ConfigError("ace: analysis_window must span at least two hops");
  }
}

ClinicalMap ClinicalMap::normalized(int num_electrodes) {
  return with_levels(num_electrodes, 0.0, 1.0);
}

ClinicalMap ClinicalMap::with_levels(int num_electrodes, double threshold,
                                     double comfort) {
  ClinicalMap map;
  map.threshold_levels.assign(static_cast<std::size_t>(num_electrodes),
                              threshold);
  map.comfort_levels.assign(static_cast<std::size_t>(num_electrodes), comfort);
  map.validate();
  return map;
}

void ClinicalMap::validate() const {
  if (threshold_levels.size() != comfort_levels.size() ||
      threshold_levels.empty()) {
    throw ConfigError("clinical map: level arrays must match and be nonempty");
  }
  for (std::size_t m = 0; m < threshold_levels.size(); ++m) {
    const double t = threshold_levels[m];
    const double c = comfort_levels[m];
    if (!(t >= 0.0) || !(t < 1.0) || !(c > t) || !(c <= 1.0)) {
      throw ConfigError("clinical map: need 0 <= T[m] < C[m] <= 1");
    }
  }
  if (!(compression_steepness > 0.0)) {
    throw ConfigError("clinical map: compression_steepness must be > 0");
  }
  if (!(saturation_level > 0.0)) {
    throw ConfigError("clinical map: saturation_level must be > 0");
  }
  if (!(envelope_floor >= 0.0) || envelope_floor >= 1.0) {
    throw ConfigError("clinical map: envelope_floor must be in [0, 1)");
  }
}

void Electrodogram::validate() const {
  if (num_electrodes < 1 || num_frames < 1) {
    throw ShapeError("electrodogram: need M >= 1 and K >= 1");
  }
  if (values.size() != static_cast<std::size_t>(num_electrodes) *
                           static_cast<std::size_t>(num_frames)) {
    throw ShapeError("electrodogram: value count does not match M*K");
  }
  if (frame_rate <= 0.0) throw ShapeError("electrodogram: bad frame rate");
  for (const float v : values) {
    if (!(v >= 0.0f) || !(v <= 1.0f)) {
      throw ShapeError("electrodogram: entries must be finite and in [0,1]");
    }
  }
}

int frame_count(std::int64_t num_samples, const AceConfig& cfg) {
  const int h = cfg.hop();
  if (num_samples < 2 * h) return 0;
  return static_cast<int>((num_samples - 2 * h) / h) + 1;
}

std::vector<double> analyze(const AudioSignal& audio, const AceConfig& cfg) {
  cfg.validate();
  validate(audio, "ace::analyze");
  if (audio.sample_rate != cfg.sample_rate) {
    throw ShapeError("ace::analyze: audio rate does not match config");
  }
  const auto length = static_cast<std::int64_t>(audio.size());
  if (length < cfg.analysis_window) {
    throw ShapeError("ace::analyze: signal shorter than the analysis window");
  }
  const int hop = cfg.hop();
  const int window = cfg.analysis_window;
  const int num_bands = cfg.num_electrodes;
  const int frames = frame_count(length, cfg);

  // Hann-weighted quadrature tables per band, window-local phase.
  const std::vector<double> centers = cfg.band_centers();
  std::vector<double> table_cos(static_cast<std::size_t>(num_bands) * window);
  std::vector<double> table_sin(static_cast<std::size_t>(num_bands) * window);
  double window_sum = 0.0;
  for (int n = 0; n < window; ++n) {
    window_sum += 0.5 * (1.0 - std::cos(kTwoPi * n / window));
  }
  const double norm = 2.0 / window_sum;
  for (int m = 0; m < num_bands; ++m) {
    const double omega = kTwoPi * centers[static_cast<std::size_t>(m)] /
                         cfg.sample_rate;
    for (int n = 0; n < window; ++n) {
      const double w = 0.5 * (1.0 - std::cos(kTwoPi * n / window));
      const std::size_t idx =
          static_cast<std::size_t>(m) * window + static_cast<std::size_t>(n);
      table_cos[idx] = w * std::cos(omega * n);
      table_sin[idx] = w * std::sin(omega * n);
    }
  }

  // Frame k ends at sample hop*(k+2)-1; the start of the signal is zero
  // padded so early frames have a shortened effective window.
  std::vector<double> envelopes(static_cast<std::size_t>(num_bands) * frames);
  for (int k = 0; k < frames; ++k) {
    const std::int64_t end = static_cast<std::int64_t>(hop) * (k + 2);
    const std::int64_t start = end - window;
    const int n_begin = start < 0 ? static_cast<int>(-start) : 0;
    const double* x = audio.samples.data() + (start + n_begin);
    for (int m = 0; m < num_bands; ++m) {
      const double* tc = table_cos.data() + static_cast<std::size_t>(m) * window;
      const double* ts = table_sin.data() + static_cast<std::size_t>(m) * window;
      double re = 0.0;
      double im = 0.0;
      for (int n = n_begin; n < window; ++n) {
        re += tc[n] * x[n - n_begin];
        im += ts[n] * x[n - n_begin];
      }
      envelopes[static_cast<std::size_t>(m) * frames + k] =
          norm * std::sqrt(re * re + im * im);
    }
  }
  return envelopes;
}

std::vector<double> select_bands(const std::vector<double>& envelopes, int m,
                                 int k, int n_sel) {
  if (n_sel < 1) throw ConfigError("select_bands: n_sel must be >= 1");
  if (n_sel > m) throw ConfigError("select_bands: n_sel exceeds band count");
  if (envelopes.size() != static_cast<std::size_t>(m) * k) {
    throw ShapeError("select_bands: envelope matrix does not match M*K");
  }
  if (n_sel == m) return envelopes;

  std::vector<double> out(envelopes.size(), 0.0);
  std::vector<int> order(static_cast<std::size_t>(m));
  for (int frame = 0; frame < k; ++frame) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return envelopes[static_cast<std::size_t>(a) * k + frame] >
             envelopes[static_cast<std::size_t>(b) * k + frame];
    });
    for (int i = 0; i < n_sel; ++i) {
      const std::size_t idx =
          static_cast<std::size_t>(order[static_cast<std::size_t>(i)]) * k +
          frame;
      out[idx] = envelopes[idx];
    }
  }
  return out;
}

Electrodogram compress_to_levels(const std::vector<double>& envelopes, int m,
                                 int k, double frame_rate,
                                 const ClinicalMap& map) {
  map.validate();
  if (static_cast<int>(map.threshold_levels.size()) != m) {
    throw ShapeError("compress_to_levels: map size does not match M");
  }
  if (envelopes.size() != static_cast<std::size_t>(m) * k) {
    throw ShapeError("compress_to_levels: envelope matrix does not match M*K");
  }
  const double steepness = map.compression_steepness;
  const double log_denominator = std::log1p(steepness);

  Electrodogram e;
  e.num_electrodes = m;
  e.num_frames = k;
  e.frame_rate = frame_rate;
  e.values.resize(envelopes.size());
  for (int band = 0; band < m; ++band) {
    const double threshold = map.threshold_levels[static_cast<std::size_t>(band)];
    const double comfort = map.comfort_levels[static_cast<std::size_t>(band)];
    for (int frame = 0; frame < k; ++frame) {
      const std::size_t idx = static_cast<std::size_t>(band) * k + frame;
      const double raw = envelopes[idx];
      if (!(raw >= 0.0)) {
        throw ShapeError("compress_to_levels: negative or non-finite envelope");
      }
      const double v = std::min(raw / map.saturation_level, 1.0);
      double level = 0.0;
      if (v >= map.envelope_floor && v > 0.0) {
        const double growth = std::log1p(steepness * v) / log_denominator;
        level = threshold + growth * (comfort - threshold);
      }
      e.values[idx] = static_cast<float>(level);
    }
  }
  return e;
}

Electrodogram encode(const AudioSignal& audio, const AceConfig& cfg,
                     const ClinicalMap& map) {
  const std::vector<double> env = analyze(audio, cfg);
  const int frames = frame_count(static_cast<std::int64_t>(audio.size()), cfg);
  const std::vector<double> selected =
      select_bands(env, cfg.num_electrodes, frames, cfg.n_sel);
  Electrodogram e = compress_to_levels(selected, cfg.num_electrodes, frames,
                                       cfg.frame_rate, map);
  e.validate();
  return e;
}

namespace {

void append_f32(std::string& out, float v) {
  std::uint32_t raw = 0;
  std::memcpy(&raw, &v, sizeof(raw));
  out.push_back(static_cast<char>(raw & 0xff));
  out.push_back(static_cast<char>((raw >> 8) & 0xff));
  out.push_back(static_cast<char>((raw >> 16) & 0xff));
  out.push_back(static_cast<char>((raw >> 24) & 0xff));
}

float read_f32(const char* p) {
  const std::uint32_t raw =
      static_cast<std::uint8_t>(p[0]) |
      (static_cast<std::uint32_t>(static_cast<std::uint8_t>(p[1])) << 8) |
      (static_cast<std::uint32_t>(static_cast<std::uint8_t>(p[2])) << 16) |
      (static_cast<std::uint32_t>(static_cast<std::uint8_t>(p[3])) << 24);
  float v = 0.0f;
  std::memcpy(&v, &raw, sizeof(v));
  return v;
}

}  // namespace

void write_electrodogram(const Electrodogram& e, const std::string& path,
                         EgmFormat format) {
  e.validate();
  std::string out;
  if (format == EgmFormat::binary) {
    out += "EGM1";
    char header[16];
    const auto m = static_cast<std::uint32_t>(e.num_electrodes);
    const auto k = static_cast<std::uint32_t>(e.num_frames);
    std::memcpy(header, &m, 4);
    std::memcpy(header + 4, &k, 4);
    std::memcpy(header + 8, &e.frame_rate, 8);
    out.append(header, 16);
    for (int frame = 0; frame < e.num_frames; ++frame) {
      for (int band = 0; band < e.num_electrodes; ++band) {
        append_f32(out, e.at(band, frame));
      }
    }
  } else {
    char line[128];
    std::snprintf(line, sizeof(line), "ELECTRODOGRAM v1 M=%d K=%d rate=%.9g\n",
                  e.num_electrodes, e.num_frames, e.frame_rate);
    out += line;
    for (int frame = 0; frame < e.num_frames; ++frame) {
      for (int band = 0; band < e.num_electrodes; ++band) {
        char cell[48];
        // 9 significant digits round-trips float32 exactly.
        std::snprintf(cell, sizeof(cell), "%s%.9g", band ? " " : "",
                      static_cast<double>(e.at(band, frame)));
        out += cell;
      }
      out += '\n';
    }
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot open for writing: " + path);
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw IoError("short write: " + path);
}

Electrodogram read_electrodogram(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open electrodogram file: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());

  Electrodogram e;
  if (bytes.size() >= 4 && bytes.compare(0, 4, "EGM1") == 0) {
    if (bytes.size() < 20) throw FormatError("truncated header: " + path);
    std::uint32_t m = 0;
    std::uint32_t k = 0;
    std::memcpy(&m, bytes.data() + 4, 4);
    std::memcpy(&k, bytes.data() + 8, 4);
    std::memcpy(&e.frame_rate, bytes.data() + 12, 8);
    if (m < 1 || k < 1) throw FormatError("bad dimensions: " + path);
    const std::size_t expected = 20 + 4ull * m * k;
    if (bytes.size() != expected) {
      throw FormatError("payload size does not match header: " + path);
    }
    e.num_electrodes = static_cast<int>(m);
    e.num_frames = static_cast<int>(k);
    e.values.resize(static_cast<std::size_t>(m) * k);
    std::size_t pos = 20;
    for (std::uint32_t frame = 0; frame < k; ++frame) {
      for (std::uint32_t band = 0; band < m; ++band) {
        e.at(static_cast<int>(band), static_cast<int>(frame)) =
            read_f32(bytes.data() + pos);
        pos += 4;
      }
    }
  } else {
    std::istringstream stream(bytes);
    std::string header;
    std::getline(stream, header);
    int m = 0;
    int k = 0;
    double rate = 0.0;
    if (std::sscanf(header.c_str(), "ELECTRODOGRAM v1 M=%d K=%d rate=%lf", &m,
                    &k, &rate) != 3) {
      throw FormatError("bad electrodogram header: " + path);
    }
    if (m < 1 || k < 1) throw FormatError("bad dimensions: " + path);
    e.num_electrodes = m;
    e.num_frames = k;
    e.frame_rate = rate;
    e.values.resize(static_cast<std::size_t>(m) * k);
    for (int frame = 0; frame < k; ++frame) {
      std::string line;
      if (!std::getline(stream, line)) {
        throw FormatError("missing frame row: " + path);
      }
      const char* cursor = line.c_str();
      for (int band = 0; band < m; ++band) {
        char* next = nullptr;
        const float v = std::strtof(cursor, &next);
        if (next == cursor) {
          throw FormatError("row has fewer values than M: " + path);
        }
        e.at(band, frame) = v;
        cursor = next;
      }
      char* next = nullptr;
      std::strtof(cursor, &next);
      if (next != cursor) {
        throw FormatError("row has more values than M: " + path);
      }
    }
    std::string extra;
    while (std::getline(stream, extra)) {
      if (!extra.empty()) throw FormatError("extra frame rows: " + path);
    }
  }
  try {
    e.validate();
  } catch (const ShapeError& err) {
    throw FormatError(std::string("invalid electrodogram content: ") +
                      err.what());
  }
  return e;
}

}  // namespace bisep::ace
