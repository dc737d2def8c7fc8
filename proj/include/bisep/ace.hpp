// include/bisep/ace.hpp

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

#ifndef BISEP_ACE_HPP_
#define BISEP_ACE_HPP_

#include <string>
#include <vector>

#include "bisep/audio.hpp"

namespace bisep::ace {

// Reference n-of-m sound-coding configuration. This is a reference
// implementation of the coding path, not a clinical one: the analysis is a
// Hann-windowed short-time filterbank with log-spaced bands, sampled at the
// geometric center of each band.
//
// Framing: frames advance by hop = sample_rate / frame_rate samples and are
// aligned so that frame k sees input only up to sample hop*(k+2) - 1; the
// analysis window is left-padded with zeros at the start of the signal. With
// the defaults this matches the separation model's encoder framing exactly
// (same K, same causal horizon).
struct AceConfig {
  int num_electrodes = 22;
  int n_sel = 8;
  double frame_rate = 1000.0;   // frames per second
  int analysis_window = 128;    // samples
  double band_lo_hz = 187.5;
  double band_hi_hz = 7937.5;
  double sample_rate = 16000.0;

  int hop() const;  // sample_rate / frame_rate, must divide evenly
  // num_electrodes + 1 logarithmically spaced edges over [band_lo, band_hi].
  std::vector<double> band_edges() const;
  // Geometric centers of the bands; the analysis frequencies.
  std::vector<double> band_centers() const;
  void validate() const;
};

// Per-electrode threshold/comfort levels plus the loudness-growth shape.
// Envelopes are normalized to saturation_level, values below envelope_floor
// (relative to saturation) are treated as no stimulation.
struct ClinicalMap {
  std::vector<double> threshold_levels;  // T[m] in [0,1)
  std::vector<double> comfort_levels;    // C[m] in (T[m],1]
  double compression_steepness = 340.0;
  double saturation_level = 1.0;
  double envelope_floor = 1e-4;

  // Identity-range map (T=0, C=1): output stays in the normalized [0,1]
  // level domain used for losses and metrics.
  static ClinicalMap normalized(int num_electrodes);
  static ClinicalMap with_levels(int num_electrodes, double threshold,
                                 double comfort);
  void validate() const;
};

// M x K matrix of stimulation intensities in [0,1] at a fixed frame rate.
// Values are stored electrode-major (row m holds the K frames of electrode m).
struct Electrodogram {
  int num_electrodes = 0;
  int num_frames = 0;
  double frame_rate = 1000.0;
  std::vector<float> values;  // size num_electrodes * num_frames

  float& at(int m, int k) {
    return values[static_cast<std::size_t>(m) * num_frames + k];
  }
  float at(int m, int k) const {
    return values[static_cast<std::size_t>(m) * num_frames + k];
  }
  void validate() const;
};

// Number of frames produced for a signal of the given length.
int frame_count(std::int64_t num_samples, const AceConfig& cfg);

// Per-frame, per-band envelope magnitudes (M x K, electrode-major, same
// layout as Electrodogram::values). Linear in input amplitude.
std::vector<double> analyze(const AudioSignal& audio, const AceConfig& cfg);

// Keeps the n_sel largest entries of each frame, zeroing the rest. Ties are
// broken toward the lower electrode index.
std::vector<double> select_bands(const std::vector<double>& envelopes, int m,
                                 int k, int n_sel);

// Maps selected envelopes to stimulation levels: v normalized to saturation,
// compressed by ln(1 + steepness*v) / ln(1 + steepness), then placed in
// [T[m], C[m]]. Zero (sub-floor) envelopes map to 0.
Electrodogram compress_to_levels(const std::vector<double>& envelopes, int m,
                                 int k, double frame_rate,
                                 const ClinicalMap& map);

// analyze -> select_bands -> compress_to_levels.
Electrodogram encode(const AudioSignal& audio, const AceConfig& cfg,
                     const ClinicalMap& map);

enum class EgmFormat { text, binary };

// Line-oriented text format ("ELECTRODOGRAM v1 M=.. K=.. rate=.." header,
// then K lines of M values) or packed little-endian float32 frames with an
// "EGM1" magic. Both round-trip bit-exactly.
void write_electrodogram(const Electrodogram& e, const std::string& path,
                         EgmFormat format);
Electrodogram read_electrodogram(const std::string& path);

}  // namespace bisep::ace

#endif  // BISEP_ACE_HPP_
