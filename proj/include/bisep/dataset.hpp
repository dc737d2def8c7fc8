// include/bisep/dataset.hpp

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

#ifndef BISEP_DATASET_HPP_
#define BISEP_DATASET_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "bisep/audio.hpp"
#include "bisep/rng.hpp"

namespace bisep::data {

// One two-talker pair: a target utterance, an interfering utterance and the
// signal-to-interference ratio at which they are meant to be mixed.  Paths
// are stored relative to the manifest file so a corpus directory can be
// moved or copied as a unit.
struct ManifestEntry {
  std::string id;
  std::string target_path;
  std::string interferer_path;
  double sir_db = 0.0;
  std::string split;   // "train", "valid" or "test"
  std::uint64_t seed = 0;
};

struct CorpusManifest {
  std::vector<ManifestEntry> entries;

  // Entries belonging to one split, in manifest order.
  std::vector<ManifestEntry> split(const std::string& name) const;

  // Unique ids, known split names, sir_db within [0, 10].
  void validate() const;
};

// Tab-separated manifest with a fixed header line.  write_manifest creates
// parent-relative paths exactly as stored; read_manifest validates the
// header and field count and returns entries in file order.
void write_manifest(const std::string& path, const CorpusManifest& manifest);
CorpusManifest read_manifest(const std::string& path);

// Corpus generation settings.  Durations are in seconds; counts are the
// number of target/interferer pairs written per split.
struct SynthConfig {
  int train_count = 200;
  int valid_count = 40;
  int test_count = 40;
  double duration_s = 3.0;
  double sample_rate = 16000.0;

  void validate() const;
};

// One speech-like utterance: a harmonic carrier with a random fundamental
// in [100, 250] Hz shaped by two formant peaks, multiplied by a syllabic
// 2-6 Hz amplitude modulation, with short band-limited noise bursts mixed
// in at syllable onsets.  Fully determined by the rng state.
AudioSignal synth_utterance(double duration_s, double sample_rate, Rng& rng);

// Generates the full corpus under out_dir (WAVs in out_dir/wav, manifest at
// out_dir/manifest.tsv) and returns the manifest.  Every utterance and every
// sir_db draw derives from master_seed, so identical seeds give a
// byte-identical corpus.
CorpusManifest synth_corpus(const SynthConfig& cfg, const std::string& out_dir,
                            std::uint64_t master_seed);

// A pair loaded back from disk, with paths resolved against the manifest
// directory.
struct LoadedPair {
  std::string id;
  AudioSignal target;
  AudioSignal interferer;
  double sir_db = 0.0;
  std::uint64_t seed = 0;
};

std::vector<LoadedPair> load_split(const CorpusManifest& manifest,
                                   const std::string& manifest_path,
                                   const std::string& split);

// Directory part of a path ("." when there is none).
std::string parent_dir(const std::string& path);

}  // namespace bisep::data

#endif  // BISEP_DATASET_HPP_
