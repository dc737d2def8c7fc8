// include/bisep/audio.hpp

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

#ifndef BISEP_AUDIO_HPP_
#define BISEP_AUDIO_HPP_

#include <cstddef>
#include <string>
#include <vector>

namespace bisep {

// Mono sampled waveform. Samples are kept in double precision so that energy
// ratios and correlations hold to tight tolerances; file I/O quantizes.
struct AudioSignal {
  std::vector<double> samples;
  double sample_rate = 16000.0;

  std::size_t size() const { return samples.size(); }
};

// Throws if the signal violates its invariants (positive rate, finite
// samples, at least one sample).
void validate(const AudioSignal& signal, const char* context);

double energy(const AudioSignal& signal);

namespace wav {

enum class SampleFormat { pcm16, float32 };

// Reads a mono RIFF/WAVE file holding 16-bit PCM or 32-bit IEEE float data.
AudioSignal read(const std::string& path);

void write(const std::string& path, const AudioSignal& signal,
           SampleFormat format = SampleFormat::float32);

}  // namespace wav
}  // namespace bisep

#endif  // BISEP_AUDIO_HPP_
