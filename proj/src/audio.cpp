// src/audio.cpp

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

#include "bisep/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "bisep/errors.hpp"

namespace bisep {

void validate(const AudioSignal& signal, const char* context) {
  if (signal.sample_rate <= 0.0) {
    throw ShapeError(std::string(context) + ": sample rate must be positive");
  }
  if (signal.samples.empty()) {
    throw ShapeError(std::string(context) + ": empty signal");
  }
  for (const double v : signal.samples) {
    if (!std::isfinite(v)) {
      throw ShapeError(std::string(context) + ": non-finite sample");
    }
  }
}

double energy(const AudioSignal& signal) {
  double acc = 0.0;
  for (const double v : signal.samples) acc += v * v;
  return acc;
}

namespace wav {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatIeeeFloat = 3;

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

std::uint32_t get_u32(const char* p) {
  return static_cast<std::uint8_t>(p[0]) |
         (static_cast<std::uint32_t>(static_cast<std::uint8_t>(p[1])) << 8) |
         (static_cast<std::uint32_t>(static_cast<std::uint8_t>(p[2])) << 16) |
         (static_cast<std::uint32_t>(static_cast<std::uint8_t>(p[3])) << 24);
}

std::uint16_t get_u16(const char* p) {
  return static_cast<std::uint16_t>(
      static_cast<std::uint8_t>(p[0]) |
      (static_cast<std::uint16_t>(static_cast<std::uint8_t>(p[1])) << 8));
}

}  // namespace

AudioSignal read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open wav file: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || bytes.compare(0, 4, "RIFF") != 0 ||
      bytes.compare(8, 4, "WAVE") != 0) {
    throw FormatError("not a RIFF/WAVE file: " + path);
  }

  std::uint16_t format_tag = 0;
  std::uint16_t channels = 0;
  std::uint16_t bits_per_sample = 0;
  std::uint32_t sample_rate = 0;
  bool have_fmt = false;
  std::size_t data_offset = 0;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::string id = bytes.substr(pos, 4);
    const std::uint32_t size = get_u32(bytes.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) {
      throw FormatError("truncated chunk '" + id + "' in " + path);
    }
    if (id == "fmt ") {
      if (size < 16) throw FormatError("fmt chunk too small in " + path);
      format_tag = get_u16(bytes.data() + body);
      channels = get_u16(bytes.data() + body + 2);
      sample_rate = get_u32(bytes.data() + body + 4);
      bits_per_sample = get_u16(bytes.data() + body + 14);
      have_fmt = true;
    } else if (id == "data") {
      data_offset = body;
      data_size = size;
    }
    pos = body + size + (size & 1);  // chunks are word aligned
  }

  if (!have_fmt || data_offset == 0) {
    throw FormatError("missing fmt or data chunk in " + path);
  }
  if (channels != 1) {
    throw FormatError("only mono wav supported: " + path);
  }

  AudioSignal signal;
  signal.sample_rate = static_cast<double>(sample_rate);
  if (format_tag == kFormatPcm && bits_per_sample == 16) {
    const std::size_t count = data_size / 2;
    signal.samples.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      const auto raw = static_cast<std::int16_t>(
          get_u16(bytes.data() + data_offset + 2 * i));
      signal.samples[i] = static_cast<double>(raw) / 32768.0;
    }
  } else if (format_tag == kFormatIeeeFloat && bits_per_sample == 32) {
    const std::size_t count = data_size / 4;
    signal.samples.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      const std::uint32_t raw = get_u32(bytes.data() + data_offset + 4 * i);
      float value = 0.0f;
      std::memcpy(&value, &raw, sizeof(value));
      signal.samples[i] = static_cast<double>(value);
    }
  } else {
    throw FormatError("unsupported wav encoding (want pcm16 or float32): " +
                      path);
  }
  if (signal.samples.empty()) throw FormatError("empty data chunk in " + path);
  return signal;
}

void write(const std::string& path, const AudioSignal& signal,
           SampleFormat format) {
  validate(signal, "wav::write");
  const auto frames = static_cast<std::uint32_t>(signal.samples.size());
  const std::uint16_t bytes_per_sample =
      format == SampleFormat::pcm16 ? 2 : 4;
  const std::uint32_t data_size = frames * bytes_per_sample;
  const bool is_float = format == SampleFormat::float32;

  std::string out;
  out.reserve(64 + data_size);
  out += "RIFF";
  // fmt(24) + fact(12, float only) + data header(8)
  put_u32(out, 4 + 24 + (is_float ? 12u : 0u) + 8 + data_size);
  out += "WAVE";
  out += "fmt ";
  put_u32(out, 16);
  put_u16(out, is_float ? kFormatIeeeFloat : kFormatPcm);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(signal.sample_rate));
  put_u32(out,
          static_cast<std::uint32_t>(signal.sample_rate) * bytes_per_sample);
  put_u16(out, bytes_per_sample);
  put_u16(out, static_cast<std::uint16_t>(8 * bytes_per_sample));
  if (is_float) {
    out += "fact";
    put_u32(out, 4);
    put_u32(out, frames);
  }
  out += "data";
  put_u32(out, data_size);

  if (format == SampleFormat::pcm16) {
    for (const double v : signal.samples) {
      const long scaled = std::lrint(std::clamp(v, -1.0, 1.0) * 32768.0);
      const auto q = static_cast<std::int16_t>(
          std::clamp<long>(scaled, -32768, 32767));
      put_u16(out, static_cast<std::uint16_t>(q));
    }
  } else {
    for (const double v : signal.samples) {
      const auto f = static_cast<float>(v);
      std::uint32_t raw = 0;
      std::memcpy(&raw, &f, sizeof(raw));
      put_u32(out, raw);
    }
  }

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot open for writing: " + path);
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw IoError("short write: " + path);
}

}  // namespace wav
}  // namespace bisep
