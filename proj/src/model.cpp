// src/model.cpp

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

#include "bisep/model.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace bisep::model {

const char* variant_name(Variant v) {
  return v == Variant::baseline ? "baseline" : "brain_informed";
}

Variant variant_from_name(const std::string& name) {
  if (name == "baseline") return Variant::baseline;
  if (name == "brain_informed") return Variant::brain_informed;
  throw ConfigError("unknown model variant: " + name);
}

void ModelConfig::validate() const {
  if (kernel_length < 2 || kernel_length % 2 != 0) {
    throw ConfigError("model: kernel_length must be even and >= 2");
  }
  if (stride * 2 != kernel_length) {
    throw ConfigError("model: stride must be half the kernel length");
  }
  if (num_filters < 1 || bottleneck_channels < 1 || hidden_channels < 1 ||
      num_stacks < 1 || blocks_per_stack < 1 || depthwise_kernel < 1 ||
      num_electrodes < 1) {
    throw ConfigError("model: all size parameters must be >= 1");
  }
  if (sample_rate <= 0.0) throw ConfigError("model: bad sample rate");
}

int ModelConfig::frames_for(std::int64_t num_samples) const {
  if (num_samples < kernel_length) {
    throw ShapeError("model: signal shorter than the encoder kernel");
  }
  return static_cast<int>((num_samples - kernel_length) / stride) + 1;
}

namespace {

TensorT<float> to_row_tensor(const std::vector<double>& samples) {
  TensorT<float> t(1, static_cast<int>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    t.data[i] = static_cast<float>(samples[i]);
  }
  return t;
}

ace::Electrodogram to_electrodogram(const TensorT<float>& out,
                                    double frame_rate) {
  ace::Electrodogram e;
  e.num_electrodes = out.rows;
  e.num_frames = out.cols;
  e.frame_rate = frame_rate;
  e.values.resize(out.numel());
  for (int m = 0; m < out.rows; ++m) {
    for (int k = 0; k < out.cols; ++k) {
      e.at(m, k) = std::clamp(out.at(m, k), 0.0f, 1.0f);
    }
  }
  return e;
}

}  // namespace

ace::Electrodogram forward_brain(const AudioSignal& mixture,
                                 const dsp::AttentionCue& cue,
                                 const ModelBundleT<float>& model) {
  if (model.variant != Variant::brain_informed) {
    throw ConfigError("forward_brain: model is not the brain-informed variant");
  }
  validate(mixture, "forward_brain");
  if (cue.size() != mixture.size()) {
    throw ShapeError("forward_brain: cue length must match the mixture");
  }
  const TensorT<float> x = to_row_tensor(mixture.samples);
  const TensorT<float> c = to_row_tensor(cue.samples);
  nn::TapeT<float> tape(/*track_gradients=*/false);
  const ForwardResultT<float> r = forward(tape, model, x, &c);
  const double frame_rate = model.config.sample_rate / model.config.stride;
  return to_electrodogram(tape.value(r.output_id), frame_rate);
}

std::pair<ace::Electrodogram, ace::Electrodogram> forward_baseline(
    const AudioSignal& mixture, const ModelBundleT<float>& model) {
  if (model.variant != Variant::baseline) {
    throw ConfigError("forward_baseline: model is not the baseline variant");
  }
  validate(mixture, "forward_baseline");
  const TensorT<float> x = to_row_tensor(mixture.samples);
  nn::TapeT<float> tape(/*track_gradients=*/false);
  const ForwardResultT<float> r = forward<float>(tape, model, x, nullptr);
  const double frame_rate = model.config.sample_rate / model.config.stride;
  return {to_electrodogram(tape.value(r.output_id), frame_rate),
          to_electrodogram(tape.value(r.output2_id), frame_rate)};
}

namespace {

constexpr const char* kCheckpointMagic = "BISEP-CKPT v1";

}  // namespace

void save_checkpoint(const ModelBundleT<float>& model, const std::string& path,
                     std::uint64_t seed) {
  std::string out;
  out += kCheckpointMagic;
  out += '\n';
  char line[320];
  std::snprintf(line, sizeof(line), "variant %s\n", variant_name(model.variant));
  out += line;
  const ModelConfig& c = model.config;
  std::snprintf(line, sizeof(line),
                "kernel_length %d\nstride %d\nnum_filters %d\n"
                "bottleneck_channels %d\nhidden_channels %d\nnum_stacks %d\n"
                "blocks_per_stack %d\ndepthwise_kernel %d\nnum_electrodes %d\n"
                "sample_rate %.9g\n",
                c.kernel_length, c.stride, c.num_filters,
                c.bottleneck_channels, c.hidden_channels, c.num_stacks,
                c.blocks_per_stack, c.depthwise_kernel, c.num_electrodes,
                c.sample_rate);
  out += line;
  std::snprintf(line, sizeof(line), "seed %llu\n",
                static_cast<unsigned long long>(seed));
  out += line;

  std::size_t total = 0;
  for (const auto& p : model.params) {
    std::snprintf(line, sizeof(line), "param %s %d %d\n", p.name.c_str(),
                  p.value.rows, p.value.cols);
    out += line;
    total += p.value.numel();
  }
  std::snprintf(line, sizeof(line), "BLOB %zu\n", total);
  out += line;
  for (const auto& p : model.params) {
    const auto* bytes = reinterpret_cast<const char*>(p.value.data.data());
    out.append(bytes, p.value.numel() * sizeof(float));
  }

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot open checkpoint for writing: " + path);
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw IoError("short checkpoint write: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());

  std::size_t cursor = 0;
  const auto next_line = [&]() {
    const std::size_t eol = bytes.find('\n', cursor);
    if (eol == std::string::npos) {
      throw FormatError("truncated checkpoint header: " + path);
    }
    std::string line = bytes.substr(cursor, eol - cursor);
    cursor = eol + 1;
    return line;
  };

  if (next_line() != kCheckpointMagic) {
    throw FormatError("not a checkpoint file: " + path);
  }

  Checkpoint ckpt;
  ModelConfig cfg;
  Variant variant = Variant::brain_informed;
  bool have_variant = false;
  struct ParamDecl {
    std::string name;
    int rows;
    int cols;
  };
  std::vector<ParamDecl> decls;
  std::size_t blob_count = 0;

  for (;;) {
    const std::string line = next_line();
    std::istringstream fields(line);
    std::string key;
    fields >> key;
    if (key == "BLOB") {
      if (!(fields >> blob_count)) {
        throw FormatError("bad BLOB line in checkpoint: " + path);
      }
      break;
    } else if (key == "variant") {
      std::string name;
      fields >> name;
      variant = variant_from_name(name);
      have_variant = true;
    } else if (key == "param") {
      ParamDecl d;
      if (!(fields >> d.name >> d.rows >> d.cols)) {
        throw FormatError("bad param line in checkpoint: " + path);
      }
      decls.push_back(std::move(d));
    } else if (key == "seed") {
      unsigned long long s = 0;
      fields >> s;
      ckpt.seed = s;
    } else if (key == "kernel_length") {
      fields >> cfg.kernel_length;
    } else if (key == "stride") {
      fields >> cfg.stride;
    } else if (key == "num_filters") {
      fields >> cfg.num_filters;
    } else if (key == "bottleneck_channels") {
      fields >> cfg.bottleneck_channels;
    } else if (key == "hidden_channels") {
      fields >> cfg.hidden_channels;
    } else if (key == "num_stacks") {
      fields >> cfg.num_stacks;
    } else if (key == "blocks_per_stack") {
      fields >> cfg.blocks_per_stack;
    } else if (key == "depthwise_kernel") {
      fields >> cfg.depthwise_kernel;
    } else if (key == "num_electrodes") {
      fields >> cfg.num_electrodes;
    } else if (key == "sample_rate") {
      fields >> cfg.sample_rate;
    } else {
      throw FormatError("unknown checkpoint field '" + key + "': " + path);
    }
    if (fields.fail()) {
      throw FormatError("malformed checkpoint line '" + line + "': " + path);
    }
  }
  if (!have_variant) throw FormatError("checkpoint missing variant: " + path);

  // Rebuild the parameter layout from the stored geometry and insist the
  // declared layout matches it exactly.
  ckpt.model = build_model<float>(variant, cfg, /*seed=*/0);
  if (decls.size() != ckpt.model.params.size()) {
    throw FormatError("checkpoint parameter list does not match geometry: " +
                      path);
  }
  std::size_t total = 0;
  for (std::size_t i = 0; i < decls.size(); ++i) {
    const auto& d = decls[i];
    const auto& p = ckpt.model.params[i];
    if (d.name != p.name || d.rows != p.value.rows || d.cols != p.value.cols) {
      throw FormatError("checkpoint parameter mismatch at " + d.name + ": " +
                        path);
    }
    total += p.value.numel();
  }
  if (blob_count != total) {
    throw FormatError("checkpoint blob count does not match layout: " + path);
  }
  if (bytes.size() - cursor != total * sizeof(float)) {
    throw FormatError("checkpoint blob is truncated or oversized: " + path);
  }
  for (auto& p : ckpt.model.params) {
    std::memcpy(p.value.data.data(), bytes.data() + cursor,
                p.value.numel() * sizeof(float));
    cursor += p.value.numel() * sizeof(float);
  }
  return ckpt;
}

}  // namespace bisep::model
