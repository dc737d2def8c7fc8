// include/bisep/model.hpp

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

#ifndef BISEP_MODEL_HPP_
#define BISEP_MODEL_HPP_

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bisep/ace.hpp"
#include "bisep/autodiff.hpp"
#include "bisep/dsp.hpp"
#include "bisep/errors.hpp"
#include "bisep/rng.hpp"
#include "bisep/tensor.hpp"

namespace bisep::model {

// Which separator is built: the audio-only baseline masks the mixture twice
// (one mask per talker) and trains permutation-invariantly; the
// brain-informed variant multiplies an attention-cue embedding into the
// mixture features element-wise and produces a single attended output.
enum class Variant { baseline, brain_informed };

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);

// Masking-network geometry. The encoder is a strided 1-D convolution whose
// stride is half the kernel, so each output frame sees exactly one kernel
// window of input (kernel_length samples of lookahead from the frame start
// and nothing more -- the end-to-end algorithmic latency).
struct ModelConfig {
  int kernel_length = 32;     // encoder kernel L (samples)
  int stride = 16;            // encoder hop; must equal L/2
  int num_filters = 64;       // encoder feature channels N
  int bottleneck_channels = 64;  // trunk width B
  int hidden_channels = 128;  // width H inside each block
  int num_stacks = 2;
  int blocks_per_stack = 4;   // dilations 1, 2, 4, ... within a stack
  int depthwise_kernel = 3;   // causal taps P per hidden channel
  int num_electrodes = 22;    // output rows M
  double sample_rate = 16000.0;

  void validate() const;
  int frames_for(std::int64_t num_samples) const;
};

template <typename T>
struct ParameterT {
  std::string name;
  TensorT<T> value;
  TensorT<T> grad;
};

template <typename T>
struct ModelBundleT {
  Variant variant = Variant::brain_informed;
  ModelConfig config;
  std::vector<ParameterT<T>> params;

  ParameterT<T>& find(const std::string& name) {
    for (auto& p : params) {
      if (p.name == name) return p;
    }
    throw ConfigError("model: no parameter named " + name);
  }
  const ParameterT<T>& find(const std::string& name) const {
    for (const auto& p : params) {
      if (p.name == name) return p;
    }
    throw ConfigError("model: no parameter named " + name);
  }
};

template <typename T>
std::size_t param_count(const ModelBundleT<T>& model) {
  std::size_t total = 0;
  for (const auto& p : model.params) total += p.value.numel();
  return total;
}

template <typename T>
void zero_grads(ModelBundleT<T>& model) {
  for (auto& p : model.params) p.grad.fill(T(0));
}

// Node ids of everything a caller may want to inspect after a forward pass.
template <typename T>
struct ForwardResultT {
  int input_id = -1;    // mixture leaf, 1 x T
  int cue_id = -1;      // cue leaf, 1 x T (brain-informed only)
  int mask_id = -1;     // attended mask (or first mask for audio-only)
  int mask2_id = -1;    // second mask (audio-only only)
  int output_id = -1;   // M x K prediction (attended / first talker)
  int output2_id = -1;  // M x K second-talker prediction (audio-only only)
  std::vector<int> param_ids;  // aligned with bundle.params
};

namespace detail {

template <typename T>
void add_param(ModelBundleT<T>& model, const std::string& name, int rows,
               int cols, Rng& rng, double init_scale, double constant,
               bool use_constant) {
  ParameterT<T> p;
  p.name = name;
  p.value = TensorT<T>(rows, cols);
  p.grad = TensorT<T>(rows, cols);
  if (use_constant) {
    p.value.fill(static_cast<T>(constant));
  } else {
    for (auto& v : p.value.data) {
      v = static_cast<T>(rng.uniform(-init_scale, init_scale));
    }
  }
  model.params.push_back(std::move(p));
}

template <typename T>
void add_weight(ModelBundleT<T>& model, const std::string& name, int rows,
                int cols, Rng& rng) {
  // Uniform(+-sqrt(1/fan_in)); fan_in is the reduced dimension (columns).
  add_param(model, name, rows, cols, rng, std::sqrt(1.0 / cols), 0.0, false);
}

template <typename T>
void add_const(ModelBundleT<T>& model, const std::string& name, int rows,
               double value, Rng& rng) {
  add_param(model, name, rows, 1, rng, 0.0, value, true);
}

inline std::string block_prefix(int stack, int block) {
  return "s" + std::to_string(stack) + "b" + std::to_string(block) + ".";
}

}  // namespace detail

// Builds a freshly initialized model. Weights are uniform with fan-in
// scaling, biases and norm shifts zero, norm gains one, PReLU slopes 0.25.
// The parameter order is fixed and is the checkpoint layout.
template <typename T>
ModelBundleT<T> build_model(Variant variant, const ModelConfig& cfg,
                            std::uint64_t seed) {
  cfg.validate();
  ModelBundleT<T> model;
  model.variant = variant;
  model.config = cfg;
  Rng rng(Rng::derive(seed, {0x6d6f64656cULL}));  // independent init stream

  using detail::add_const;
  using detail::add_weight;

  add_weight(model, "enc_audio.w", cfg.num_filters, cfg.kernel_length, rng);
  if (variant == Variant::brain_informed) {
    add_weight(model, "enc_cue.w", cfg.num_filters, cfg.kernel_length, rng);
  }
  add_weight(model, "bottleneck.w", cfg.bottleneck_channels, cfg.num_filters,
             rng);
  add_const(model, "bottleneck.b", cfg.bottleneck_channels, 0.0, rng);

  for (int s = 0; s < cfg.num_stacks; ++s) {
    for (int b = 0; b < cfg.blocks_per_stack; ++b) {
      const std::string prefix = detail::block_prefix(s, b);
      add_weight(model, prefix + "in.w", cfg.hidden_channels,
                 cfg.bottleneck_channels, rng);
      add_const(model, prefix + "in.b", cfg.hidden_channels, 0.0, rng);
      add_const(model, prefix + "prelu1", cfg.hidden_channels, 0.25, rng);
      add_const(model, prefix + "norm1.g", cfg.hidden_channels, 1.0, rng);
      add_const(model, prefix + "norm1.b", cfg.hidden_channels, 0.0, rng);
      add_weight(model, prefix + "dw.w", cfg.hidden_channels,
                 cfg.depthwise_kernel, rng);
      add_const(model, prefix + "dw.b", cfg.hidden_channels, 0.0, rng);
      add_const(model, prefix + "prelu2", cfg.hidden_channels, 0.25, rng);
      add_const(model, prefix + "norm2.g", cfg.hidden_channels, 1.0, rng);
      add_const(model, prefix + "norm2.b", cfg.hidden_channels, 0.0, rng);
      add_weight(model, prefix + "out.w", cfg.bottleneck_channels,
                 cfg.hidden_channels, rng);
      add_const(model, prefix + "out.b", cfg.bottleneck_channels, 0.0, rng);
    }
  }

  add_const(model, "trunk.prelu", cfg.bottleneck_channels, 0.25, rng);

  if (variant == Variant::brain_informed) {
    add_weight(model, "head.w", cfg.num_filters, cfg.bottleneck_channels, rng);
    add_const(model, "head.b", cfg.num_filters, 0.0, rng);
  } else {
    add_weight(model, "head1.w", cfg.num_filters, cfg.bottleneck_channels,
               rng);
    add_const(model, "head1.b", cfg.num_filters, 0.0, rng);
    add_weight(model, "head2.w", cfg.num_filters, cfg.bottleneck_channels,
               rng);
    add_const(model, "head2.b", cfg.num_filters, 0.0, rng);
  }
  add_weight(model, "dec.w", cfg.num_electrodes, cfg.num_filters, rng);
  add_const(model, "dec.b", cfg.num_electrodes, 0.0, rng);
  return model;
}

// Builds the forward graph on the given tape. `mixture` is a 1 x T signal;
// `cue` must be non-null (same length) for the brain-informed variant and null
// for audio-only. All parameters are bound as leaves so their gradients can
// be read back after backward().
template <typename T>
ForwardResultT<T> forward(nn::TapeT<T>& tape, const ModelBundleT<T>& model,
                          const TensorT<T>& mixture, const TensorT<T>* cue) {
  const ModelConfig& cfg = model.config;
  if (mixture.rows != 1) throw ShapeError("forward: mixture must be 1 x T");
  if (mixture.cols < cfg.kernel_length) {
    throw ShapeError("forward: input shorter than the encoder kernel");
  }
  const bool fused = model.variant == Variant::brain_informed;
  if (fused) {
    if (cue == nullptr) throw ShapeError("forward: cue required");
    if (cue->rows != 1 || cue->cols != mixture.cols) {
      throw ShapeError("forward: cue shape must match the mixture");
    }
  } else if (cue != nullptr) {
    throw ShapeError("forward: audio-only variant takes no cue");
  }

  ForwardResultT<T> r;
  r.param_ids.reserve(model.params.size());
  for (const auto& p : model.params) {
    r.param_ids.push_back(tape.leaf(p.value));
  }
  const auto pid = [&](const std::string& name) {
    for (std::size_t i = 0; i < model.params.size(); ++i) {
      if (model.params[i].name == name) return r.param_ids[i];
    }
    throw ConfigError("forward: no parameter named " + name);
  };

  // Both encoders rectify, so fusion and masking act as nonnegative gating
  // on nonnegative features rather than sign-scrambling multiplications.
  r.input_id = tape.leaf(mixture);
  int features =
      tape.relu(tape.conv1d(r.input_id, pid("enc_audio.w"), cfg.stride));
  const int mix_features = features;
  if (fused) {
    r.cue_id = tape.leaf(*cue);
    const int cue_features =
        tape.relu(tape.conv1d(r.cue_id, pid("enc_cue.w"), cfg.stride));
    features = tape.mul(features, cue_features);
  }

  int trunk = tape.pointwise(features, pid("bottleneck.w"), pid("bottleneck.b"));
  for (int s = 0; s < cfg.num_stacks; ++s) {
    for (int b = 0; b < cfg.blocks_per_stack; ++b) {
      const std::string prefix = detail::block_prefix(s, b);
      const int dilation = 1 << b;
      int h = tape.pointwise(trunk, pid(prefix + "in.w"), pid(prefix + "in.b"));
      h = tape.prelu(h, pid(prefix + "prelu1"));
      h = tape.cln(h, pid(prefix + "norm1.g"), pid(prefix + "norm1.b"));
      h = tape.depthwise_causal(h, pid(prefix + "dw.w"), pid(prefix + "dw.b"),
                                dilation);
      h = tape.prelu(h, pid(prefix + "prelu2"));
      h = tape.cln(h, pid(prefix + "norm2.g"), pid(prefix + "norm2.b"));
      h = tape.pointwise(h, pid(prefix + "out.w"), pid(prefix + "out.b"));
      trunk = tape.add(trunk, h);
    }
  }
  trunk = tape.prelu(trunk, pid("trunk.prelu"));

  const auto masked_output = [&](const char* head_w, const char* head_b,
                                 int* mask_out) {
    const int mask =
        tape.sigmoid(tape.pointwise(trunk, pid(head_w), pid(head_b)));
    *mask_out = mask;
    const int masked = tape.mul(mix_features, mask);
    return tape.pointwise(masked, pid("dec.w"), pid("dec.b"));
  };

  if (fused) {
    r.output_id = masked_output("head.w", "head.b", &r.mask_id);
  } else {
    r.output_id = masked_output("head1.w", "head1.b", &r.mask_id);
    r.output2_id = masked_output("head2.w", "head2.b", &r.mask2_id);
  }
  return r;
}

template <typename T>
ForwardResultT<T> forward(nn::TapeT<T>& tape, const ModelBundleT<T>& model,
                          const TensorT<T>& mixture, std::nullptr_t) {
  return forward(tape, model, mixture, static_cast<const TensorT<T>*>(nullptr));
}

// Adds the tape's parameter-leaf gradients into the bundle's grad buffers
// (call once per item when accumulating a batch).
template <typename T>
void accumulate_grads(ModelBundleT<T>& model, const nn::TapeT<T>& tape,
                      const ForwardResultT<T>& result) {
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    const TensorT<T>& g = tape.grad(result.param_ids[i]);
    TensorT<T>& acc = model.params[i].grad;
    for (std::size_t j = 0; j < acc.numel(); ++j) {
      acc.data[j] += g.data[j];
    }
  }
}

// Inference wrappers producing electrodograms: model outputs are clamped
// into [0,1] (the normalized stimulation range) at this boundary.
ace::Electrodogram forward_brain(const AudioSignal& mixture,
                                 const dsp::AttentionCue& cue,
                                 const ModelBundleT<float>& model);

std::pair<ace::Electrodogram, ace::Electrodogram> forward_baseline(
    const AudioSignal& mixture, const ModelBundleT<float>& model);

// Checkpoints store a text manifest (variant, geometry, parameter layout)
// followed by the raw little-endian float32 parameter blob.
void save_checkpoint(const ModelBundleT<float>& model, const std::string& path,
                     std::uint64_t seed);

struct Checkpoint {
  ModelBundleT<float> model;
  std::uint64_t seed = 0;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace bisep::model

#endif  // BISEP_MODEL_HPP_
