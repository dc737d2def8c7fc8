// include/bisep/autodiff.hpp

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

#ifndef BISEP_AUTODIFF_HPP_
#define BISEP_AUTODIFF_HPP_

#include <cmath>
#include <functional>
#include <type_traits>
#include <utility>
#include <vector>

#include "bisep/errors.hpp"
#include "bisep/tensor.hpp"

namespace bisep::nn {

// Reverse-mode tape over TensorT<T> values. Every op appends one node whose
// closure scatters the node's gradient back into its inputs' gradients;
// backward() replays the closures in reverse creation order. The scalar type
// is a template parameter so the production models run in float while
// numerical gradient checks instantiate the same code in double.
template <typename T>
class TapeT {
 public:
  using Tensor = TensorT<T>;

  // A tape built for inference skips gradient buffers and closures.
  explicit TapeT(bool track_gradients = true) : track_(track_gradients) {}

  bool tracking() const { return track_; }

  // Leaf with gradient tracking (parameters, probe inputs).
  int leaf(Tensor value) { return push(std::move(value), nullptr); }

  // Leaf that never receives a gradient (network inputs, targets).
  int constant(Tensor value) {
    const int id = push(std::move(value), nullptr);
    nodes_[static_cast<std::size_t>(id)].grad.data.clear();
    nodes_[static_cast<std::size_t>(id)].frozen = true;
    return id;
  }

  const Tensor& value(int id) const { return node(id).value; }
  const Tensor& grad(int id) const {
    const Node& n = node(id);
    if (n.frozen || n.grad.data.empty()) {
      throw ShapeError("tape: node has no gradient buffer");
    }
    return n.grad;
  }

  // y = w (N x L) strided over x (1 x T): y[f,k] = sum_l w[f,l] x[k*s + l].
  int conv1d(int x_id, int w_id, int stride) {
    const Tensor& x = node(x_id).value;
    const Tensor& w = node(w_id).value;
    if (x.rows != 1) throw ShapeError("conv1d: input must be 1 x T");
    if (stride < 1) throw ConfigError("conv1d: stride must be >= 1");
    const int length = x.cols;
    const int kernel = w.cols;
    if (length < kernel) throw ShapeError("conv1d: input shorter than kernel");
    const int frames = (length - kernel) / stride + 1;

    Tensor columns(kernel, frames);
    for (int k = 0; k < frames; ++k) {
      for (int l = 0; l < kernel; ++l) {
        columns.at(l, k) = x.at(0, k * stride + l);
      }
    }
    Tensor y(w.rows, frames);
    y.map().noalias() = w.map() * columns.map();

    return push(std::move(y), [this, x_id, w_id, stride, kernel, frames,
                               columns = std::move(columns)](const Node& out) {
      if (wants_grad(w_id)) {
        node(w_id).grad.map().noalias() +=
            out.grad.map() * columns.map().transpose();
      }
      if (wants_grad(x_id)) {
        Tensor dcol(kernel, frames);
        dcol.map().noalias() =
            node(w_id).value.map().transpose() * out.grad.map();
        Tensor& dx = node(x_id).grad;
        for (int k = 0; k < frames; ++k) {
          for (int l = 0; l < kernel; ++l) {
            dx.at(0, k * stride + l) += dcol.at(l, k);
          }
        }
      }
    });
  }

  // y = w (Cout x Cin) x (Cin x K) + b, b broadcast over frames (pass
  // bias_id = -1 for no bias).
  int pointwise(int x_id, int w_id, int bias_id) {
    const Tensor& x = node(x_id).value;
    const Tensor& w = node(w_id).value;
    if (w.cols != x.rows) throw ShapeError("pointwise: weight/input mismatch");
    Tensor y(w.rows, x.cols);
    y.map().noalias() = w.map() * x.map();
    if (bias_id >= 0) {
      const Tensor& b = node(bias_id).value;
      if (b.rows != w.rows || b.cols != 1) {
        throw ShapeError("pointwise: bias must be Cout x 1");
      }
      y.map().colwise() += b.map().col(0);
    }
    return push(std::move(y), [this, x_id, w_id, bias_id](const Node& out) {
      if (wants_grad(w_id)) {
        node(w_id).grad.map().noalias() +=
            out.grad.map() * node(x_id).value.map().transpose();
      }
      if (wants_grad(x_id)) {
        node(x_id).grad.map().noalias() +=
            node(w_id).value.map().transpose() * out.grad.map();
      }
      if (bias_id >= 0 && wants_grad(bias_id)) {
        node(bias_id).grad.map().col(0) += out.grad.map().rowwise().sum();
      }
    });
  }

  // Per-channel causal FIR: y[c,k] = b[c] + sum_p w[c,p] x[c, k-d*(P-1-p)],
  // with x treated as zero before frame 0. The newest tap is p = P-1, so no
  // output frame reads ahead of its own frame.
  int depthwise_causal(int x_id, int w_id, int bias_id, int dilation) {
    const Tensor& x = node(x_id).value;
    const Tensor& w = node(w_id).value;
    if (w.rows != x.rows) throw ShapeError("depthwise: channel mismatch");
    if (dilation < 1) throw ConfigError("depthwise: dilation must be >= 1");
    const int channels = x.rows;
    const int frames = x.cols;
    const int taps = w.cols;
    const Tensor* bias = nullptr;
    if (bias_id >= 0) {
      bias = &node(bias_id).value;
      if (bias->rows != channels || bias->cols != 1) {
        throw ShapeError("depthwise: bias must be C x 1");
      }
    }
    Tensor y(channels, frames);
    for (int c = 0; c < channels; ++c) {
      const T b = bias ? bias->at(c, 0) : T(0);
      for (int k = 0; k < frames; ++k) {
        T acc = b;
        for (int p = 0; p < taps; ++p) {
          const int src = k - dilation * (taps - 1 - p);
          if (src >= 0) acc += w.at(c, p) * x.at(c, src);
        }
        y.at(c, k) = acc;
      }
    }
    return push(std::move(y), [this, x_id, w_id, bias_id, dilation, channels,
                               frames, taps](const Node& out) {
      const Tensor& xv = node(x_id).value;
      const Tensor& wv = node(w_id).value;
      for (int c = 0; c < channels; ++c) {
        for (int k = 0; k < frames; ++k) {
          const T gy = out.grad.at(c, k);
          if (gy == T(0)) continue;
          for (int p = 0; p < taps; ++p) {
            const int src = k - dilation * (taps - 1 - p);
            if (src < 0) continue;
            if (wants_grad(w_id)) node(w_id).grad.at(c, p) += gy * xv.at(c, src);
            if (wants_grad(x_id)) node(x_id).grad.at(c, src) += gy * wv.at(c, p);
          }
          if (bias_id >= 0 && wants_grad(bias_id)) {
            node(bias_id).grad.at(c, 0) += gy;
          }
        }
      }
    });
  }

  // y = x >= 0 ? x : a[c] * x, one learnable slope per channel.
  int prelu(int x_id, int slope_id) {
    const Tensor& x = node(x_id).value;
    const Tensor& a = node(slope_id).value;
    if (a.rows != x.rows || a.cols != 1) {
      throw ShapeError("prelu: slopes must be C x 1");
    }
    Tensor y(x.rows, x.cols);
    for (int c = 0; c < x.rows; ++c) {
      const T slope = a.at(c, 0);
      for (int k = 0; k < x.cols; ++k) {
        const T v = x.at(c, k);
        y.at(c, k) = v >= T(0) ? v : slope * v;
      }
    }
    return push(std::move(y), [this, x_id, slope_id](const Node& out) {
      const Tensor& xv = node(x_id).value;
      const Tensor& av = node(slope_id).value;
      for (int c = 0; c < xv.rows; ++c) {
        const T slope = av.at(c, 0);
        T dslope = T(0);
        for (int k = 0; k < xv.cols; ++k) {
          const T gy = out.grad.at(c, k);
          const T v = xv.at(c, k);
          if (v >= T(0)) {
            if (wants_grad(x_id)) node(x_id).grad.at(c, k) += gy;
          } else {
            if (wants_grad(x_id)) node(x_id).grad.at(c, k) += gy * slope;
            dslope += gy * v;
          }
        }
        if (wants_grad(slope_id)) node(slope_id).grad.at(c, 0) += dslope;
      }
    });
  }

  // y = max(x, 0); the subgradient at exactly 0 is taken as 0.
  int relu(int x_id) {
    const Tensor& x = node(x_id).value;
    Tensor y(x.rows, x.cols);
    for (std::size_t i = 0; i < x.numel(); ++i) {
      y.data[i] = x.data[i] > T(0) ? x.data[i] : T(0);
    }
    return push(std::move(y), [this, x_id](const Node& out) {
      if (!wants_grad(x_id)) return;
      const Tensor& xv = node(x_id).value;
      Tensor& dx = node(x_id).grad;
      for (std::size_t i = 0; i < xv.numel(); ++i) {
        if (xv.data[i] > T(0)) dx.data[i] += out.grad.data[i];
      }
    });
  }

  // Cumulative layer norm: frame t is normalized by the mean and variance of
  // all entries in frames 0..t (all channels), then scaled per channel:
  // y[c,t] = g[c] * (x[c,t] - mu_t) * r_t + b[c], r_t = 1/sqrt(var_t + eps).
  // Causal by construction: statistics never look ahead.
  int cln(int x_id, int gain_id, int bias_id, T eps = T(1e-8)) {
    const Tensor& x = node(x_id).value;
    const Tensor& g = node(gain_id).value;
    const Tensor& b = node(bias_id).value;
    if (g.rows != x.rows || g.cols != 1 || b.rows != x.rows || b.cols != 1) {
      throw ShapeError("cln: gain/bias must be C x 1");
    }
    const int channels = x.rows;
    const int frames = x.cols;

    std::vector<T> mu(static_cast<std::size_t>(frames));
    std::vector<T> r(static_cast<std::size_t>(frames));
    T sum = T(0);
    T sum_sq = T(0);
    for (int k = 0; k < frames; ++k) {
      for (int c = 0; c < channels; ++c) {
        const T v = x.at(c, k);
        sum += v;
        sum_sq += v * v;
      }
      const T n = static_cast<T>(channels) * static_cast<T>(k + 1);
      const T mean = sum / n;
      T variance = sum_sq / n - mean * mean;
      if (variance < T(0)) variance = T(0);
      mu[static_cast<std::size_t>(k)] = mean;
      r[static_cast<std::size_t>(k)] = T(1) / std::sqrt(variance + eps);
    }

    Tensor y(channels, frames);
    for (int c = 0; c < channels; ++c) {
      const T gain = g.at(c, 0);
      const T shift = b.at(c, 0);
      for (int k = 0; k < frames; ++k) {
        y.at(c, k) = gain * (x.at(c, k) - mu[static_cast<std::size_t>(k)]) *
                         r[static_cast<std::size_t>(k)] +
                     shift;
      }
    }

    return push(std::move(y), [this, x_id, gain_id, bias_id, channels, frames,
                               mu = std::move(mu),
                               r = std::move(r)](const Node& out) {
      const Tensor& xv = node(x_id).value;
      const Tensor& gv = node(gain_id).value;

      // Per-frame reductions of the incoming gradient.
      std::vector<T> a_k(static_cast<std::size_t>(frames), T(0));
      std::vector<T> b_k(static_cast<std::size_t>(frames), T(0));
      for (int k = 0; k < frames; ++k) {
        T acc_a = T(0);
        T acc_b = T(0);
        for (int c = 0; c < channels; ++c) {
          const T gg = out.grad.at(c, k) * gv.at(c, 0);
          acc_a += gg;
          acc_b += gg * (xv.at(c, k) - mu[static_cast<std::size_t>(k)]);
        }
        a_k[static_cast<std::size_t>(k)] = acc_a;
        b_k[static_cast<std::size_t>(k)] = acc_b;
      }

      // Frame s feeds every later frame's statistics, so the chain rule
      // yields suffix sums over k >= s.
      std::vector<T> u(static_cast<std::size_t>(frames) + 1, T(0));
      std::vector<T> v(static_cast<std::size_t>(frames) + 1, T(0));
      std::vector<T> w(static_cast<std::size_t>(frames) + 1, T(0));
      for (int k = frames - 1; k >= 0; --k) {
        const std::size_t i = static_cast<std::size_t>(k);
        const T n = static_cast<T>(channels) * static_cast<T>(k + 1);
        const T rk = r[i];
        const T r3 = rk * rk * rk;
        u[i] = u[i + 1] + a_k[i] * rk / n;
        v[i] = v[i + 1] + b_k[i] * r3 / n;
        w[i] = w[i + 1] + b_k[i] * r3 * mu[i] / n;
      }

      if (wants_grad(x_id)) {
        for (int c = 0; c < channels; ++c) {
          const T gain = gv.at(c, 0);
          for (int k = 0; k < frames; ++k) {
            const std::size_t i = static_cast<std::size_t>(k);
            node(x_id).grad.at(c, k) += out.grad.at(c, k) * gain * r[i] -
                                        u[i] - xv.at(c, k) * v[i] + w[i];
          }
        }
      }
      if (wants_grad(gain_id) || wants_grad(bias_id)) {
        for (int c = 0; c < channels; ++c) {
          T dg = T(0);
          T db = T(0);
          for (int k = 0; k < frames; ++k) {
            const std::size_t i = static_cast<std::size_t>(k);
            const T normed = (xv.at(c, k) - mu[i]) * r[i];
            dg += out.grad.at(c, k) * normed;
            db += out.grad.at(c, k);
          }
          if (wants_grad(gain_id)) node(gain_id).grad.at(c, 0) += dg;
          if (wants_grad(bias_id)) node(bias_id).grad.at(c, 0) += db;
        }
      }
    });
  }

  int sigmoid(int x_id) {
    const Tensor& x = node(x_id).value;
    Tensor y(x.rows, x.cols);
    for (std::size_t i = 0; i < x.numel(); ++i) {
      y.data[i] = T(1) / (T(1) + std::exp(-x.data[i]));
    }
    return push(std::move(y), [this, x_id](const Node& out) {
      if (!wants_grad(x_id)) return;
      Tensor& dx = node(x_id).grad;
      for (std::size_t i = 0; i < out.value.numel(); ++i) {
        const T s = out.value.data[i];
        dx.data[i] += out.grad.data[i] * s * (T(1) - s);
      }
    });
  }

  int mul(int a_id, int b_id) {
    const Tensor& a = node(a_id).value;
    const Tensor& b = node(b_id).value;
    if (!a.same_shape(b)) throw ShapeError("mul: shape mismatch");
    Tensor y(a.rows, a.cols);
    for (std::size_t i = 0; i < a.numel(); ++i) {
      y.data[i] = a.data[i] * b.data[i];
    }
    return push(std::move(y), [this, a_id, b_id](const Node& out) {
      const Tensor& av = node(a_id).value;
      const Tensor& bv = node(b_id).value;
      if (wants_grad(a_id)) {
        Tensor& da = node(a_id).grad;
        for (std::size_t i = 0; i < av.numel(); ++i) {
          da.data[i] += out.grad.data[i] * bv.data[i];
        }
      }
      if (wants_grad(b_id)) {
        Tensor& db = node(b_id).grad;
        for (std::size_t i = 0; i < av.numel(); ++i) {
          db.data[i] += out.grad.data[i] * av.data[i];
        }
      }
    });
  }

  int add(int a_id, int b_id) {
    const Tensor& a = node(a_id).value;
    const Tensor& b = node(b_id).value;
    if (!a.same_shape(b)) throw ShapeError("add: shape mismatch");
    Tensor y(a.rows, a.cols);
    for (std::size_t i = 0; i < a.numel(); ++i) {
      y.data[i] = a.data[i] + b.data[i];
    }
    return push(std::move(y), [this, a_id, b_id](const Node& out) {
      for (const int in_id : {a_id, b_id}) {
        if (!wants_grad(in_id)) continue;
        Tensor& d = node(in_id).grad;
        for (std::size_t i = 0; i < d.numel(); ++i) {
          d.data[i] += out.grad.data[i];
        }
      }
    });
  }

  // Squared error summed over all entries and divided by the frame count
  // (per-frame squared L2 norm averaged over frames).
  int frame_mse(int pred_id, const Tensor& target) {
    const Tensor& p = node(pred_id).value;
    if (!p.same_shape(target)) throw ShapeError("frame_mse: shape mismatch");
    if (p.cols < 1) throw ShapeError("frame_mse: empty prediction");
    T acc = T(0);
    for (std::size_t i = 0; i < p.numel(); ++i) {
      const T d = p.data[i] - target.data[i];
      acc += d * d;
    }
    const T scale = T(1) / static_cast<T>(p.cols);
    Tensor y = Tensor::scalar(acc * scale);
    return push(std::move(y),
                [this, pred_id, target, scale](const Node& out) {
                  if (!wants_grad(pred_id)) return;
                  const Tensor& pv = node(pred_id).value;
                  Tensor& dp = node(pred_id).grad;
                  const T seed = out.grad.data[0];
                  for (std::size_t i = 0; i < pv.numel(); ++i) {
                    dp.data[i] +=
                        seed * T(2) * scale * (pv.data[i] - target.data[i]);
                  }
                });
  }

  int add_scalars(int a_id, int b_id) {
    const Tensor& a = node(a_id).value;
    const Tensor& b = node(b_id).value;
    if (a.numel() != 1 || b.numel() != 1) {
      throw ShapeError("add_scalars: operands must be scalars");
    }
    Tensor y = Tensor::scalar(a.data[0] + b.data[0]);
    return push(std::move(y), [this, a_id, b_id](const Node& out) {
      for (const int in_id : {a_id, b_id}) {
        if (wants_grad(in_id)) node(in_id).grad.data[0] += out.grad.data[0];
      }
    });
  }

  // Sum of one output frame across channels; used to probe which input
  // samples a single frame depends on.
  int frame_pick_sum(int x_id, int frame) {
    const Tensor& x = node(x_id).value;
    if (frame < 0 || frame >= x.cols) {
      throw ShapeError("frame_pick_sum: frame out of range");
    }
    T acc = T(0);
    for (int c = 0; c < x.rows; ++c) acc += x.at(c, frame);
    Tensor y = Tensor::scalar(acc);
    return push(std::move(y), [this, x_id, frame](const Node& out) {
      if (!wants_grad(x_id)) return;
      const T seed = out.grad.data[0];
      Tensor& dx = node(x_id).grad;
      for (int c = 0; c < dx.rows; ++c) dx.at(c, frame) += seed;
    });
  }

  // Seeds d(root)/d(root) = 1 and replays all closures newest-first.
  void backward(int root_id) {
    if (!track_) throw TrainingError("tape: inference tape cannot backward");
    Node& root = node(root_id);
    if (root.value.numel() != 1) {
      throw ShapeError("tape: backward root must be a scalar");
    }
    if (root.frozen) throw ShapeError("tape: backward root is a constant");
    root.grad.data[0] = T(1);
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
      if (it->back) it->back(*it);
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::function<void(const Node&)> back;
    bool frozen = false;
  };

  Node& node(int id) { return nodes_.at(static_cast<std::size_t>(id)); }
  const Node& node(int id) const {
    return nodes_.at(static_cast<std::size_t>(id));
  }

  bool wants_grad(int id) { return track_ && !node(id).frozen; }

  template <typename Fn>
  int push(Tensor value, Fn&& back) {
    Node n;
    if (track_) {
      n.grad = Tensor(value.rows, value.cols);
    }
    n.value = std::move(value);
    if constexpr (!std::is_same_v<std::decay_t<Fn>, std::nullptr_t>) {
      if (track_) n.back = std::forward<Fn>(back);
    }
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  int push(Tensor value, std::nullptr_t) {
    Node n;
    if (track_) {
      n.grad = Tensor(value.rows, value.cols);
    }
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  bool track_;
  std::vector<Node> nodes_;
};

using Tape = TapeT<float>;

}  // namespace bisep::nn

#endif  // BISEP_AUTODIFF_HPP_
