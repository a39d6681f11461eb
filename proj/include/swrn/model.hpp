#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "swrn/ops.hpp"
#include "swrn/tensor.hpp"

namespace swrn {

enum class Variant { baseline, sliding_window, full };

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::baseline: return "baseline";
    case Variant::sliding_window: return "sliding_window";
    case Variant::full: return "full";
  }
  return "?";
}

inline Variant variant_from_name(const std::string& s) {
  if (s == "baseline") return Variant::baseline;
  if (s == "sliding_window") return Variant::sliding_window;
  if (s == "full") return Variant::full;
  throw std::invalid_argument("unknown variant: " + s);
}

struct ModelConfig {
  std::size_t channels = 16;
  std::size_t color_channels = 3;
  std::size_t scale = 4;
  Variant variant = Variant::full;
  std::size_t layers_f1 = 4;
  std::size_t layers_f2 = 4;
  std::size_t layers_f3 = 4;
  std::size_t hidden_update_layers = 2;

  void validate() const {
    if (channels < 1) throw std::invalid_argument("ModelConfig: channels < 1");
    if (color_channels != 3)
      throw std::invalid_argument("ModelConfig: color_channels must be 3");
    if (scale != 4) throw std::invalid_argument("ModelConfig: scale must be 4");
    if (layers_f1 < 1 || layers_f2 < 1 || layers_f3 < 1)
      throw std::invalid_argument("ModelConfig: layer counts must be >= 1");
    if (variant == Variant::full && hidden_update_layers != 2)
      throw std::invalid_argument("ModelConfig: hidden_update_layers must be 2");
    if (variant == Variant::full &&
        layers_f1 + layers_f2 + layers_f3 + hidden_update_layers != 14) {
      throw std::invalid_argument(
          "ModelConfig: full variant requires 14 convolution layers total");
    }
  }

  std::size_t residual_channels() const { return color_channels * scale * scale; }
};

/// The ordered conv layers of one network instance. Group layout is fixed:
/// f1, f2, f3, then the two hidden-update layers (full variant only).
template <typename T = float>
struct Parameters {
  ModelConfig config;
  std::vector<ConvKernel<T>> f1, f2, f3;
  ConvKernel<T> h_fwd_update, h_bwd_update;

  bool has_hidden() const { return config.variant == Variant::full; }

  /// All kernels in the declared group order (serialization / optimizer order).
  std::vector<ConvKernel<T>*> kernels() {
    std::vector<ConvKernel<T>*> out;
    for (auto& k : f1) out.push_back(&k);
    for (auto& k : f2) out.push_back(&k);
    for (auto& k : f3) out.push_back(&k);
    if (has_hidden()) {
      out.push_back(&h_fwd_update);
      out.push_back(&h_bwd_update);
    }
    return out;
  }
  std::vector<const ConvKernel<T>*> kernels() const {
    std::vector<const ConvKernel<T>*> out;
    for (auto& k : f1) out.push_back(&k);
    for (auto& k : f2) out.push_back(&k);
    for (auto& k : f3) out.push_back(&k);
    if (has_hidden()) {
      out.push_back(&h_fwd_update);
      out.push_back(&h_bwd_update);
    }
    return out;
  }

  std::vector<std::string> kernel_names() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < f1.size(); ++i) out.push_back("f1[" + std::to_string(i) + "]");
    for (std::size_t i = 0; i < f2.size(); ++i) out.push_back("f2[" + std::to_string(i) + "]");
    for (std::size_t i = 0; i < f3.size(); ++i) out.push_back("f3[" + std::to_string(i) + "]");
    if (has_hidden()) {
      out.push_back("h_fwd_update");
      out.push_back("h_bwd_update");
    }
    return out;
  }

  std::size_t param_count() const {
    std::size_t total = 0;
    for (const auto* k : kernels()) total += k->param_count();
    return total;
  }

  bool all_finite() const {
    for (const auto* k : kernels()) {
      for (T v : k->weights)
        if (!std::isfinite(v)) return false;
      for (T v : k->bias)
        if (!std::isfinite(v)) return false;
    }
    return true;
  }

  template <typename U>
  Parameters<U> cast() const {
    Parameters<U> out;
    out.config = config;
    for (const auto& k : f1) out.f1.push_back(k.template cast<U>());
    for (const auto& k : f2) out.f2.push_back(k.template cast<U>());
    for (const auto& k : f3) out.f3.push_back(k.template cast<U>());
    out.h_fwd_update = h_fwd_update.template cast<U>();
    out.h_bwd_update = h_bwd_update.template cast<U>();
    return out;
  }
};

namespace detail {

// Per-group (in, out) channel widths under the fixed wiring.
struct Wiring {
  std::vector<std::pair<std::size_t, std::size_t>> f1, f2, f3;
  bool hidden = false;
  std::size_t channels = 0;
};

inline Wiring wiring_for(const ModelConfig& cfg) {
  cfg.validate();
  const std::size_t c = cfg.channels;
  const std::size_t rc = cfg.residual_channels();
  Wiring w;
  w.channels = c;
  switch (cfg.variant) {
    case Variant::full: {
      w.f1.emplace_back(2 * cfg.color_channels + c, c);
      for (std::size_t i = 1; i < cfg.layers_f1; ++i) w.f1.emplace_back(c, c);
      w.f2 = w.f1;
      w.f3.emplace_back(2 * c, c);
      for (std::size_t i = 1; i + 1 < cfg.layers_f3; ++i) w.f3.emplace_back(c, c);
      w.f3.emplace_back(c, rc);
      w.hidden = true;
      break;
    }
    case Variant::sliding_window: {
      w.f1.emplace_back(2 * cfg.color_channels, c);
      for (std::size_t i = 1; i < cfg.layers_f1; ++i) w.f1.emplace_back(c, c);
      w.f2 = w.f1;
      w.f3.emplace_back(2 * c, c);
      for (std::size_t i = 1; i + 1 < cfg.layers_f3; ++i) w.f3.emplace_back(c, c);
      w.f3.emplace_back(c, rc);
      break;
    }
    case Variant::baseline: {
      // Single current-frame branch, 12 layers: input conv, ten hidden
      // convs, output conv.
      w.f1.emplace_back(cfg.color_channels, c);
      for (std::size_t i = 0; i < 10; ++i) w.f1.emplace_back(c, c);
      w.f3.emplace_back(c, rc);
      break;
    }
  }
  return w;
}

}  // namespace detail

/// Allocates all kernels at zero, with the wiring validated.
template <typename T = float>
inline Parameters<T> zero_params(const ModelConfig& cfg) {
  const detail::Wiring w = detail::wiring_for(cfg);
  Parameters<T> p;
  p.config = cfg;
  for (auto [in, out] : w.f1) p.f1.emplace_back(out, in);
  for (auto [in, out] : w.f2) p.f2.emplace_back(out, in);
  for (auto [in, out] : w.f3) p.f3.emplace_back(out, in);
  if (w.hidden) {
    p.h_fwd_update = ConvKernel<T>(w.channels, w.channels);
    p.h_bwd_update = ConvKernel<T>(w.channels, w.channels);
  }
  return p;
}

/// He-style init: weights ~ N(0, 2/(9*in_channels)), biases zero.
template <typename T = float>
inline Parameters<T> init_params(const ModelConfig& cfg, std::uint64_t seed) {
  Parameters<T> p = zero_params<T>(cfg);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (ConvKernel<T>* k : p.kernels()) {
    const double std_dev = std::sqrt(2.0 / (9.0 * (double)k->in_channels));
    for (T& v : k->weights) v = (T)(normal(rng) * std_dev);
  }
  return p;
}

enum class RunMode { infer, train };

/// Intermediates of one forward pass, retained for the backward pass and
/// for quantization calibration. Per-layer post-activations double as the
/// next layer's input, so only conv inputs plus the branch/head outputs
/// are stored.
template <typename T = float>
struct ActivationTrace {
  bool valid = false;
  std::vector<Tensor<T>> f1_inputs, f2_inputs, f3_inputs;
  Tensor<T> fea_fwd, fea_bwd;          // branch outputs (post-ReLU)
  Tensor<T> head_out;                  // residual maps, no activation
  Tensor<T> h_fwd_next, h_bwd_next;    // post-ReLU next states
};

template <typename T = float>
struct ForwardResult {
  Tensor<T> y;
  Tensor<T> h_fwd_next, h_bwd_next;
  ActivationTrace<T> trace;
};

namespace detail {

template <typename T>
inline Tensor<T> run_chain(const std::vector<ConvKernel<T>>& group,
                           const char* group_name, const Tensor<T>& input,
                           bool relu_last, std::vector<Tensor<T>>* inputs_out) {
  Tensor<T> a = input;
  for (std::size_t j = 0; j < group.size(); ++j) {
    if (inputs_out) inputs_out->push_back(a);
    Tensor<T> pre = [&] {
      try {
        return conv2d_forward(a, group[j]);
      } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(std::string(group_name) + "[" +
                                    std::to_string(j) + "]: " + e.what());
      }
    }();
    const bool last = (j + 1 == group.size());
    a = (!last || relu_last) ? relu(pre) : std::move(pre);
  }
  return a;
}

template <typename T>
inline void check_frame(const Tensor<T>& x, const char* name,
                        const ModelConfig& cfg, const Shape4& ref) {
  const Shape4& s = x.shape();
  if (s.c != cfg.color_channels || s.n != ref.n || s.h != ref.h || s.w != ref.w) {
    throw std::invalid_argument(std::string("forward: ") + name + " shape " +
                                s.str() + " incompatible with x_cur " +
                                ref.str());
  }
}

}  // namespace detail

/// One sliding-window step. x_* are (B,3,H,W); h_* are (B,channels,H,W) and
/// are ignored by the baseline and sliding_window variants. Returns the HR
/// frame (unclamped) plus the next hidden states.
template <typename T>
inline ForwardResult<T> forward(const Parameters<T>& params,
                                const Tensor<T>& x_prev, const Tensor<T>& x_cur,
                                const Tensor<T>& x_next, const Tensor<T>& h_fwd,
                                const Tensor<T>& h_bwd,
                                RunMode mode = RunMode::infer) {
  const ModelConfig& cfg = params.config;
  const Shape4& s = x_cur.shape();
  detail::check_frame(x_cur, "x_cur", cfg, s);
  detail::check_frame(x_prev, "x_prev", cfg, s);
  detail::check_frame(x_next, "x_next", cfg, s);
  if (cfg.variant == Variant::full) {
    const Shape4 hs{s.n, cfg.channels, s.h, s.w};
    if (!(h_fwd.shape() == hs) || !(h_bwd.shape() == hs)) {
      throw std::invalid_argument("forward: hidden state shape " +
                                  h_fwd.shape().str() + "/" +
                                  h_bwd.shape().str() + " != expected " +
                                  hs.str());
    }
  }

  const bool trace_on = (mode == RunMode::train);
  ForwardResult<T> r;
  ActivationTrace<T>& tr = r.trace;
  tr.valid = trace_on;
  auto* f1_in = trace_on ? &tr.f1_inputs : nullptr;
  auto* f2_in = trace_on ? &tr.f2_inputs : nullptr;
  auto* f3_in = trace_on ? &tr.f3_inputs : nullptr;

  Tensor<T> head_in;
  Tensor<T> fea_fwd, fea_bwd;
  switch (cfg.variant) {
    case Variant::full: {
      fea_fwd = detail::run_chain(params.f1, "f1",
                                  concat_channels(x_prev, x_cur, h_fwd),
                                  /*relu_last=*/true, f1_in);
      fea_bwd = detail::run_chain(params.f2, "f2",
                                  concat_channels(x_next, x_cur, h_bwd),
                                  /*relu_last=*/true, f2_in);
      head_in = concat_channels(fea_fwd, fea_bwd);
      break;
    }
    case Variant::sliding_window: {
      fea_fwd = detail::run_chain(params.f1, "f1", concat_channels(x_prev, x_cur),
                                  true, f1_in);
      fea_bwd = detail::run_chain(params.f2, "f2", concat_channels(x_next, x_cur),
                                  true, f2_in);
      head_in = concat_channels(fea_fwd, fea_bwd);
      break;
    }
    case Variant::baseline: {
      fea_fwd = detail::run_chain(params.f1, "f1", x_cur, true, f1_in);
      head_in = fea_fwd;
      break;
    }
  }

  Tensor<T> head_out =
      detail::run_chain(params.f3, "f3", head_in, /*relu_last=*/false, f3_in);
  r.y = depth_to_space_x4(head_out);
  r.y += bilinear_upsample_x4(x_cur);

  const Shape4 hs{s.n, cfg.channels, s.h, s.w};
  if (cfg.variant == Variant::full) {
    r.h_fwd_next = relu(conv2d_forward(fea_fwd, params.h_fwd_update));
    r.h_bwd_next = relu(conv2d_forward(fea_bwd, params.h_bwd_update));
  } else {
    r.h_fwd_next = Tensor<T>(hs);
    r.h_bwd_next = Tensor<T>(hs);
  }

  if (trace_on) {
    tr.fea_fwd = std::move(fea_fwd);
    tr.fea_bwd = std::move(fea_bwd);
    tr.head_out = std::move(head_out);
    tr.h_fwd_next = r.h_fwd_next;
    tr.h_bwd_next = r.h_bwd_next;
  }
  return r;
}

template <typename T = float>
struct BackwardResult {
  Parameters<T> grads;       // same layout as the parameters
  Tensor<T> grad_h_fwd, grad_h_bwd;
};

namespace detail {

// Reverse of run_chain. `post` is the chain's final output (post-activation
// when relu_last). Accumulates kernel grads into `grads` and returns the
// gradient w.r.t. the chain input.
template <typename T>
inline Tensor<T> chain_backward(const std::vector<ConvKernel<T>>& group,
                                const std::vector<Tensor<T>>& inputs,
                                const Tensor<T>& post, bool relu_last,
                                Tensor<T> grad, std::vector<ConvKernel<T>>& grads) {
  for (std::size_t jr = group.size(); jr-- > 0;) {
    const bool last = (jr + 1 == group.size());
    if (!last || relu_last) {
      // Post-activation equals the next conv's input (or the chain output
      // for the final layer); its sign gives the ReLU gate.
      const Tensor<T>& gate = last ? post : inputs[jr + 1];
      grad = relu_backward(gate, grad);
    }
    ConvGrads<T> cg = conv2d_backward(inputs[jr], group[jr], grad);
    for (std::size_t i = 0; i < cg.kernel.weights.size(); ++i)
      grads[jr].weights[i] += cg.kernel.weights[i];
    for (std::size_t i = 0; i < cg.kernel.bias.size(); ++i)
      grads[jr].bias[i] += cg.kernel.bias[i];
    grad = std::move(cg.input);
  }
  return grad;
}

}  // namespace detail

/// Exact reverse of `forward`. `grad_y` is the cotangent of the HR output;
/// `grad_h_*_next` are the cotangents flowing back through the hidden-state
/// chain (pass zeros at the clip tail).
template <typename T>
inline BackwardResult<T> backward(const Parameters<T>& params,
                                  const ActivationTrace<T>& trace,
                                  const Tensor<T>& grad_y,
                                  const Tensor<T>& grad_h_fwd_next,
                                  const Tensor<T>& grad_h_bwd_next) {
  if (!trace.valid) {
    throw std::invalid_argument(
        "backward: trace missing (forward must run in train mode)");
  }
  const ModelConfig& cfg = params.config;
  BackwardResult<T> r;
  r.grads = zero_params<T>(cfg);

  Tensor<T> grad_head = space_to_depth_x4(grad_y);
  Tensor<T> grad_head_in = detail::chain_backward(
      params.f3, trace.f3_inputs, trace.head_out, /*relu_last=*/false,
      std::move(grad_head), r.grads.f3);

  const Shape4 in_shape = trace.f1_inputs.front().shape();
  const Shape4 hs{in_shape.n, cfg.channels, in_shape.h, in_shape.w};

  if (cfg.variant == Variant::baseline) {
    detail::chain_backward(params.f1, trace.f1_inputs, trace.fea_fwd,
                           /*relu_last=*/true, std::move(grad_head_in),
                           r.grads.f1);
    r.grad_h_fwd = Tensor<T>(hs);
    r.grad_h_bwd = Tensor<T>(hs);
    return r;
  }

  Tensor<T> grad_fea_fwd = slice_channels(grad_head_in, 0, cfg.channels);
  Tensor<T> grad_fea_bwd = slice_channels(grad_head_in, cfg.channels, cfg.channels);

  if (cfg.variant == Variant::full) {
    Tensor<T> g = relu_backward(trace.h_fwd_next, grad_h_fwd_next);
    ConvGrads<T> cg = conv2d_backward(trace.fea_fwd, params.h_fwd_update, g);
    r.grads.h_fwd_update = std::move(cg.kernel);
    grad_fea_fwd += cg.input;

    g = relu_backward(trace.h_bwd_next, grad_h_bwd_next);
    cg = conv2d_backward(trace.fea_bwd, params.h_bwd_update, g);
    r.grads.h_bwd_update = std::move(cg.kernel);
    grad_fea_bwd += cg.input;
  }

  Tensor<T> grad_in_fwd = detail::chain_backward(
      params.f1, trace.f1_inputs, trace.fea_fwd, true, std::move(grad_fea_fwd),
      r.grads.f1);
  Tensor<T> grad_in_bwd = detail::chain_backward(
      params.f2, trace.f2_inputs, trace.fea_bwd, true, std::move(grad_fea_bwd),
      r.grads.f2);

  if (cfg.variant == Variant::full) {
    r.grad_h_fwd = slice_channels(grad_in_fwd, 2 * cfg.color_channels, cfg.channels);
    r.grad_h_bwd = slice_channels(grad_in_bwd, 2 * cfg.color_channels, cfg.channels);
  } else {
    r.grad_h_fwd = Tensor<T>(hs);
    r.grad_h_bwd = Tensor<T>(hs);
  }
  return r;
}

/// Elementwise grads += other over every kernel.
template <typename T>
inline void accumulate(Parameters<T>& grads, const Parameters<T>& other) {
  auto dst = grads.kernels();
  auto src = other.kernels();
  if (dst.size() != src.size())
    throw std::invalid_argument("accumulate: mismatched parameter layouts");
  for (std::size_t k = 0; k < dst.size(); ++k) {
    for (std::size_t i = 0; i < dst[k]->weights.size(); ++i)
      dst[k]->weights[i] += src[k]->weights[i];
    for (std::size_t i = 0; i < dst[k]->bias.size(); ++i)
      dst[k]->bias[i] += src[k]->bias[i];
  }
}

}  // namespace swrn
