#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "swrn/model.hpp"
#include "swrn/recurrence.hpp"
#include "swrn/tensor.hpp"

namespace swrn {

/// INT8 tensor with a per-tensor symmetric scale (zero point 0).
struct QTensor {
  Shape4 shape;
  std::vector<std::int8_t> data;
  double scale = 1.0;

  QTensor() = default;
  QTensor(Shape4 s, double sc) : shape(s), data(s.elems(), 0), scale(sc) {}

  std::int8_t at(std::size_t n, std::size_t c, std::size_t y, std::size_t x) const {
    return data[((n * shape.c + c) * shape.h + y) * shape.w + x];
  }
  std::int8_t& at(std::size_t n, std::size_t c, std::size_t y, std::size_t x) {
    return data[((n * shape.c + c) * shape.h + y) * shape.w + x];
  }
};

inline std::int8_t quantize_value(double v, double scale) {
  const long q = std::lround(v / scale);  // round half away from zero
  return (std::int8_t)std::clamp(q, -127L, 127L);
}

template <typename T>
inline QTensor quantize_tensor(const Tensor<T>& t, double scale) {
  QTensor q(t.shape(), scale);
  for (std::size_t i = 0; i < t.size(); ++i)
    q.data[i] = quantize_value((double)t[i], scale);
  return q;
}

template <typename T = float>
inline Tensor<T> dequantize_tensor(const QTensor& q) {
  Tensor<T> t(q.shape);
  for (std::size_t i = 0; i < t.size(); ++i)
    t[i] = (T)((double)q.data[i] * q.scale);
  return t;
}

/// Running max-abs per activation site. Site order is the conv-input order
/// of Parameters::kernels(), followed by the two hidden-state sites.
struct CalibrationStats {
  std::vector<double> max_abs;
  std::size_t sample_count = 0;

  void observe(std::size_t site, double v) {
    max_abs[site] = std::max(max_abs[site], v);
  }
};

namespace detail {

template <typename T>
inline std::size_t site_count(const Parameters<T>& params) {
  return params.kernels().size() + 2;  // +h_fwd, +h_bwd state sites
}

}  // namespace detail

/// Records max-abs at every conv input and hidden-state site over float
/// inference on the given clips.
template <typename T>
inline CalibrationStats calibrate(const Parameters<T>& params,
                                  const std::vector<FrameSequence<T>>& clips) {
  if (clips.empty())
    throw std::invalid_argument("calibrate: empty clip list");
  CalibrationStats stats;
  stats.max_abs.assign(detail::site_count(params), 0.0);
  const std::size_t nk = params.kernels().size();
  const std::size_t h_fwd_site = nk, h_bwd_site = nk + 1;

  for (const auto& clip : clips) {
    // Train-mode traces retain every conv input exactly as forward saw it.
    ClipRun<T> run = run_clip(params, clip, RunMode::train);
    for (const auto& tr : run.traces) {
      std::size_t site = 0;
      for (const auto& in : tr.f1_inputs) stats.observe(site++, (double)in.max_abs());
      for (const auto& in : tr.f2_inputs) stats.observe(site++, (double)in.max_abs());
      for (const auto& in : tr.f3_inputs) stats.observe(site++, (double)in.max_abs());
      if (params.has_hidden()) {
        stats.observe(site++, (double)tr.fea_fwd.max_abs());
        stats.observe(site++, (double)tr.fea_bwd.max_abs());
        stats.observe(h_fwd_site, (double)tr.h_fwd_next.max_abs());
        stats.observe(h_bwd_site, (double)tr.h_bwd_next.max_abs());
      }
      ++stats.sample_count;
    }
  }
  return stats;
}

/// One INT8 conv layer: symmetric int8 weights with a per-tensor scale,
/// bias as int32 in the product scale (weight_scale * input_scale).
struct QuantKernel {
  std::size_t out_channels = 0, in_channels = 0;
  std::vector<std::int8_t> weights;  // (out, in, 3, 3)
  double weight_scale = 1.0;
  double input_scale = 1.0;
  std::vector<std::int32_t> bias_q;

  std::int8_t w(std::size_t o, std::size_t i, std::size_t ky, std::size_t kx) const {
    return weights[((o * in_channels + i) * 3 + ky) * 3 + kx];
  }
};

struct QuantModel {
  ModelConfig config;
  std::vector<QuantKernel> kernels;  // Parameters::kernels() order
  std::vector<double> act_scales;    // per conv input site, same order
  double h_fwd_scale = 1.0;
  double h_bwd_scale = 1.0;
};

inline double scale_from_max_abs(double max_abs) {
  return max_abs > 0.0 ? max_abs / 127.0 : 1.0;
}

/// Symmetric per-tensor post-training quantization of a trained model.
template <typename T>
inline QuantModel quantize_model(const Parameters<T>& params,
                                 const CalibrationStats& stats) {
  if (stats.max_abs.size() != detail::site_count(params) ||
      stats.sample_count < 1) {
    throw std::invalid_argument(
        "quantize_model: calibration stats do not match the model");
  }
  QuantModel qm;
  qm.config = params.config;
  const auto ks = params.kernels();
  for (std::size_t k = 0; k < ks.size(); ++k) {
    const ConvKernel<T>& src = *ks[k];
    QuantKernel qk;
    qk.out_channels = src.out_channels;
    qk.in_channels = src.in_channels;
    double wmax = 0.0;
    for (T v : src.weights) wmax = std::max(wmax, (double)std::abs(v));
    qk.weight_scale = scale_from_max_abs(wmax);
    qk.input_scale = scale_from_max_abs(stats.max_abs[k]);
    qk.weights.resize(src.weights.size());
    for (std::size_t i = 0; i < src.weights.size(); ++i)
      qk.weights[i] = quantize_value((double)src.weights[i], qk.weight_scale);
    const double prod = qk.weight_scale * qk.input_scale;
    qk.bias_q.resize(src.bias.size());
    for (std::size_t i = 0; i < src.bias.size(); ++i)
      qk.bias_q[i] = (std::int32_t)std::lround((double)src.bias[i] / prod);
    qm.act_scales.push_back(qk.input_scale);
    qm.kernels.push_back(std::move(qk));
  }
  const std::size_t nk = ks.size();
  qm.h_fwd_scale = scale_from_max_abs(stats.max_abs[nk]);
  qm.h_bwd_scale = scale_from_max_abs(stats.max_abs[nk + 1]);

  if (params.has_hidden()) {
    // The hidden-update convs read the branch outputs after those were
    // requantized into the head-input site, so their input scale must be
    // that site's scale (bias rescaled accordingly).
    const std::size_t f3_site = params.f1.size() + params.f2.size();
    for (std::size_t idx : {nk - 2, nk - 1}) {
      QuantKernel& k = qm.kernels[idx];
      k.input_scale = qm.act_scales[f3_site];
      qm.act_scales[idx] = k.input_scale;
      const double prod = k.weight_scale * k.input_scale;
      const ConvKernel<T>& src = *ks[idx];
      for (std::size_t i = 0; i < src.bias.size(); ++i)
        k.bias_q[i] = (std::int32_t)std::lround((double)src.bias[i] / prod);
    }
  }
  return qm;
}

namespace detail {

// int8 x int8 conv with int32 accumulation (checked through int64); output
// stays in the raw accumulator domain, value = acc * (in_scale * w_scale).
inline std::vector<std::int32_t> conv_int8(const QTensor& input,
                                           const QuantKernel& k) {
  if (input.shape.c != k.in_channels)
    throw std::invalid_argument("conv_int8: channel mismatch");
  const std::size_t n = input.shape.n, h = input.shape.h, w = input.shape.w;
  std::vector<std::int32_t> out(n * k.out_channels * h * w, 0);
  const std::int64_t lim = std::numeric_limits<std::int32_t>::max();
  std::size_t oi = 0;
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t o = 0; o < k.out_channels; ++o) {
      for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x, ++oi) {
          std::int64_t acc = 0;
          for (std::size_t i = 0; i < k.in_channels; ++i) {
            for (std::size_t ky = 0; ky < 3; ++ky) {
              const long sy = (long)y + (long)ky - 1;
              if (sy < 0 || sy >= (long)h) continue;
              for (std::size_t kx = 0; kx < 3; ++kx) {
                const long sx = (long)x + (long)kx - 1;
                if (sx < 0 || sx >= (long)w) continue;
                acc += (std::int64_t)input.at(b, i, (std::size_t)sy, (std::size_t)sx) *
                       (std::int64_t)k.w(o, i, ky, kx);
              }
            }
          }
          acc += k.bias_q[o];
          if (acc > lim || acc < -lim - 1)
            throw std::runtime_error(
                "conv_int8: int32 accumulator overflow (calibration failure)");
          out[oi] = (std::int32_t)acc;
        }
      }
    }
  }
  return out;
}

// Requantizes raw conv accumulators (optionally ReLU-gated) into the next
// site's int8 domain.
inline QTensor requantize(const std::vector<std::int32_t>& acc, Shape4 shape,
                          double acc_scale, double out_scale, bool apply_relu) {
  QTensor q(shape, out_scale);
  for (std::size_t i = 0; i < acc.size(); ++i) {
    std::int32_t a = acc[i];
    if (apply_relu && a < 0) a = 0;
    q.data[i] = quantize_value((double)a * acc_scale, out_scale);
  }
  return q;
}

// Channel-concatenates two int8 tensors that share one scale.
inline QTensor concat_int8(const QTensor& a, const QTensor& b) {
  QTensor out({a.shape.n, a.shape.c + b.shape.c, a.shape.h, a.shape.w}, a.scale);
  const std::size_t hw = a.shape.h * a.shape.w;
  for (std::size_t n = 0; n < a.shape.n; ++n) {
    std::copy_n(&a.data[n * a.shape.c * hw], a.shape.c * hw,
                &out.data[n * out.shape.c * hw]);
    std::copy_n(&b.data[n * b.shape.c * hw], b.shape.c * hw,
                &out.data[n * out.shape.c * hw + a.shape.c * hw]);
  }
  return out;
}

}  // namespace detail

struct QuantHidden {
  QTensor h_fwd, h_bwd;
};

template <typename T = float>
struct QuantForwardResult {
  Tensor<T> y;
  QuantHidden h_next;
};

/// Integer-domain inference step mirroring `forward` (infer mode). The
/// bilinear residual path stays in float and is added after dequantization;
/// hidden states are carried in int8 with their calibrated scales.
template <typename T>
inline QuantForwardResult<T> quantized_forward(const QuantModel& qm,
                                               const Tensor<T>& x_prev,
                                               const Tensor<T>& x_cur,
                                               const Tensor<T>& x_next,
                                               const QuantHidden& h) {
  const ModelConfig& cfg = qm.config;
  const Shape4& s = x_cur.shape();
  const std::size_t n_f1 = (cfg.variant == Variant::baseline) ? 11 : cfg.layers_f1;
  const std::size_t n_f2 = (cfg.variant == Variant::baseline) ? 0 : cfg.layers_f2;
  const std::size_t n_f3 = (cfg.variant == Variant::baseline) ? 1 : cfg.layers_f3;
  const std::size_t f1_base = 0, f2_base = n_f1, f3_base = n_f1 + n_f2;

  // Quantize a branch input (float frames + dequantized hidden state) at
  // the branch's first conv site.
  auto quantize_branch_input = [&](const Tensor<T>& a, const Tensor<T>& b,
                                   const QTensor* hstate, double site_scale) {
    std::size_t c_total = a.shape().c + b.shape().c + (hstate ? hstate->shape.c : 0);
    QTensor q({s.n, c_total, s.h, s.w}, site_scale);
    std::size_t co = 0;
    auto put = [&](auto&& value_at, std::size_t channels) {
      for (std::size_t bb = 0; bb < s.n; ++bb)
        for (std::size_t c = 0; c < channels; ++c)
          for (std::size_t y = 0; y < s.h; ++y)
            for (std::size_t x = 0; x < s.w; ++x)
              q.at(bb, co + c, y, x) =
                  quantize_value(value_at(bb, c, y, x), site_scale);
      co += channels;
    };
    put([&](auto bb, auto c, auto y, auto x) { return (double)a.at(bb, c, y, x); },
        a.shape().c);
    put([&](auto bb, auto c, auto y, auto x) { return (double)b.at(bb, c, y, x); },
        b.shape().c);
    if (hstate)
      put(
          [&](auto bb, auto c, auto y, auto x) {
            return (double)hstate->at(bb, c, y, x) * hstate->scale;
          },
          hstate->shape.c);
    return q;
  };

  QuantForwardResult<T> r;
  QTensor fea_fwd, fea_bwd;
  QTensor head_in;

  auto run_branch = [&](std::size_t base, std::size_t n_layers, QTensor in) {
    QTensor a = std::move(in);
    for (std::size_t j = 0; j + 1 < n_layers; ++j) {
      const QuantKernel& k = qm.kernels[base + j];
      auto acc = detail::conv_int8(a, k);
      a = detail::requantize(acc, {a.shape.n, k.out_channels, a.shape.h, a.shape.w},
                             k.input_scale * k.weight_scale,
                             qm.act_scales[base + j + 1], true);
    }
    return a;
  };
  // Runs the last conv of a branch, requantizing into `out_site`'s scale.
  auto run_last = [&](std::size_t idx, const QTensor& a, double out_scale,
                      bool apply_relu) {
    const QuantKernel& k = qm.kernels[idx];
    auto acc = detail::conv_int8(a, k);
    return detail::requantize(acc,
                              {a.shape.n, k.out_channels, a.shape.h, a.shape.w},
                              k.input_scale * k.weight_scale, out_scale,
                              apply_relu);
  };

  switch (cfg.variant) {
    case Variant::full: {
      QTensor in_f = quantize_branch_input(x_prev, x_cur, &h.h_fwd,
                                           qm.act_scales[f1_base]);
      QTensor in_b = quantize_branch_input(x_next, x_cur, &h.h_bwd,
                                           qm.act_scales[f2_base]);
      QTensor af = run_branch(f1_base, n_f1, std::move(in_f));
      QTensor ab = run_branch(f2_base, n_f2, std::move(in_b));
      // Branch outputs land in the head-input site scale; the hidden-update
      // convs read the same tensors, so their input scale equals it.
      fea_fwd = run_last(f1_base + n_f1 - 1, af, qm.act_scales[f3_base], true);
      fea_bwd = run_last(f2_base + n_f2 - 1, ab, qm.act_scales[f3_base], true);
      head_in = detail::concat_int8(fea_fwd, fea_bwd);
      break;
    }
    case Variant::sliding_window: {
      QTensor in_f =
          quantize_branch_input(x_prev, x_cur, nullptr, qm.act_scales[f1_base]);
      QTensor in_b =
          quantize_branch_input(x_next, x_cur, nullptr, qm.act_scales[f2_base]);
      QTensor af = run_branch(f1_base, n_f1, std::move(in_f));
      QTensor ab = run_branch(f2_base, n_f2, std::move(in_b));
      fea_fwd = run_last(f1_base + n_f1 - 1, af, qm.act_scales[f3_base], true);
      fea_bwd = run_last(f2_base + n_f2 - 1, ab, qm.act_scales[f3_base], true);
      head_in = detail::concat_int8(fea_fwd, fea_bwd);
      break;
    }
    case Variant::baseline: {
      QTensor in({s.n, 3, s.h, s.w}, qm.act_scales[f1_base]);
      for (std::size_t i = 0; i < in.data.size(); ++i)
        in.data[i] = quantize_value((double)x_cur[i], in.scale);
      QTensor a = run_branch(f1_base, n_f1, std::move(in));
      head_in = run_last(f1_base + n_f1 - 1, a, qm.act_scales[f3_base], true);
      break;
    }
  }

  // Head: all but last conv ReLU-requantized, last conv dequantized raw.
  QTensor a = std::move(head_in);
  for (std::size_t j = 0; j + 1 < n_f3; ++j) {
    const QuantKernel& k = qm.kernels[f3_base + j];
    auto acc = detail::conv_int8(a, k);
    a = detail::requantize(acc, {a.shape.n, k.out_channels, a.shape.h, a.shape.w},
                           k.input_scale * k.weight_scale,
                           qm.act_scales[f3_base + j + 1], true);
  }
  const QuantKernel& last = qm.kernels[f3_base + n_f3 - 1];
  auto acc = detail::conv_int8(a, last);
  const double acc_scale = last.input_scale * last.weight_scale;
  Tensor<T> head_out({s.n, last.out_channels, s.h, s.w});
  for (std::size_t i = 0; i < acc.size(); ++i)
    head_out[i] = (T)((double)acc[i] * acc_scale);

  r.y = depth_to_space_x4(head_out);
  r.y += bilinear_upsample_x4(x_cur);

  if (cfg.variant == Variant::full) {
    const std::size_t hf_idx = f3_base + n_f3, hb_idx = hf_idx + 1;
    auto acc_f = detail::conv_int8(fea_fwd, qm.kernels[hf_idx]);
    auto acc_b = detail::conv_int8(fea_bwd, qm.kernels[hb_idx]);
    const Shape4 hs{s.n, cfg.channels, s.h, s.w};
    r.h_next.h_fwd = detail::requantize(
        acc_f, hs, qm.kernels[hf_idx].input_scale * qm.kernels[hf_idx].weight_scale,
        qm.h_fwd_scale, true);
    r.h_next.h_bwd = detail::requantize(
        acc_b, hs, qm.kernels[hb_idx].input_scale * qm.kernels[hb_idx].weight_scale,
        qm.h_bwd_scale, true);
  } else {
    const Shape4 hs{s.n, cfg.channels, s.h, s.w};
    r.h_next.h_fwd = QTensor(hs, qm.h_fwd_scale);
    r.h_next.h_bwd = QTensor(hs, qm.h_bwd_scale);
  }
  return r;
}

/// Quantized analogue of run_clip (inference only).
template <typename T>
inline std::vector<Tensor<T>> quantized_run_clip(const QuantModel& qm,
                                                 const FrameSequence<T>& clip) {
  clip.validate();
  const Shape4& fs = clip.frames.front().shape();
  const Shape4 hs{fs.n, qm.config.channels, fs.h, fs.w};
  QuantHidden state{QTensor(hs, qm.h_fwd_scale), QTensor(hs, qm.h_bwd_scale)};
  std::vector<Tensor<T>> outputs;
  for (std::size_t i = 0; i < clip.size(); ++i) {
    const Window<T> w = window_at(clip, i);
    QuantForwardResult<T> r =
        quantized_forward(qm, *w.x_prev, *w.x_cur, *w.x_next, state);
    outputs.push_back(std::move(r.y));
    state = std::move(r.h_next);
  }
  return outputs;
}

}  // namespace swrn
