#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "swrn/gemm.hpp"
#include "swrn/tensor.hpp"

namespace swrn {

/// 3x3 convolution kernel with bias. Stride 1, zero padding 1 everywhere.
template <typename T = float>
struct ConvKernel {
  std::size_t out_channels = 0;
  std::size_t in_channels = 0;
  std::vector<T> weights;  // (out, in, 3, 3) row-major
  std::vector<T> bias;     // (out)

  ConvKernel() = default;
  ConvKernel(std::size_t out_c, std::size_t in_c)
      : out_channels(out_c),
        in_channels(in_c),
        weights(out_c * in_c * 9, T(0)),
        bias(out_c, T(0)) {}

  T& w(std::size_t o, std::size_t i, std::size_t ky, std::size_t kx) {
    return weights[((o * in_channels + i) * 3 + ky) * 3 + kx];
  }
  T w(std::size_t o, std::size_t i, std::size_t ky, std::size_t kx) const {
    return weights[((o * in_channels + i) * 3 + ky) * 3 + kx];
  }

  std::size_t param_count() const { return weights.size() + bias.size(); }

  template <typename U>
  ConvKernel<U> cast() const {
    ConvKernel<U> out(out_channels, in_channels);
    for (std::size_t i = 0; i < weights.size(); ++i)
      out.weights[i] = static_cast<U>(weights[i]);
    for (std::size_t i = 0; i < bias.size(); ++i)
      out.bias[i] = static_cast<U>(bias[i]);
    return out;
  }
};

namespace detail {

// Unrolls 3x3 patches of one batch item into a (in_c*9, h*w) matrix.
template <typename T>
inline void im2col_3x3(const Tensor<T>& input, std::size_t n, std::vector<T>& cols) {
  const std::size_t c = input.shape().c, h = input.shape().h, w = input.shape().w;
  cols.assign(c * 9 * h * w, T(0));
  const std::size_t hw = h * w;
  for (std::size_t ci = 0; ci < c; ++ci) {
    for (std::size_t ky = 0; ky < 3; ++ky) {
      for (std::size_t kx = 0; kx < 3; ++kx) {
        T* dst = cols.data() + ((ci * 3 + ky) * 3 + kx) * hw;
        const long dy = (long)ky - 1, dx = (long)kx - 1;
        for (std::size_t y = 0; y < h; ++y) {
          const long sy = (long)y + dy;
          if (sy < 0 || sy >= (long)h) continue;
          const long x0 = std::max(0L, -dx);
          const long x1 = std::min((long)w, (long)w - dx);
          const T* src = &input.at(n, ci, (std::size_t)sy, 0);
          for (long x = x0; x < x1; ++x) dst[y * w + x] = src[x + dx];
        }
      }
    }
  }
}

// Scatter-adds a (in_c*9, h*w) column matrix back onto an image (transpose
// of im2col).
template <typename T>
inline void col2im_3x3(const std::vector<T>& cols, Tensor<T>& out, std::size_t n) {
  const std::size_t c = out.shape().c, h = out.shape().h, w = out.shape().w;
  const std::size_t hw = h * w;
  for (std::size_t ci = 0; ci < c; ++ci) {
    for (std::size_t ky = 0; ky < 3; ++ky) {
      for (std::size_t kx = 0; kx < 3; ++kx) {
        const T* src = cols.data() + ((ci * 3 + ky) * 3 + kx) * hw;
        const long dy = (long)ky - 1, dx = (long)kx - 1;
        for (std::size_t y = 0; y < h; ++y) {
          const long sy = (long)y + dy;
          if (sy < 0 || sy >= (long)h) continue;
          const long x0 = std::max(0L, -dx);
          const long x1 = std::min((long)w, (long)w - dx);
          T* dst = &out.at(n, ci, (std::size_t)sy, 0);
          for (long x = x0; x < x1; ++x) dst[x + dx] += src[y * w + x];
        }
      }
    }
  }
}

}  // namespace detail

/// Same-size 3x3 cross-correlation, zero padding 1, stride 1.
template <typename T>
inline Tensor<T> conv2d_forward(const Tensor<T>& input, const ConvKernel<T>& kernel) {
  if (input.shape().c != kernel.in_channels) {
    throw std::invalid_argument(
        "conv2d_forward: input has " + std::to_string(input.shape().c) +
        " channels but kernel expects " + std::to_string(kernel.in_channels) +
        " (input " + input.shape().str() + ")");
  }
  const std::size_t n = input.shape().n, h = input.shape().h, w = input.shape().w;
  const std::size_t hw = h * w;
  Tensor<T> out({n, kernel.out_channels, h, w});
  std::vector<T> cols;
  for (std::size_t b = 0; b < n; ++b) {
    detail::im2col_3x3(input, b, cols);
    detail::gemm<T>(kernel.out_channels, hw, kernel.in_channels * 9,
                    kernel.weights.data(), cols.data(), &out.at(b, 0, 0, 0),
                    /*accumulate=*/false);
    for (std::size_t o = 0; o < kernel.out_channels; ++o) {
      T* row = &out.at(b, o, 0, 0);
      const T bv = kernel.bias[o];
      for (std::size_t i = 0; i < hw; ++i) row[i] += bv;
    }
  }
  return out;
}

template <typename T>
struct ConvGrads {
  Tensor<T> input;
  ConvKernel<T> kernel;  // weight/bias gradients, same shapes as the kernel
};

/// Analytic gradients of conv2d_forward.
template <typename T>
inline ConvGrads<T> conv2d_backward(const Tensor<T>& input,
                                    const ConvKernel<T>& kernel,
                                    const Tensor<T>& grad_out) {
  if (input.shape().c != kernel.in_channels) {
    throw std::invalid_argument("conv2d_backward: input channels " +
                                std::to_string(input.shape().c) +
                                " != kernel in_channels " +
                                std::to_string(kernel.in_channels));
  }
  const Shape4 expect{input.shape().n, kernel.out_channels, input.shape().h,
                      input.shape().w};
  if (!(grad_out.shape() == expect)) {
    throw std::invalid_argument("conv2d_backward: grad_out shape " +
                                grad_out.shape().str() + " != expected " +
                                expect.str());
  }
  const std::size_t n = input.shape().n, h = input.shape().h, w = input.shape().w;
  const std::size_t hw = h * w;
  ConvGrads<T> g{Tensor<T>(input.shape()),
                 ConvKernel<T>(kernel.out_channels, kernel.in_channels)};

  std::vector<T> cols, col_grad(kernel.in_channels * 9 * hw);
  for (std::size_t b = 0; b < n; ++b) {
    // grad_weights += grad_out_b (out, hw) * cols_b^T (hw, in*9)
    detail::im2col_3x3(input, b, cols);
    detail::gemm_a_bt<T>(kernel.out_channels, kernel.in_channels * 9, hw,
                         &grad_out.at(b, 0, 0, 0), cols.data(),
                         g.kernel.weights.data(), /*accumulate=*/true);
    // grad_cols = W^T (in*9, out) * grad_out_b (out, hw)
    detail::gemm_at_b<T>(kernel.in_channels * 9, hw, kernel.out_channels,
                         kernel.weights.data(), &grad_out.at(b, 0, 0, 0),
                         col_grad.data(), /*accumulate=*/false);
    detail::col2im_3x3(col_grad, g.input, b);
    for (std::size_t o = 0; o < kernel.out_channels; ++o) {
      const T* row = &grad_out.at(b, o, 0, 0);
      T acc = T(0);
      for (std::size_t i = 0; i < hw; ++i) acc += row[i];
      g.kernel.bias[o] += acc;
    }
  }
  return g;
}

template <typename T>
inline Tensor<T> relu(const Tensor<T>& input) {
  Tensor<T> out = input;
  for (auto& v : out) v = v > T(0) ? v : T(0);
  return out;
}

/// Passes gradient where the forward input was strictly positive.
template <typename T>
inline Tensor<T> relu_backward(const Tensor<T>& input, const Tensor<T>& grad_out) {
  input.require_same_shape(grad_out, "relu_backward");
  Tensor<T> out(input.shape());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = input[i] > T(0) ? grad_out[i] : T(0);
  return out;
}

template <typename T>
inline Tensor<T> concat_channels(const std::vector<const Tensor<T>*>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_channels: no inputs");
  const Shape4& s0 = parts[0]->shape();
  std::size_t total_c = 0;
  for (const Tensor<T>* p : parts) {
    const Shape4& s = p->shape();
    if (s.n != s0.n || s.h != s0.h || s.w != s0.w) {
      throw std::invalid_argument("concat_channels: incompatible shapes " +
                                  s0.str() + " vs " + s.str());
    }
    total_c += s.c;
  }
  Tensor<T> out({s0.n, total_c, s0.h, s0.w});
  const std::size_t hw = s0.h * s0.w;
  for (std::size_t b = 0; b < s0.n; ++b) {
    std::size_t co = 0;
    for (const Tensor<T>* p : parts) {
      std::copy_n(&p->at(b, 0, 0, 0), p->shape().c * hw, &out.at(b, co, 0, 0));
      co += p->shape().c;
    }
  }
  return out;
}

template <typename T>
inline Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  return concat_channels<T>({&a, &b});
}

template <typename T>
inline Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b,
                                 const Tensor<T>& c) {
  return concat_channels<T>({&a, &b, &c});
}

/// Copies channels [c_begin, c_begin+c_count) into a new tensor.
template <typename T>
inline Tensor<T> slice_channels(const Tensor<T>& input, std::size_t c_begin,
                                std::size_t c_count) {
  const Shape4& s = input.shape();
  if (c_begin + c_count > s.c) {
    throw std::invalid_argument("slice_channels: range [" +
                                std::to_string(c_begin) + "," +
                                std::to_string(c_begin + c_count) +
                                ") out of " + std::to_string(s.c));
  }
  Tensor<T> out({s.n, c_count, s.h, s.w});
  const std::size_t hw = s.h * s.w;
  for (std::size_t b = 0; b < s.n; ++b)
    std::copy_n(&input.at(b, c_begin, 0, 0), c_count * hw, &out.at(b, 0, 0, 0));
  return out;
}

/// x4 bilinear upsampling, half-pixel centers, edge clamped.
template <typename T>
inline Tensor<T> bilinear_upsample_x4(const Tensor<T>& input) {
  const Shape4& s = input.shape();
  Tensor<T> out({s.n, s.c, s.h * 4, s.w * 4});
  const std::size_t oh = s.h * 4, ow = s.w * 4;

  struct Tap {
    std::size_t i0, i1;
    T f;
  };
  auto make_taps = [](std::size_t out_len, std::size_t in_len) {
    std::vector<Tap> taps(out_len);
    for (std::size_t d = 0; d < out_len; ++d) {
      double src = (d + 0.5) / 4.0 - 0.5;
      double lo = std::floor(src);
      double f = src - lo;
      long i0 = (long)lo, i1 = i0 + 1;
      i0 = std::clamp(i0, 0L, (long)in_len - 1);
      i1 = std::clamp(i1, 0L, (long)in_len - 1);
      taps[d] = {(std::size_t)i0, (std::size_t)i1, (T)f};
    }
    return taps;
  };
  const auto ty = make_taps(oh, s.h);
  const auto tx = make_taps(ow, s.w);

  for (std::size_t b = 0; b < s.n; ++b) {
    for (std::size_t c = 0; c < s.c; ++c) {
      for (std::size_t y = 0; y < oh; ++y) {
        const T* r0 = &input.at(b, c, ty[y].i0, 0);
        const T* r1 = &input.at(b, c, ty[y].i1, 0);
        const T fy = ty[y].f;
        T* dst = &out.at(b, c, y, 0);
        for (std::size_t x = 0; x < ow; ++x) {
          const T fx = tx[x].f;
          const T v00 = r0[tx[x].i0], v01 = r0[tx[x].i1];
          const T v10 = r1[tx[x].i0], v11 = r1[tx[x].i1];
          const T top = v00 + fx * (v01 - v00);
          const T bot = v10 + fx * (v11 - v10);
          dst[x] = top + fy * (bot - top);
        }
      }
    }
  }
  return out;
}

/// Rearranges 16 channel groups into 4x4 spatial blocks:
/// out(c, 4y+dy, 4x+dx) = in(16c + 4dy + dx, y, x).
template <typename T>
inline Tensor<T> depth_to_space_x4(const Tensor<T>& input) {
  const Shape4& s = input.shape();
  if (s.c % 16 != 0) {
    throw std::invalid_argument(
        "depth_to_space_x4: channel count " + std::to_string(s.c) +
        " not divisible by 16");
  }
  Tensor<T> out({s.n, s.c / 16, s.h * 4, s.w * 4});
  for (std::size_t b = 0; b < s.n; ++b)
    for (std::size_t c = 0; c < out.shape().c; ++c)
      for (std::size_t dy = 0; dy < 4; ++dy)
        for (std::size_t dx = 0; dx < 4; ++dx)
          for (std::size_t y = 0; y < s.h; ++y)
            for (std::size_t x = 0; x < s.w; ++x)
              out.at(b, c, 4 * y + dy, 4 * x + dx) =
                  input.at(b, 16 * c + 4 * dy + dx, y, x);
  return out;
}

/// Exact inverse of depth_to_space_x4; also its adjoint (the map is a
/// permutation), so it doubles as the backward pass.
template <typename T>
inline Tensor<T> space_to_depth_x4(const Tensor<T>& input) {
  const Shape4& s = input.shape();
  if (s.h % 4 != 0 || s.w % 4 != 0) {
    throw std::invalid_argument("space_to_depth_x4: spatial dims " +
                                s.str() + " not divisible by 4");
  }
  Tensor<T> out({s.n, s.c * 16, s.h / 4, s.w / 4});
  for (std::size_t b = 0; b < s.n; ++b)
    for (std::size_t c = 0; c < s.c; ++c)
      for (std::size_t dy = 0; dy < 4; ++dy)
        for (std::size_t dx = 0; dx < 4; ++dx)
          for (std::size_t y = 0; y < out.shape().h; ++y)
            for (std::size_t x = 0; x < out.shape().w; ++x)
              out.at(b, 16 * c + 4 * dy + dx, y, x) =
                  input.at(b, c, 4 * y + dy, 4 * x + dx);
  return out;
}

}  // namespace swrn
