#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "swrn/tensor.hpp"

namespace swrn {

namespace detail {

/// Catmull-Rom-family cubic, a = -0.5.
inline double cubic_kernel(double t) {
  constexpr double a = -0.5;
  t = std::abs(t);
  if (t < 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return (((t - 5.0) * t + 8.0) * t - 4.0) * a;
  return 0.0;
}

struct ResampleTap {
  std::vector<std::size_t> idx;
  std::vector<double> weight;
};

// Per-destination-pixel taps for 4x anti-aliased cubic decimation:
// half-pixel centers, kernel support scaled by the decimation factor,
// weights normalized to sum to 1, edges clamped.
inline std::vector<ResampleTap> decimate_x4_taps(std::size_t in_len) {
  const std::size_t out_len = in_len / 4;
  std::vector<ResampleTap> taps(out_len);
  for (std::size_t d = 0; d < out_len; ++d) {
    const double center = (d + 0.5) * 4.0 - 0.5;
    const long first = (long)std::floor(center) - 7;  // support radius 2*4
    ResampleTap& t = taps[d];
    double sum = 0.0;
    for (long i = first; i < first + 16; ++i) {
      const double w = cubic_kernel((i - center) / 4.0);
      if (w == 0.0) continue;
      const long ci = std::clamp(i, 0L, (long)in_len - 1);
      t.idx.push_back((std::size_t)ci);
      t.weight.push_back(w);
      sum += w;
    }
    for (double& w : t.weight) w /= sum;
  }
  return taps;
}

}  // namespace detail

/// Anti-aliased bicubic x4 downsampling (separable, a = -0.5, half-pixel
/// centers, edge clamped). Input H and W must be divisible by 4.
template <typename T>
inline Tensor<T> bicubic_downsample_x4(const Tensor<T>& hr) {
  const Shape4& s = hr.shape();
  if (s.h % 4 != 0 || s.w % 4 != 0) {
    throw std::invalid_argument(
        "bicubic_downsample_x4: dims " + s.str() +
        " not divisible by 4; crop the input first");
  }
  const std::size_t oh = s.h / 4, ow = s.w / 4;
  const auto tx = detail::decimate_x4_taps(s.w);
  const auto ty = detail::decimate_x4_taps(s.h);

  Tensor<T> out({s.n, s.c, oh, ow});
  std::vector<double> rows(s.h * ow);  // horizontally filtered column strip
  for (std::size_t b = 0; b < s.n; ++b) {
    for (std::size_t c = 0; c < s.c; ++c) {
      for (std::size_t y = 0; y < s.h; ++y) {
        const T* src = &hr.at(b, c, y, 0);
        for (std::size_t x = 0; x < ow; ++x) {
          const auto& t = tx[x];
          double acc = 0.0;
          for (std::size_t k = 0; k < t.idx.size(); ++k)
            acc += t.weight[k] * (double)src[t.idx[k]];
          rows[y * ow + x] = acc;
        }
      }
      for (std::size_t y = 0; y < oh; ++y) {
        const auto& t = ty[y];
        for (std::size_t x = 0; x < ow; ++x) {
          double acc = 0.0;
          for (std::size_t k = 0; k < t.idx.size(); ++k)
            acc += t.weight[k] * rows[t.idx[k] * ow + x];
          out.at(b, c, y, x) = (T)acc;
        }
      }
    }
  }
  return out;
}

}  // namespace swrn
