#pragma once

#include <cmath>
#include <limits>

#include "swrn/tensor.hpp"

namespace swrn {

/// RGB PSNR in dB over [0,1] data; both inputs are clamped to [0,1] before
/// comparison. Identical inputs return +infinity.
template <typename T>
inline double psnr(const Tensor<T>& pred, const Tensor<T>& ref) {
  pred.require_same_shape(ref, "psnr");
  double sq = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p = std::clamp((double)pred[i], 0.0, 1.0);
    const double r = std::clamp((double)ref[i], 0.0, 1.0);
    const double d = p - r;
    sq += d * d;
  }
  const double mse = sq / (double)pred.size();
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

}  // namespace swrn
