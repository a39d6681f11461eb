#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace swrn {

struct Shape4 {
  std::size_t n = 1, c = 1, h = 1, w = 1;

  std::size_t elems() const { return n * c * h * w; }

  bool operator==(const Shape4&) const = default;

  std::string str() const {
    std::ostringstream os;
    os << "(" << n << "," << c << "," << h << "," << w << ")";
    return os.str();
  }
};

/// Dense rank-4 array in NCHW row-major order. Value-semantic; no op mutates
/// its inputs.
template <typename T = float>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape4 shape, T fill = T(0))
      : shape_(shape), data_(shape.elems(), fill) {
    if (shape.n < 1 || shape.c < 1 || shape.h < 1 || shape.w < 1) {
      throw std::invalid_argument("Tensor: all dimensions must be >= 1, got " +
                                  shape.str());
    }
  }

  Tensor(Shape4 shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape_.elems()) {
      throw std::invalid_argument("Tensor: data length " +
                                  std::to_string(data_.size()) +
                                  " does not match shape " + shape_.str());
    }
  }

  const Shape4& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  T& at(std::size_t n, std::size_t c, std::size_t y, std::size_t x) {
    return data_[((n * shape_.c + c) * shape_.h + y) * shape_.w + x];
  }
  const T& at(std::size_t n, std::size_t c, std::size_t y, std::size_t x) const {
    return data_[((n * shape_.c + c) * shape_.h + y) * shape_.w + x];
  }

  T& operator[](std::size_t i) { return data_[i]; }
  T operator[](std::size_t i) const { return data_[i]; }

  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  Tensor& operator+=(const Tensor& other) {
    require_same_shape(other, "operator+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
  }

  Tensor& operator*=(T s) {
    for (T& v : data_) v *= s;
    return *this;
  }

  T max_abs() const {
    T m = T(0);
    for (T v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  bool all_finite() const {
    for (T v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  Tensor clamped(T lo, T hi) const {
    Tensor out = *this;
    for (T& v : out.data_) v = std::clamp(v, lo, hi);
    return out;
  }

  /// Elementwise conversion to another scalar type.
  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(shape_);
    for (std::size_t i = 0; i < data_.size(); ++i)
      out[i] = static_cast<U>(data_[i]);
    return out;
  }

  void require_same_shape(const Tensor& other, const char* op) const {
    if (!same_shape(other)) {
      throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                  shape_.str() + " vs " + other.shape_.str());
    }
  }

 private:
  Shape4 shape_;
  std::vector<T> data_;
};

}  // namespace swrn
