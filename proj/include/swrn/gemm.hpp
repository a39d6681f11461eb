#pragma once

#include <cstddef>
#include <cblas.h>

namespace swrn::detail {

inline void pin_blas_threads() {
  // Single-threaded BLAS keeps reduction order fixed, so results are
  // bitwise reproducible run to run.
  static const bool done = [] {
    openblas_set_num_threads(1);
    return true;
  }();
  (void)done;
}

/// Row-major C(MxN) += / = A(MxK) * B(KxN).
template <typename T>
inline void gemm(std::size_t m, std::size_t n, std::size_t k, const T* a,
                 const T* b, T* c, bool accumulate) {
  if (!accumulate) {
    for (std::size_t i = 0; i < m * n; ++i) c[i] = T(0);
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const T av = a[i * k + p];
      if (av == T(0)) continue;
      const T* brow = b + p * n;
      T* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <>
inline void gemm<float>(std::size_t m, std::size_t n, std::size_t k,
                        const float* a, const float* b, float* c,
                        bool accumulate) {
  pin_blas_threads();
  cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, (blasint)m, (blasint)n,
              (blasint)k, 1.0f, a, (blasint)k, b, (blasint)n,
              accumulate ? 1.0f : 0.0f, c, (blasint)n);
}

template <>
inline void gemm<double>(std::size_t m, std::size_t n, std::size_t k,
                         const double* a, const double* b, double* c,
                         bool accumulate) {
  pin_blas_threads();
  cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, (blasint)m, (blasint)n,
              (blasint)k, 1.0, a, (blasint)k, b, (blasint)n,
              accumulate ? 1.0 : 0.0, c, (blasint)n);
}

/// Row-major C(MxN) += / = A^T * B where A is (KxM), B is (KxN).
template <typename T>
inline void gemm_at_b(std::size_t m, std::size_t n, std::size_t k, const T* a,
                      const T* b, T* c, bool accumulate) {
  if (!accumulate) {
    for (std::size_t i = 0; i < m * n; ++i) c[i] = T(0);
  }
  for (std::size_t p = 0; p < k; ++p) {
    for (std::size_t i = 0; i < m; ++i) {
      const T av = a[p * m + i];
      if (av == T(0)) continue;
      const T* brow = b + p * n;
      T* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <>
inline void gemm_at_b<float>(std::size_t m, std::size_t n, std::size_t k,
                             const float* a, const float* b, float* c,
                             bool accumulate) {
  pin_blas_threads();
  cblas_sgemm(CblasRowMajor, CblasTrans, CblasNoTrans, (blasint)m, (blasint)n,
              (blasint)k, 1.0f, a, (blasint)m, b, (blasint)n,
              accumulate ? 1.0f : 0.0f, c, (blasint)n);
}

template <>
inline void gemm_at_b<double>(std::size_t m, std::size_t n, std::size_t k,
                              const double* a, const double* b, double* c,
                              bool accumulate) {
  pin_blas_threads();
  cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, (blasint)m, (blasint)n,
              (blasint)k, 1.0, a, (blasint)m, b, (blasint)n,
              accumulate ? 1.0 : 0.0, c, (blasint)n);
}

/// Row-major C(MxN) += / = A * B^T where A is (MxK), B is (NxK).
template <typename T>
inline void gemm_a_bt(std::size_t m, std::size_t n, std::size_t k, const T* a,
                      const T* b, T* c, bool accumulate) {
  if (!accumulate) {
    for (std::size_t i = 0; i < m * n; ++i) c[i] = T(0);
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      T acc = T(0);
      for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[j * k + p];
      c[i * n + j] += acc;
    }
  }
}

template <>
inline void gemm_a_bt<float>(std::size_t m, std::size_t n, std::size_t k,
                             const float* a, const float* b, float* c,
                             bool accumulate) {
  pin_blas_threads();
  cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasTrans, (blasint)m, (blasint)n,
              (blasint)k, 1.0f, a, (blasint)k, b, (blasint)k,
              accumulate ? 1.0f : 0.0f, c, (blasint)n);
}

template <>
inline void gemm_a_bt<double>(std::size_t m, std::size_t n, std::size_t k,
                              const double* a, const double* b, double* c,
                              bool accumulate) {
  pin_blas_threads();
  cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, (blasint)m, (blasint)n,
              (blasint)k, 1.0, a, (blasint)k, b, (blasint)k,
              accumulate ? 1.0 : 0.0, c, (blasint)n);
}

}  // namespace swrn::detail
