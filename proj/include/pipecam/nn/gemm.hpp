#pragma once

#include <cstddef>

namespace pipecam::nn {

// Packed row-major GEMM kernels. The float versions are SIMD-optimized and
// carry the training workload; the generic templates serve the double-mode
// gradient checks. Parallel splits partition output ranges, so results are
// bitwise identical for any worker count.

/// C = A(MxK) * B(KxN), or += when accumulate.
void gemm_nn_f32(const float* a, const float* b, float* c, int m, int n, int k,
                 bool accumulate);

/// C = A(MxK) * B(NxK)^T, or += when accumulate.
void gemm_nt_f32(const float* a, const float* b, float* c, int m, int n, int k,
                 bool accumulate);

template <typename T>
void gemm_nn(const T* a, const T* b, T* c, int m, int n, int k,
             bool accumulate) {
  for (int i = 0; i < m; ++i) {
    T* crow = c + static_cast<std::size_t>(i) * n;
    if (!accumulate)
      for (int j = 0; j < n; ++j) crow[j] = T(0);
    for (int p = 0; p < k; ++p) {
      const T av = a[static_cast<std::size_t>(i) * k + p];
      const T* brow = b + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <>
inline void gemm_nn<float>(const float* a, const float* b, float* c, int m,
                           int n, int k, bool accumulate) {
  gemm_nn_f32(a, b, c, m, n, k, accumulate);
}

template <typename T>
void gemm_nt(const T* a, const T* b, T* c, int m, int n, int k,
             bool accumulate) {
  for (int i = 0; i < m; ++i) {
    T* crow = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      T acc = accumulate ? crow[j] : T(0);
      const T* arow = a + static_cast<std::size_t>(i) * k;
      const T* brow = b + static_cast<std::size_t>(j) * k;
      for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
      crow[j] = acc;
    }
  }
}

template <>
inline void gemm_nt<float>(const float* a, const float* b, float* c, int m,
                           int n, int k, bool accumulate) {
  gemm_nt_f32(a, b, c, m, n, k, accumulate);
}

}  // namespace pipecam::nn
