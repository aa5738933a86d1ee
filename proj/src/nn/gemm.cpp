#include "pipecam/nn/gemm.hpp"

#include <algorithm>
#include <cstring>

#include "pipecam/parallel.hpp"

#ifdef __AVX2__
#include <immintrin.h>
#endif

namespace pipecam::nn {

namespace {

#ifdef __AVX2__

// 4x32 register-blocked kernel: 16 accumulators, 4 B vectors, 1 broadcast.
void gemm_nn_range(const float* a, const float* b, float* c, int m, int n,
                   int k, bool accumulate, int j_begin, int j_end) {
  constexpr int NR = 32;
  int i = 0;
  for (; i + 4 <= m; i += 4) {
    int j = j_begin;
    for (; j + NR <= j_end; j += NR) {
      __m256 acc[4][4];
      for (int r = 0; r < 4; ++r)
        for (int q = 0; q < 4; ++q) acc[r][q] = _mm256_setzero_ps();
      for (int p = 0; p < k; ++p) {
        const float* bp = b + static_cast<std::size_t>(p) * n + j;
        const __m256 b0 = _mm256_loadu_ps(bp);
        const __m256 b1 = _mm256_loadu_ps(bp + 8);
        const __m256 b2 = _mm256_loadu_ps(bp + 16);
        const __m256 b3 = _mm256_loadu_ps(bp + 24);
        for (int r = 0; r < 4; ++r) {
          const __m256 av =
              _mm256_set1_ps(a[static_cast<std::size_t>(i + r) * k + p]);
          acc[r][0] = _mm256_fmadd_ps(av, b0, acc[r][0]);
          acc[r][1] = _mm256_fmadd_ps(av, b1, acc[r][1]);
          acc[r][2] = _mm256_fmadd_ps(av, b2, acc[r][2]);
          acc[r][3] = _mm256_fmadd_ps(av, b3, acc[r][3]);
        }
      }
      for (int r = 0; r < 4; ++r) {
        float* cp = c + static_cast<std::size_t>(i + r) * n + j;
        for (int q = 0; q < 4; ++q) {
          __m256 res = acc[r][q];
          if (accumulate)
            res = _mm256_add_ps(_mm256_loadu_ps(cp + 8 * q), res);
          _mm256_storeu_ps(cp + 8 * q, res);
        }
      }
    }
    for (; j < j_end; ++j) {
      for (int r = 0; r < 4; ++r) {
        float acc = 0.0f;
        const float* arow = a + static_cast<std::size_t>(i + r) * k;
        for (int p = 0; p < k; ++p)
          acc += arow[p] * b[static_cast<std::size_t>(p) * n + j];
        float* cp = c + static_cast<std::size_t>(i + r) * n + j;
        *cp = accumulate ? *cp + acc : acc;
      }
    }
  }
  for (; i < m; ++i) {
    const float* arow = a + static_cast<std::size_t>(i) * k;
    int j = j_begin;
    for (; j + 8 <= j_end; j += 8) {
      __m256 acc = _mm256_setzero_ps();
      for (int p = 0; p < k; ++p) {
        const __m256 av = _mm256_set1_ps(arow[p]);
        acc = _mm256_fmadd_ps(
            av, _mm256_loadu_ps(b + static_cast<std::size_t>(p) * n + j), acc);
      }
      float* cp = c + static_cast<std::size_t>(i) * n + j;
      if (accumulate) acc = _mm256_add_ps(_mm256_loadu_ps(cp), acc);
      _mm256_storeu_ps(cp, acc);
    }
    for (; j < j_end; ++j) {
      float acc = 0.0f;
      for (int p = 0; p < k; ++p)
        acc += arow[p] * b[static_cast<std::size_t>(p) * n + j];
      float* cp = c + static_cast<std::size_t>(i) * n + j;
      *cp = accumulate ? *cp + acc : acc;
    }
  }
}

inline float hsum8(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  lo = _mm_hadd_ps(lo, lo);
  lo = _mm_hadd_ps(lo, lo);
  return _mm_cvtss_f32(lo);
}

// Dot-product kernel for C += A * B^T; rows of A against rows of B.
void gemm_nt_range(const float* a, const float* b, float* c, int m, int n,
                   int k, bool accumulate, int i_begin, int i_end) {
  for (int i = i_begin; i < i_end; ++i) {
    const float* arow = a + static_cast<std::size_t>(i) * k;
    float* crow = c + static_cast<std::size_t>(i) * n;
    int j = 0;
    for (; j + 2 <= n; j += 2) {
      const float* b0 = b + static_cast<std::size_t>(j) * k;
      const float* b1 = b + static_cast<std::size_t>(j + 1) * k;
      __m256 acc0 = _mm256_setzero_ps();
      __m256 acc1 = _mm256_setzero_ps();
      int p = 0;
      for (; p + 8 <= k; p += 8) {
        const __m256 av = _mm256_loadu_ps(arow + p);
        acc0 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b0 + p), acc0);
        acc1 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b1 + p), acc1);
      }
      float s0 = hsum8(acc0), s1 = hsum8(acc1);
      for (; p < k; ++p) {
        s0 += arow[p] * b0[p];
        s1 += arow[p] * b1[p];
      }
      crow[j] = accumulate ? crow[j] + s0 : s0;
      crow[j + 1] = accumulate ? crow[j + 1] + s1 : s1;
    }
    for (; j < n; ++j) {
      const float* brow = b + static_cast<std::size_t>(j) * k;
      float s = 0.0f;
      int p = 0;
      __m256 acc = _mm256_setzero_ps();
      for (; p + 8 <= k; p += 8)
        acc = _mm256_fmadd_ps(_mm256_loadu_ps(arow + p),
                              _mm256_loadu_ps(brow + p), acc);
      s = hsum8(acc);
      for (; p < k; ++p) s += arow[p] * brow[p];
      crow[j] = accumulate ? crow[j] + s : s;
    }
  }
}

#else  // portable fallbacks

void gemm_nn_range(const float* a, const float* b, float* c, int m, int n,
                   int k, bool accumulate, int j_begin, int j_end) {
  for (int i = 0; i < m; ++i) {
    float* crow = c + static_cast<std::size_t>(i) * n;
    if (!accumulate)
      for (int j = j_begin; j < j_end; ++j) crow[j] = 0.0f;
    const float* arow = a + static_cast<std::size_t>(i) * k;
    for (int p = 0; p < k; ++p) {
      const float av = arow[p];
      const float* brow = b + static_cast<std::size_t>(p) * n;
      for (int j = j_begin; j < j_end; ++j) crow[j] += av * brow[j];
    }
  }
}

void gemm_nt_range(const float* a, const float* b, float* c, int m, int n,
                   int k, bool accumulate, int i_begin, int i_end) {
  for (int i = i_begin; i < i_end; ++i) {
    const float* arow = a + static_cast<std::size_t>(i) * k;
    float* crow = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const float* brow = b + static_cast<std::size_t>(j) * k;
      float s = 0.0f;
      for (int p = 0; p < k; ++p) s += arow[p] * brow[p];
      crow[j] = accumulate ? crow[j] + s : s;
    }
  }
}

#endif

}  // namespace

void gemm_nn_f32(const float* a, const float* b, float* c, int m, int n, int k,
                 bool accumulate) {
  const int workers = worker_count();
  if (workers <= 1 || static_cast<long>(m) * n * k < (1 << 18)) {
    gemm_nn_range(a, b, c, m, n, k, accumulate, 0, n);
    return;
  }
  // Column blocks in multiples of 32 keep the kernel's fast path aligned.
  const int blocks = std::min(workers, std::max(1, n / 32));
  const int per = ((n / blocks + 31) / 32) * 32;
  parallel_for(blocks, [&](long t) {
    const int lo = static_cast<int>(t) * per;
    const int hi = std::min(n, lo + per);
    if (lo < hi) gemm_nn_range(a, b, c, m, n, k, accumulate, lo, hi);
  });
}

void gemm_nt_f32(const float* a, const float* b, float* c, int m, int n, int k,
                 bool accumulate) {
  const int workers = worker_count();
  if (workers <= 1 || static_cast<long>(m) * n * k < (1 << 18)) {
    gemm_nt_range(a, b, c, m, n, k, accumulate, 0, m);
    return;
  }
  const int blocks = std::min(workers, m);
  const int per = (m + blocks - 1) / blocks;
  parallel_for(blocks, [&](long t) {
    const int lo = static_cast<int>(t) * per;
    const int hi = std::min(m, lo + per);
    if (lo < hi) gemm_nt_range(a, b, c, m, n, k, accumulate, lo, hi);
  });
}

}  // namespace pipecam::nn
