// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

// Compiled with -mavx2 -mfma. Nothing here may be called unless dispatch.cc
// has confirmed CPU support.
#include <immintrin.h>

#include "mulan/simd/kernels.h"

namespace mulan::simd {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  __m256d acc3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), acc2);
    acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), acc3);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double sum = hsum(_mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3)));
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    _mm256_storeu_pd(y + i + 4,
                     _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4)));
  }
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale_avx2(double alpha, double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) x[i] *= alpha;
}

// C[rows x n] += sum_p A(r, p) * B[p, :], with A(r, p) = a[r * rs + p * ps].
// Covers both A*B (rs = k, ps = 1) and A^T*B (rs = 1, ps = k).
void gemm_strided(std::size_t rows, std::size_t n, std::size_t depth,
                  const double* a, std::size_t rs, std::size_t ps,
                  const double* b, double* c) {
  std::size_t r = 0;
  for (; r + 4 <= rows; r += 4) {
    const double* a0 = a + r * rs;
    const double* a1 = a0 + rs;
    const double* a2 = a1 + rs;
    const double* a3 = a2 + rs;
    double* c0 = c + r * n;
    double* c1 = c0 + n;
    double* c2 = c1 + n;
    double* c3 = c2 + n;
    std::size_t j = 0;
    for (; j + 8 <= n; j += 8) {
      __m256d x00 = _mm256_loadu_pd(c0 + j), x01 = _mm256_loadu_pd(c0 + j + 4);
      __m256d x10 = _mm256_loadu_pd(c1 + j), x11 = _mm256_loadu_pd(c1 + j + 4);
      __m256d x20 = _mm256_loadu_pd(c2 + j), x21 = _mm256_loadu_pd(c2 + j + 4);
      __m256d x30 = _mm256_loadu_pd(c3 + j), x31 = _mm256_loadu_pd(c3 + j + 4);
      for (std::size_t p = 0; p < depth; ++p) {
        const double* bp = b + p * n + j;
        const __m256d b0 = _mm256_loadu_pd(bp);
        const __m256d b1 = _mm256_loadu_pd(bp + 4);
        const std::size_t off = p * ps;
        __m256d s = _mm256_broadcast_sd(a0 + off);
        x00 = _mm256_fmadd_pd(s, b0, x00);
        x01 = _mm256_fmadd_pd(s, b1, x01);
        s = _mm256_broadcast_sd(a1 + off);
        x10 = _mm256_fmadd_pd(s, b0, x10);
        x11 = _mm256_fmadd_pd(s, b1, x11);
        s = _mm256_broadcast_sd(a2 + off);
        x20 = _mm256_fmadd_pd(s, b0, x20);
        x21 = _mm256_fmadd_pd(s, b1, x21);
        s = _mm256_broadcast_sd(a3 + off);
        x30 = _mm256_fmadd_pd(s, b0, x30);
        x31 = _mm256_fmadd_pd(s, b1, x31);
      }
      _mm256_storeu_pd(c0 + j, x00), _mm256_storeu_pd(c0 + j + 4, x01);
      _mm256_storeu_pd(c1 + j, x10), _mm256_storeu_pd(c1 + j + 4, x11);
      _mm256_storeu_pd(c2 + j, x20), _mm256_storeu_pd(c2 + j + 4, x21);
      _mm256_storeu_pd(c3 + j, x30), _mm256_storeu_pd(c3 + j + 4, x31);
    }
    for (; j + 4 <= n; j += 4) {
      __m256d x0 = _mm256_loadu_pd(c0 + j);
      __m256d x1 = _mm256_loadu_pd(c1 + j);
      __m256d x2 = _mm256_loadu_pd(c2 + j);
      __m256d x3 = _mm256_loadu_pd(c3 + j);
      for (std::size_t p = 0; p < depth; ++p) {
        const __m256d bv = _mm256_loadu_pd(b + p * n + j);
        const std::size_t off = p * ps;
        x0 = _mm256_fmadd_pd(_mm256_broadcast_sd(a0 + off), bv, x0);
        x1 = _mm256_fmadd_pd(_mm256_broadcast_sd(a1 + off), bv, x1);
        x2 = _mm256_fmadd_pd(_mm256_broadcast_sd(a2 + off), bv, x2);
        x3 = _mm256_fmadd_pd(_mm256_broadcast_sd(a3 + off), bv, x3);
      }
      _mm256_storeu_pd(c0 + j, x0);
      _mm256_storeu_pd(c1 + j, x1);
      _mm256_storeu_pd(c2 + j, x2);
      _mm256_storeu_pd(c3 + j, x3);
    }
    for (; j < n; ++j) {
      for (std::size_t p = 0; p < depth; ++p) {
        const double bv = b[p * n + j];
        const std::size_t off = p * ps;
        c0[j] += a0[off] * bv;
        c1[j] += a1[off] * bv;
        c2[j] += a2[off] * bv;
        c3[j] += a3[off] * bv;
      }
    }
  }
  for (; r < rows; ++r) {
    const double* ar = a + r * rs;
    double* cr = c + r * n;
    std::size_t j = 0;
    for (; j + 8 <= n; j += 8) {
      __m256d x0 = _mm256_loadu_pd(cr + j);
      __m256d x1 = _mm256_loadu_pd(cr + j + 4);
      for (std::size_t p = 0; p < depth; ++p) {
        const __m256d s = _mm256_broadcast_sd(ar + p * ps);
        x0 = _mm256_fmadd_pd(s, _mm256_loadu_pd(b + p * n + j), x0);
        x1 = _mm256_fmadd_pd(s, _mm256_loadu_pd(b + p * n + j + 4), x1);
      }
      _mm256_storeu_pd(cr + j, x0);
      _mm256_storeu_pd(cr + j + 4, x1);
    }
    for (; j + 4 <= n; j += 4) {
      __m256d x0 = _mm256_loadu_pd(cr + j);
      for (std::size_t p = 0; p < depth; ++p) {
        x0 = _mm256_fmadd_pd(_mm256_broadcast_sd(ar + p * ps),
                             _mm256_loadu_pd(b + p * n + j), x0);
      }
      _mm256_storeu_pd(cr + j, x0);
    }
    for (; j < n; ++j) {
      for (std::size_t p = 0; p < depth; ++p) cr[j] += ar[p * ps] * b[p * n + j];
    }
  }
}

void gemm_nn_avx2(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c) {
  gemm_strided(m, n, k, a, k, 1, b, c);
}

void gemm_tn_avx2(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c) {
  gemm_strided(k, n, m, a, 1, k, b, c);
}

// One row of A against four rows of B per pass; the four dot products share
// each load of A.
void gemm_nt_avx2(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      const double* b0 = b + j * k;
      const double* b1 = b0 + k;
      const double* b2 = b1 + k;
      const double* b3 = b2 + k;
      __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
      __m256d s2 = _mm256_setzero_pd(), s3 = _mm256_setzero_pd();
      std::size_t p = 0;
      for (; p + 4 <= k; p += 4) {
        const __m256d av = _mm256_loadu_pd(ai + p);
        s0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b0 + p), s0);
        s1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b1 + p), s1);
        s2 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b2 + p), s2);
        s3 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b3 + p), s3);
      }
      double t0 = hsum(s0), t1 = hsum(s1), t2 = hsum(s2), t3 = hsum(s3);
      for (; p < k; ++p) {
        t0 += ai[p] * b0[p];
        t1 += ai[p] * b1[p];
        t2 += ai[p] * b2[p];
        t3 += ai[p] * b3[p];
      }
      ci[j] += t0;
      ci[j + 1] += t1;
      ci[j + 2] += t2;
      ci[j + 3] += t3;
    }
    for (; j < n; ++j) ci[j] += dot_avx2(ai, b + j * k, k);
  }
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{
      Isa::kAvx2, "avx2",       dot_avx2,     axpy_avx2,
      scale_avx2, gemm_nn_avx2, gemm_nt_avx2, gemm_tn_avx2,
  };
  return table;
}

}  // namespace mulan::simd
