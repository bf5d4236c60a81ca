// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#include <arm_neon.h>

#include "mulan/simd/kernels.h"

namespace mulan::simd {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double sum = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale_neon(double alpha, double* x, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(x + i, vmulq_f64(va, vld1q_f64(x + i)));
  for (; i < n; ++i) x[i] *= alpha;
}

void gemm_strided(std::size_t rows, std::size_t n, std::size_t depth,
                  const double* a, std::size_t rs, std::size_t ps,
                  const double* b, double* c) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* ar = a + r * rs;
    double* cr = c + r * n;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      float64x2_t x0 = vld1q_f64(cr + j);
      float64x2_t x1 = vld1q_f64(cr + j + 2);
      for (std::size_t p = 0; p < depth; ++p) {
        const float64x2_t s = vdupq_n_f64(ar[p * ps]);
        x0 = vfmaq_f64(x0, s, vld1q_f64(b + p * n + j));
        x1 = vfmaq_f64(x1, s, vld1q_f64(b + p * n + j + 2));
      }
      vst1q_f64(cr + j, x0);
      vst1q_f64(cr + j + 2, x1);
    }
    for (; j < n; ++j) {
      for (std::size_t p = 0; p < depth; ++p) cr[j] += ar[p * ps] * b[p * n + j];
    }
  }
}

void gemm_nn_neon(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c) {
  gemm_strided(m, n, k, a, k, 1, b, c);
}

void gemm_tn_neon(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c) {
  gemm_strided(k, n, m, a, 1, k, b, c);
}

void gemm_nt_neon(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) c[i * n + j] += dot_neon(a + i * k, b + j * k, k);
  }
}

}  // namespace

const KernelTable& neon_table() {
  static const KernelTable table{
      Isa::kNeon, "neon",       dot_neon,     axpy_neon,
      scale_neon, gemm_nn_neon, gemm_nt_neon, gemm_tn_neon,
  };
  return table;
}

}  // namespace mulan::simd
