// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MULAN_SIMD_KERNELS_H_
#define MULAN_SIMD_KERNELS_H_

#include <cstddef>
#include <span>
#include <string_view>

// Dense f64 inner loops used throughout the kit. Every kernel has a scalar
// reference implementation; AVX2+FMA (x86-64) and NEON (aarch64) variants are
// selected once at startup from the running CPU. `MULAN_SIMD=scalar` forces
// the reference path.
//
// All matrices are row-major and densely packed. The gemm kernels accumulate
// into C (C += ...), they never overwrite it.
namespace mulan::simd {

enum class Isa { kScalar, kAvx2, kNeon };

struct KernelTable {
  Isa isa;
  const char* name;

  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // x *= alpha
  void (*scale)(double alpha, double* x, std::size_t n);

  // C[m x n] += A[m x k] * B[k x n]
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c);
  // C[m x n] += A[m x k] * B[n x k]^T
  void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c);
  // C[k x n] += A[m x k]^T * B[m x n]
  void (*gemm_tn)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c);
};

const KernelTable& scalar_kernels();
// nullptr when the variant was not compiled in or the CPU lacks the ISA.
const KernelTable* avx2_kernels();
const KernelTable* neon_kernels();

// The table every caller should use.
const KernelTable& active();

// Switches the active table; returns false if `isa` is unavailable here.
// Intended for tests and benchmarks.
bool select(Isa isa);

std::string_view isa_name(Isa isa);

// Span conveniences over the active table.
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);

}  // namespace mulan::simd

#endif  // MULAN_SIMD_KERNELS_H_
