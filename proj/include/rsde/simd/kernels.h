/*
 * Copyright 2026 The rsde Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Data-parallel inner loops used across the library. Every kernel has a
// portable scalar reference implementation and, on x86-64, an AVX2/FMA
// variant. The active table is chosen once at startup from CPUID and can be
// pinned with the RSDE_SIMD_LEVEL environment variable ("SCALAR" or "AVX2").
//
// All matrices are dense, row-major, 64-bit.

#ifndef RSDE_SIMD_KERNELS_H_
#define RSDE_SIMD_KERNELS_H_

#include <cstddef>

namespace rsde::simd {

enum class Level { kScalar = 0, kAvx2 = 1 };

const char* LevelName(Level level);

// Highest level supported by both the build and the running CPU.
Level DetectLevel();

// Level currently used by Kernels().
Level ActiveLevel();

// Pins the active level. Throws InvalidArgument if the CPU or the build
// cannot run it.
void SetLevel(Level level);

bool LevelSupported(Level level);

struct KernelTable {
  double (*dot)(const double* a, const double* b, std::size_t n);

  // y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);

  // C(m x n) += A(m x k) * B(k x n)
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c);

  // C(m x n) += A(k x m)^T * B(k x n)
  void (*gemm_tn)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c);

  // C(m x n) += A(m x k) * B(n x k)^T
  void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c);

  // out(na x nb) = Euclidean distances between rows of a and rows of b.
  void (*distances)(const double* a, std::size_t na, const double* b,
                    std::size_t nb, std::size_t dim, double* out);

  // Writes sum(cos(phase)) and sum(sin(phase)) over n phases.
  void (*sum_cos_sin)(const double* phase, std::size_t n, double* cos_sum,
                      double* sin_sum);

  // out[i] = x[i] * sigmoid(x[i]) and deriv[i] = d/dx of the same. out may
  // alias x.
  void (*silu)(const double* x, std::size_t n, double* out, double* deriv);
};

// Table for the active level.
const KernelTable& Kernels();

// Table for an explicit level, used by equivalence tests. Throws
// InvalidArgument if the level is unsupported.
const KernelTable& KernelsFor(Level level);

namespace scalar {
const KernelTable& Table();
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
const KernelTable& Table();
}  // namespace avx2
#endif

}  // namespace rsde::simd

#endif  // RSDE_SIMD_KERNELS_H_
