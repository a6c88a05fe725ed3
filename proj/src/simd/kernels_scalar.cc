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

#include <cmath>
#include <cstddef>

#include "rsde/simd/kernels.h"

namespace rsde::simd::scalar {
namespace {

double Dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void Axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void GemmNN(std::size_t m, std::size_t n, std::size_t k, const double* a,
            const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    const double* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void GemmTN(std::size_t m, std::size_t n, std::size_t k, const double* a,
            const double* b, double* c) {
  for (std::size_t p = 0; p < k; ++p) {
    const double* arow = a + p * m;
    const double* brow = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = arow[i];
      double* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void GemmNT(std::size_t m, std::size_t n, std::size_t k, const double* a,
            const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      c[i * n + j] += Dot(a + i * k, b + j * k, k);
    }
  }
}

void Distances(const double* a, std::size_t na, const double* b,
               std::size_t nb, std::size_t dim, double* out) {
  for (std::size_t i = 0; i < na; ++i) {
    for (std::size_t j = 0; j < nb; ++j) {
      double acc = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        const double diff = a[i * dim + d] - b[j * dim + d];
        acc += diff * diff;
      }
      out[i * nb + j] = std::sqrt(acc);
    }
  }
}

void SumCosSin(const double* phase, std::size_t n, double* cos_sum,
               double* sin_sum) {
  double cs = 0.0;
  double sn = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cs += std::cos(phase[i]);
    sn += std::sin(phase[i]);
  }
  *cos_sum = cs;
  *sin_sum = sn;
}

void Silu(const double* x, std::size_t n, double* out, double* deriv) {
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = x[i];
    const double s = 1.0 / (1.0 + std::exp(-xi));
    out[i] = xi * s;
    deriv[i] = s * (1.0 + xi * (1.0 - s));
  }
}

}  // namespace

const KernelTable& Table() {
  static const KernelTable table{&Dot,    &Axpy,      &GemmNN,    &GemmTN,
                                 &GemmNT, &Distances, &SumCosSin, &Silu};
  return table;
}

}  // namespace rsde::simd::scalar
