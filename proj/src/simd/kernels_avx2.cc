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

// Compiled with -mavx2 -mfma. Nothing in this file may run before the
// dispatcher has confirmed CPU support.

#include <immintrin.h>

#include <cmath>
#include <cstddef>
#include <vector>

#include "rsde/simd/kernels.h"

namespace rsde::simd::avx2 {
namespace {

inline double HorizontalSum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

double Dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4),
                           _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double acc = HorizontalSum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void Axpy(double a, const double* x, double* y, std::size_t n) {
  const __m256d av = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(
        y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

// C += op(A) * B with op(A)(i, p) = a[i * row_stride + p * col_stride].
// Register-blocked 4x8 micro-kernel with 4-wide and scalar edges.
void GemmStrided(std::size_t m, std::size_t n, std::size_t k, const double* a,
                 std::size_t row_stride, std::size_t col_stride,
                 const double* b, double* c) {
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    const double* a0 = a + (i + 0) * row_stride;
    const double* a1 = a + (i + 1) * row_stride;
    const double* a2 = a + (i + 2) * row_stride;
    const double* a3 = a + (i + 3) * row_stride;
    std::size_t j = 0;
    for (; j + 8 <= n; j += 8) {
      __m256d c00 = _mm256_loadu_pd(c + (i + 0) * n + j);
      __m256d c01 = _mm256_loadu_pd(c + (i + 0) * n + j + 4);
      __m256d c10 = _mm256_loadu_pd(c + (i + 1) * n + j);
      __m256d c11 = _mm256_loadu_pd(c + (i + 1) * n + j + 4);
      __m256d c20 = _mm256_loadu_pd(c + (i + 2) * n + j);
      __m256d c21 = _mm256_loadu_pd(c + (i + 2) * n + j + 4);
      __m256d c30 = _mm256_loadu_pd(c + (i + 3) * n + j);
      __m256d c31 = _mm256_loadu_pd(c + (i + 3) * n + j + 4);
      for (std::size_t p = 0; p < k; ++p) {
        const __m256d b0 = _mm256_loadu_pd(b + p * n + j);
        const __m256d b1 = _mm256_loadu_pd(b + p * n + j + 4);
        const std::size_t off = p * col_stride;
        __m256d av = _mm256_broadcast_sd(a0 + off);
        c00 = _mm256_fmadd_pd(av, b0, c00);
        c01 = _mm256_fmadd_pd(av, b1, c01);
        av = _mm256_broadcast_sd(a1 + off);
        c10 = _mm256_fmadd_pd(av, b0, c10);
        c11 = _mm256_fmadd_pd(av, b1, c11);
        av = _mm256_broadcast_sd(a2 + off);
        c20 = _mm256_fmadd_pd(av, b0, c20);
        c21 = _mm256_fmadd_pd(av, b1, c21);
        av = _mm256_broadcast_sd(a3 + off);
        c30 = _mm256_fmadd_pd(av, b0, c30);
        c31 = _mm256_fmadd_pd(av, b1, c31);
      }
      _mm256_storeu_pd(c + (i + 0) * n + j, c00);
      _mm256_storeu_pd(c + (i + 0) * n + j + 4, c01);
      _mm256_storeu_pd(c + (i + 1) * n + j, c10);
      _mm256_storeu_pd(c + (i + 1) * n + j + 4, c11);
      _mm256_storeu_pd(c + (i + 2) * n + j, c20);
      _mm256_storeu_pd(c + (i + 2) * n + j + 4, c21);
      _mm256_storeu_pd(c + (i + 3) * n + j, c30);
      _mm256_storeu_pd(c + (i + 3) * n + j + 4, c31);
    }
    for (; j + 4 <= n; j += 4) {
      __m256d c0 = _mm256_loadu_pd(c + (i + 0) * n + j);
      __m256d c1 = _mm256_loadu_pd(c + (i + 1) * n + j);
      __m256d c2 = _mm256_loadu_pd(c + (i + 2) * n + j);
      __m256d c3 = _mm256_loadu_pd(c + (i + 3) * n + j);
      for (std::size_t p = 0; p < k; ++p) {
        const __m256d b0 = _mm256_loadu_pd(b + p * n + j);
        const std::size_t off = p * col_stride;
        c0 = _mm256_fmadd_pd(_mm256_broadcast_sd(a0 + off), b0, c0);
        c1 = _mm256_fmadd_pd(_mm256_broadcast_sd(a1 + off), b0, c1);
        c2 = _mm256_fmadd_pd(_mm256_broadcast_sd(a2 + off), b0, c2);
        c3 = _mm256_fmadd_pd(_mm256_broadcast_sd(a3 + off), b0, c3);
      }
      _mm256_storeu_pd(c + (i + 0) * n + j, c0);
      _mm256_storeu_pd(c + (i + 1) * n + j, c1);
      _mm256_storeu_pd(c + (i + 2) * n + j, c2);
      _mm256_storeu_pd(c + (i + 3) * n + j, c3);
    }
    for (; j < n; ++j) {
      double s0 = c[(i + 0) * n + j];
      double s1 = c[(i + 1) * n + j];
      double s2 = c[(i + 2) * n + j];
      double s3 = c[(i + 3) * n + j];
      for (std::size_t p = 0; p < k; ++p) {
        const double bv = b[p * n + j];
        const std::size_t off = p * col_stride;
        s0 += a0[off] * bv;
        s1 += a1[off] * bv;
        s2 += a2[off] * bv;
        s3 += a3[off] * bv;
      }
      c[(i + 0) * n + j] = s0;
      c[(i + 1) * n + j] = s1;
      c[(i + 2) * n + j] = s2;
      c[(i + 3) * n + j] = s3;
    }
  }
  for (; i < m; ++i) {
    const double* a0 = a + i * row_stride;
    double* crow = c + i * n;
    std::size_t j = 0;
    for (; j + 8 <= n; j += 8) {
      __m256d c0 = _mm256_loadu_pd(crow + j);
      __m256d c1 = _mm256_loadu_pd(crow + j + 4);
      for (std::size_t p = 0; p < k; ++p) {
        const __m256d av = _mm256_broadcast_sd(a0 + p * col_stride);
        c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b + p * n + j), c0);
        c1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b + p * n + j + 4), c1);
      }
      _mm256_storeu_pd(crow + j, c0);
      _mm256_storeu_pd(crow + j + 4, c1);
    }
    for (; j + 4 <= n; j += 4) {
      __m256d c0 = _mm256_loadu_pd(crow + j);
      for (std::size_t p = 0; p < k; ++p) {
        c0 = _mm256_fmadd_pd(_mm256_broadcast_sd(a0 + p * col_stride),
                             _mm256_loadu_pd(b + p * n + j), c0);
      }
      _mm256_storeu_pd(crow + j, c0);
    }
    for (; j < n; ++j) {
      double s = crow[j];
      for (std::size_t p = 0; p < k; ++p) s += a0[p * col_stride] * b[p * n + j];
      crow[j] = s;
    }
  }
}

void GemmNN(std::size_t m, std::size_t n, std::size_t k, const double* a,
            const double* b, double* c) {
  GemmStrided(m, n, k, a, k, 1, b, c);
}

void GemmTN(std::size_t m, std::size_t n, std::size_t k, const double* a,
            const double* b, double* c) {
  GemmStrided(m, n, k, a, 1, m, b, c);
}

void GemmNT(std::size_t m, std::size_t n, std::size_t k, const double* a,
            const double* b, double* c) {
  if (n < 4) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) c[i * n + j] += Dot(a + i * k, b + j * k, k);
    }
    return;
  }
  // Transposing B (n x k) into k x n turns this into the broadcast form.
  thread_local std::vector<double> bt;
  bt.resize(n * k);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t p = 0; p < k; ++p) bt[p * n + j] = b[j * k + p];
  }
  GemmStrided(m, n, k, a, k, 1, bt.data(), c);
}

void Distances(const double* a, std::size_t na, const double* b,
               std::size_t nb, std::size_t dim, double* out) {
  thread_local std::vector<double> bt;
  bt.resize(nb * dim);
  for (std::size_t j = 0; j < nb; ++j) {
    for (std::size_t d = 0; d < dim; ++d) bt[d * nb + j] = b[j * dim + d];
  }
  for (std::size_t i = 0; i < na; ++i) {
    const double* ai = a + i * dim;
    double* orow = out + i * nb;
    std::size_t j = 0;
    for (; j + 4 <= nb; j += 4) {
      __m256d acc = _mm256_setzero_pd();
      for (std::size_t d = 0; d < dim; ++d) {
        const __m256d diff =
            _mm256_sub_pd(_mm256_broadcast_sd(ai + d), _mm256_loadu_pd(&bt[d * nb + j]));
        acc = _mm256_fmadd_pd(diff, diff, acc);
      }
      _mm256_storeu_pd(orow + j, _mm256_sqrt_pd(acc));
    }
    for (; j < nb; ++j) {
      double acc = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        const double diff = ai[d] - bt[d * nb + j];
        acc += diff * diff;
      }
      orow[j] = std::sqrt(acc);
    }
  }
}

// Polynomial sin/cos after reduction by pi/4 (Cody-Waite, three-part pi).
// Coefficients are the classic Cephes minimax sets; accurate to ~1 ulp for
// |x| up to ~1e8.
constexpr double kSinCoef[] = {1.58962301576546568060E-10, -2.50507477628578072866E-8,
                               2.75573136213857245213E-6,  -1.98412698295895385996E-4,
                               8.33333333332211858878E-3,  -1.66666666666666307295E-1};
constexpr double kCosCoef[] = {-1.13585365213876817300E-11, 2.08757008419747316778E-9,
                               -2.75573141792967388112E-7,  2.48015872888517045348E-5,
                               -1.38888888888730564116E-3,  4.16666666666665929218E-2};
constexpr double kDP1 = 7.85398125648498535156E-1;
constexpr double kDP2 = 3.77489470793079817668E-8;
constexpr double kDP3 = 2.69515142907905952645E-15;
constexpr double kFourOverPi = 1.27323954473516268615;

inline __m256d Poly6(__m256d x, const double* coef) {
  __m256d acc = _mm256_set1_pd(coef[0]);
  for (int i = 1; i < 6; ++i) acc = _mm256_fmadd_pd(acc, x, _mm256_set1_pd(coef[i]));
  return acc;
}

inline void SinCos4(__m256d x, __m256d* sin_out, __m256d* cos_out) {
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  const __m256d x_sign = _mm256_and_pd(x, sign_mask);
  const __m256d ax = _mm256_andnot_pd(sign_mask, x);

  __m256d j = _mm256_floor_pd(_mm256_mul_pd(ax, _mm256_set1_pd(kFourOverPi)));
  // Round j up to even.
  const __m256d half = _mm256_floor_pd(_mm256_mul_pd(j, _mm256_set1_pd(0.5)));
  j = _mm256_add_pd(j, _mm256_sub_pd(j, _mm256_add_pd(half, half)));
  const __m256d y = j;
  // j mod 8
  const __m256d eighth = _mm256_floor_pd(_mm256_mul_pd(j, _mm256_set1_pd(0.125)));
  __m256d q = _mm256_fnmadd_pd(eighth, _mm256_set1_pd(8.0), j);
  const __m256d q_ge4 = _mm256_cmp_pd(q, _mm256_set1_pd(4.0), _CMP_GE_OQ);
  q = _mm256_sub_pd(q, _mm256_and_pd(q_ge4, _mm256_set1_pd(4.0)));
  const __m256d q_is2 = _mm256_cmp_pd(q, _mm256_set1_pd(2.0), _CMP_EQ_OQ);

  __m256d z = _mm256_fnmadd_pd(y, _mm256_set1_pd(kDP1), ax);
  z = _mm256_fnmadd_pd(y, _mm256_set1_pd(kDP2), z);
  z = _mm256_fnmadd_pd(y, _mm256_set1_pd(kDP3), z);
  const __m256d zz = _mm256_mul_pd(z, z);

  const __m256d sin_poly =
      _mm256_fmadd_pd(_mm256_mul_pd(z, zz), Poly6(zz, kSinCoef), z);
  const __m256d cos_poly = _mm256_fmadd_pd(
      _mm256_mul_pd(zz, zz), Poly6(zz, kCosCoef),
      _mm256_fnmadd_pd(zz, _mm256_set1_pd(0.5), _mm256_set1_pd(1.0)));

  __m256d s = _mm256_blendv_pd(sin_poly, cos_poly, q_is2);
  __m256d c = _mm256_blendv_pd(cos_poly, sin_poly, q_is2);

  const __m256d flip_s = _mm256_xor_pd(_mm256_and_pd(q_ge4, sign_mask), x_sign);
  s = _mm256_xor_pd(s, flip_s);
  const __m256d flip_c = _mm256_and_pd(_mm256_xor_pd(q_ge4, q_is2), sign_mask);
  c = _mm256_xor_pd(c, flip_c);
  *sin_out = s;
  *cos_out = c;
}

void SumCosSin(const double* phase, std::size_t n, double* cos_sum,
               double* sin_sum) {
  __m256d cacc = _mm256_setzero_pd();
  __m256d sacc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d s;
    __m256d c;
    SinCos4(_mm256_loadu_pd(phase + i), &s, &c);
    cacc = _mm256_add_pd(cacc, c);
    sacc = _mm256_add_pd(sacc, s);
  }
  double cs = HorizontalSum(cacc);
  double sn = HorizontalSum(sacc);
  for (; i < n; ++i) {
    cs += std::cos(phase[i]);
    sn += std::sin(phase[i]);
  }
  *cos_sum = cs;
  *sin_sum = sn;
}

// exp(x) for x in [-700, 700]: 2^k * P(r) with r in [-ln2/2, ln2/2] and a
// degree-13 Taylor polynomial.
inline __m256d Exp4(__m256d x) {
  x = _mm256_min_pd(_mm256_max_pd(x, _mm256_set1_pd(-700.0)), _mm256_set1_pd(700.0));
  const __m256d k = _mm256_round_pd(
      _mm256_mul_pd(x, _mm256_set1_pd(1.44269504088896340736)),
      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(k, _mm256_set1_pd(6.93145751953125E-1), x);
  r = _mm256_fnmadd_pd(k, _mm256_set1_pd(1.42860682030941723212E-6), r);
  static constexpr double kInvFact[] = {
      1.0 / 6227020800.0, 1.0 / 479001600.0, 1.0 / 39916800.0, 1.0 / 3628800.0,
      1.0 / 362880.0,     1.0 / 40320.0,     1.0 / 5040.0,     1.0 / 720.0,
      1.0 / 120.0,        1.0 / 24.0,        1.0 / 6.0,        0.5,
      1.0,                1.0};
  __m256d p = _mm256_set1_pd(kInvFact[0]);
  for (int i = 1; i < 14; ++i) p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(kInvFact[i]));
  // 2^k via the exponent field.
  const __m128i ki = _mm256_cvtpd_epi32(k);
  __m256i bits = _mm256_cvtepi32_epi64(ki);
  bits = _mm256_slli_epi64(_mm256_add_epi64(bits, _mm256_set1_epi64x(1023)), 52);
  return _mm256_mul_pd(p, _mm256_castsi256_pd(bits));
}

void Silu(const double* x, std::size_t n, double* out, double* deriv) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xv = _mm256_loadu_pd(x + i);
    const __m256d e = Exp4(_mm256_xor_pd(xv, sign_mask));
    const __m256d s = _mm256_div_pd(one, _mm256_add_pd(one, e));
    _mm256_storeu_pd(out + i, _mm256_mul_pd(xv, s));
    const __m256d inner = _mm256_fmadd_pd(xv, _mm256_sub_pd(one, s), one);
    _mm256_storeu_pd(deriv + i, _mm256_mul_pd(s, inner));
  }
  for (; i < n; ++i) {
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

}  // namespace rsde::simd::avx2
