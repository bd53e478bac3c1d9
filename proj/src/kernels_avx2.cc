// src/kernels_avx2.cc

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// AVX2 kernel variants. This translation unit is the only one compiled with
// -mavx2; callers reach it through the dispatch table in kernels.cc, which
// checks CPU support first.

#if defined(__x86_64__) || defined(__i386__)

#include <immintrin.h>

#include <cmath>
#include <cstddef>
#include <cstdint>

namespace asv {
namespace kernels {
namespace avx2 {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

// Vector exp by range reduction x = n*ln2 + r, |r| <= ln2/2, exp(r) from a
// degree-11 Taylor expansion, then a scale by 2^n through the exponent bits.
// Agrees with std::exp to ~2 ulp over the range logsumexp feeds it
// (arguments are max-shifted, so x <= 0).
inline __m256d exp_pd(__m256d x) {
  const __m256d kLog2e = _mm256_set1_pd(1.4426950408889634073599);
  const __m256d kLn2Hi = _mm256_set1_pd(6.93147180369123816490e-01);
  const __m256d kLn2Lo = _mm256_set1_pd(1.90821492927058770002e-10);
  const __m256d kMin = _mm256_set1_pd(-708.0);
  const __m256d kMax = _mm256_set1_pd(708.0);

  x = _mm256_max_pd(_mm256_min_pd(x, kMax), kMin);
  __m256d n = _mm256_round_pd(_mm256_mul_pd(x, kLog2e),
                              _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_sub_pd(x, _mm256_mul_pd(n, kLn2Hi));
  r = _mm256_sub_pd(r, _mm256_mul_pd(n, kLn2Lo));

  // Horner evaluation of sum_{k=0..11} r^k / k!.
  __m256d p = _mm256_set1_pd(1.0 / 39916800.0);  // 1/11!
  const double kInvFact[] = {1.0 / 3628800.0, 1.0 / 362880.0, 1.0 / 40320.0,
                             1.0 / 5040.0,    1.0 / 720.0,    1.0 / 120.0,
                             1.0 / 24.0,      1.0 / 6.0,      0.5,
                             1.0,             1.0};
  for (double c : kInvFact)
    p = _mm256_add_pd(_mm256_mul_pd(p, r), _mm256_set1_pd(c));

  // 2^n via the IEEE-754 exponent field.
  __m128i ni = _mm256_cvtpd_epi32(n);
  __m256i nl = _mm256_cvtepi32_epi64(ni);
  __m256i bias = _mm256_set1_epi64x(1023);
  __m256i pow2 = _mm256_slli_epi64(_mm256_add_epi64(nl, bias), 52);
  return _mm256_mul_pd(p, _mm256_castsi256_pd(pow2));
}

}  // namespace

double dot(const double *a, const double *b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d va = _mm256_loadu_pd(a + i);
    __m256d vb = _mm256_loadu_pd(b + i);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(va, vb));
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double *x, double *y, std::size_t n) {
  __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vx = _mm256_loadu_pd(x + i);
    __m256d vy = _mm256_loadu_pd(y + i);
    _mm256_storeu_pd(y + i, _mm256_add_pd(vy, _mm256_mul_pd(va, vx)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double max_value(const double *v, std::size_t n) {
  std::size_t i = 0;
  double m = v[0];
  if (n >= 4) {
    __m256d vm = _mm256_loadu_pd(v);
    for (i = 4; i + 4 <= n; i += 4)
      vm = _mm256_max_pd(vm, _mm256_loadu_pd(v + i));
    __m128d lo = _mm256_castpd256_pd128(vm);
    __m128d hi = _mm256_extractf128_pd(vm, 1);
    lo = _mm_max_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    m = _mm_cvtsd_f64(_mm_max_sd(lo, sh));
  }
  for (; i < n; ++i)
    if (v[i] > m) m = v[i];
  return m;
}

double exp_sum(const double *v, std::size_t n, double shift) {
  __m256d vs = _mm256_set1_pd(shift);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d x = _mm256_sub_pd(_mm256_loadu_pd(v + i), vs);
    acc = _mm256_add_pd(acc, exp_pd(x));
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += std::exp(v[i] - shift);
  return s;
}

void sign_scale(const double *g, double *out, std::size_t n, double scale) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d plus = _mm256_set1_pd(scale);
  const __m256d minus = _mm256_set1_pd(-scale);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d x = _mm256_loadu_pd(g + i);
    __m256d gt = _mm256_cmp_pd(x, zero, _CMP_GT_OQ);
    __m256d lt = _mm256_cmp_pd(x, zero, _CMP_LT_OQ);
    __m256d r = _mm256_blendv_pd(zero, plus, gt);
    r = _mm256_blendv_pd(r, minus, lt);
    _mm256_storeu_pd(out + i, r);
  }
  for (; i < n; ++i) {
    double s = (g[i] > 0.0) ? 1.0 : (g[i] < 0.0 ? -1.0 : 0.0);
    out[i] = scale * s;
  }
}

}  // namespace avx2
}  // namespace kernels
}  // namespace asv

#endif  // x86
