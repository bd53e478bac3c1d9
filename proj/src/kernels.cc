// src/kernels.cc

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

#include "asv/kernels.h"

#include <cmath>

#include "asv/error.h"

namespace asv {
namespace kernels {

namespace scalar {

double dot(const double *a, const double *b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy(double alpha, const double *x, double *y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double max_value(const double *v, std::size_t n) {
  double m = v[0];
  for (std::size_t i = 1; i < n; ++i)
    if (v[i] > m) m = v[i];
  return m;
}

double exp_sum(const double *v, std::size_t n, double shift) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += std::exp(v[i] - shift);
  return acc;
}

void sign_scale(const double *g, double *out, std::size_t n, double scale) {
  for (std::size_t i = 0; i < n; ++i) {
    double s = (g[i] > 0.0) ? 1.0 : (g[i] < 0.0 ? -1.0 : 0.0);
    out[i] = scale * s;
  }
}

}  // namespace scalar

#if defined(__x86_64__) || defined(__i386__)
#define ASV_HAVE_AVX2_TU 1
namespace avx2 {
double dot(const double *a, const double *b, std::size_t n);
void axpy(double alpha, const double *x, double *y, std::size_t n);
double max_value(const double *v, std::size_t n);
double exp_sum(const double *v, std::size_t n, double shift);
void sign_scale(const double *g, double *out, std::size_t n, double scale);
}  // namespace avx2
#endif

bool avx2_available() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

namespace {
Backend g_backend = avx2_available() ? Backend::kAvx2 : Backend::kScalar;
}  // namespace

Backend active_backend() { return g_backend; }

void force_backend(Backend backend) {
  if (backend == Backend::kAvx2 && !avx2_available())
    throw ArgumentError("AVX2 backend requested on a CPU without AVX2");
  g_backend = backend;
}

double dot(const double *a, const double *b, std::size_t n) {
#ifdef ASV_HAVE_AVX2_TU
  if (g_backend == Backend::kAvx2) return avx2::dot(a, b, n);
#endif
  return scalar::dot(a, b, n);
}

void axpy(double alpha, const double *x, double *y, std::size_t n) {
#ifdef ASV_HAVE_AVX2_TU
  if (g_backend == Backend::kAvx2) return avx2::axpy(alpha, x, y, n);
#endif
  scalar::axpy(alpha, x, y, n);
}

double max_value(const double *v, std::size_t n) {
#ifdef ASV_HAVE_AVX2_TU
  if (g_backend == Backend::kAvx2) return avx2::max_value(v, n);
#endif
  return scalar::max_value(v, n);
}

double exp_sum(const double *v, std::size_t n, double shift) {
#ifdef ASV_HAVE_AVX2_TU
  if (g_backend == Backend::kAvx2) return avx2::exp_sum(v, n, shift);
#endif
  return scalar::exp_sum(v, n, shift);
}

void sign_scale(const double *g, double *out, std::size_t n, double scale) {
#ifdef ASV_HAVE_AVX2_TU
  if (g_backend == Backend::kAvx2) return avx2::sign_scale(g, out, n, scale);
#endif
  scalar::sign_scale(g, out, n, scale);
}

}  // namespace kernels
}  // namespace asv
