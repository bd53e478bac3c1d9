// asv/kernels.h

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

#ifndef ASV_KERNELS_H_
#define ASV_KERNELS_H_

#include <cstddef>

namespace asv {
namespace kernels {

// Data-parallel inner loops used by the numeric substrate. Each kernel has a
// scalar reference implementation and an AVX2 variant; the backend is picked
// once at startup from CPU capabilities and can be forced for equivalence
// testing.

enum class Backend { kScalar, kAvx2 };

Backend active_backend();
// Forces a backend; forcing kAvx2 on a CPU without AVX2 throws.
void force_backend(Backend backend);
bool avx2_available();

double dot(const double *a, const double *b, std::size_t n);
// y += alpha * x
void axpy(double alpha, const double *x, double *y, std::size_t n);
double max_value(const double *v, std::size_t n);
// sum_i exp(v[i] - shift)
double exp_sum(const double *v, std::size_t n, double shift);
// out[i] = scale * sign(g[i]), with sign(0) = 0.
void sign_scale(const double *g, double *out, std::size_t n, double scale);

// Scalar reference implementations, always available (used as the oracle in
// backend equivalence tests).
namespace scalar {
double dot(const double *a, const double *b, std::size_t n);
void axpy(double alpha, const double *x, double *y, std::size_t n);
double max_value(const double *v, std::size_t n);
double exp_sum(const double *v, std::size_t n, double shift);
void sign_scale(const double *g, double *out, std::size_t n, double scale);
}  // namespace scalar

}  // namespace kernels
}  // namespace asv

#endif  // ASV_KERNELS_H_
