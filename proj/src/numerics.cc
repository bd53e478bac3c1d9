// src/numerics.cc

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

#include "asv/numerics.h"

#include <cmath>
#include <string>

#include "asv/error.h"
#include "asv/kernels.h"

namespace asv {

namespace {

void check_symmetric(const Matrix &a) {
  if (a.rows() != a.cols()) throw ArgumentError("SPD matrix must be square");
  double scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    scale = std::max(scale, std::abs(a.data()[i]));
  if (scale == 0.0) return;  // all-zero fails positivity later
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = r + 1; c < a.cols(); ++c)
      if (std::abs(a(r, c) - a(c, r)) > 1e-9 * scale)
        throw ArgumentError("matrix not symmetric at (" + std::to_string(r) +
                            "," + std::to_string(c) + ")");
}

}  // namespace

SpdFactor::SpdFactor(const Matrix &a) {
  check_symmetric(a);
  const std::size_t n = a.rows();
  l_ = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j) - kernels::dot(l_.row_ptr(j), l_.row_ptr(j), j);
    if (d <= 0.0 || !std::isfinite(d))
      throw DefinitenessError("matrix not positive definite at pivot " +
                              std::to_string(j));
    l_(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j) - kernels::dot(l_.row_ptr(i), l_.row_ptr(j), j);
      l_(i, j) = s / l_(j, j);
    }
  }
}

Vector SpdFactor::half_solve(const Vector &b) const {
  const std::size_t n = dim();
  if (b.size() != n) throw ArgumentError("solve dimension mismatch");
  Vector y(n);
  for (std::size_t i = 0; i < n; ++i)
    y[i] = (b[i] - kernels::dot(l_.row_ptr(i), y.data(), i)) / l_(i, i);
  return y;
}

Vector SpdFactor::solve(const Vector &b) const {
  const std::size_t n = dim();
  Vector y = half_solve(b);
  // Back substitution with L^T.
  for (std::size_t ii = n; ii-- > 0;) {
    double s = y[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= l_(k, ii) * y[k];
    y[ii] = s / l_(ii, ii);
  }
  return y;
}

Matrix SpdFactor::solve(const Matrix &b) const {
  if (b.rows() != dim()) throw ArgumentError("solve dimension mismatch");
  Matrix x(b.rows(), b.cols());
  for (std::size_t c = 0; c < b.cols(); ++c) x.set_col(c, solve(b.col(c)));
  return x;
}

double SpdFactor::logdet() const {
  double s = 0.0;
  for (std::size_t i = 0; i < dim(); ++i) s += std::log(l_(i, i));
  return 2.0 * s;
}

double SpdFactor::quad_form(const Vector &b) const {
  Vector y = half_solve(b);
  return kernels::dot(y.data(), y.data(), y.size());
}

Matrix solve_spd(const Matrix &a, const Matrix &b) { return SpdFactor(a).solve(b); }
Vector solve_spd(const Matrix &a, const Vector &b) { return SpdFactor(a).solve(b); }
double logdet_spd(const Matrix &a) { return SpdFactor(a).logdet(); }

double logsumexp(const double *v, std::size_t n) {
  if (n == 0) throw ArgumentError("logsumexp of empty vector");
  double m = kernels::max_value(v, n);
  if (!std::isfinite(m)) return m;  // all -inf, or a stray inf propagates
  return m + std::log(kernels::exp_sum(v, n, m));
}

double logsumexp(const Vector &v) { return logsumexp(v.data(), v.size()); }

void jacobi_eigen(const Matrix &a_in, Matrix *eigvecs, Vector *eigvals) {
  check_symmetric(a_in);
  const std::size_t n = a_in.rows();
  Matrix a = a_in;
  Matrix v = Matrix::identity(n);
  const int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-28 * (n * n)) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  // Sort ascending by eigenvalue.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (a(order[j], order[j]) < a(order[i], order[i]))
        std::swap(order[i], order[j]);
  *eigvals = Vector(n);
  *eigvecs = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    (*eigvals)[i] = a(order[i], order[i]);
    for (std::size_t k = 0; k < n; ++k) (*eigvecs)(k, i) = v(k, order[i]);
  }
}

Matrix floor_spd(const Matrix &a, double floor) {
  Matrix v;
  Vector w;
  jacobi_eigen(a, &v, &w);
  bool changed = false;
  for (double &x : w)
    if (x < floor) {
      x = floor;
      changed = true;
    }
  if (!changed) return a;
  const std::size_t n = a.rows();
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += v(i, k) * w[k] * v(j, k);
      out(i, j) = out(j, i) = s;
    }
  return out;
}

}  // namespace asv
