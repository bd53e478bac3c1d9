// src/matrix.cc

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

#include "asv/matrix.h"

#include <cmath>

#include "asv/error.h"
#include "asv/kernels.h"

namespace asv {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Vector Matrix::col(std::size_t c) const {
  Vector v(rows_);
  for (std::size_t r = 0; r < rows_; ++r) v[r] = (*this)(r, c);
  return v;
}

void Matrix::set_col(std::size_t c, const Vector &v) {
  for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = v[r];
}

Matrix transpose(const Matrix &a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) t(c, r) = a(r, c);
  return t;
}

Matrix matmul(const Matrix &a, const Matrix &b) {
  if (a.cols() != b.rows()) throw ArgumentError("matmul shape mismatch");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k)
      kernels::axpy(a(i, k), b.row_ptr(k), c.row_ptr(i), b.cols());
  return c;
}

Matrix matmul_at_b(const Matrix &a, const Matrix &b) {
  if (a.rows() != b.rows()) throw ArgumentError("matmul_at_b shape mismatch");
  Matrix c(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k)
    for (std::size_t i = 0; i < a.cols(); ++i)
      kernels::axpy(a(k, i), b.row_ptr(k), c.row_ptr(i), b.cols());
  return c;
}

Vector mat_vec(const Matrix &a, const Vector &x) {
  if (a.cols() != x.size()) throw ArgumentError("mat_vec shape mismatch");
  Vector y(a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r)
    y[r] = kernels::dot(a.row_ptr(r), x.data(), a.cols());
  return y;
}

Vector mat_t_vec(const Matrix &a, const Vector &x) {
  if (a.rows() != x.size()) throw ArgumentError("mat_t_vec shape mismatch");
  Vector y(a.cols(), 0.0);
  for (std::size_t r = 0; r < a.rows(); ++r)
    kernels::axpy(x[r], a.row_ptr(r), y.data(), a.cols());
  return y;
}

Matrix outer(const Vector &a, const Vector &b) {
  Matrix m(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    kernels::axpy(a[i], b.data(), m.row_ptr(i), b.size());
  return m;
}

Matrix add(const Matrix &a, const Matrix &b) {
  if (!a.same_shape(b)) throw ArgumentError("matrix add shape mismatch");
  Matrix c = a;
  kernels::axpy(1.0, b.data(), c.data(), c.size());
  return c;
}

Matrix sub(const Matrix &a, const Matrix &b) {
  if (!a.same_shape(b)) throw ArgumentError("matrix sub shape mismatch");
  Matrix c = a;
  kernels::axpy(-1.0, b.data(), c.data(), c.size());
  return c;
}

Matrix scale(const Matrix &a, double s) {
  Matrix c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] *= s;
  return c;
}

Vector vec_add(const Vector &a, const Vector &b) {
  if (a.size() != b.size()) throw ArgumentError("vector add size mismatch");
  Vector c = a;
  kernels::axpy(1.0, b.data(), c.data(), c.size());
  return c;
}

Vector vec_sub(const Vector &a, const Vector &b) {
  if (a.size() != b.size()) throw ArgumentError("vector sub size mismatch");
  Vector c = a;
  kernels::axpy(-1.0, b.data(), c.data(), c.size());
  return c;
}

Vector vec_scale(const Vector &a, double s) {
  Vector c = a;
  for (double &x : c) x *= s;
  return c;
}

double vec_dot(const Vector &a, const Vector &b) {
  if (a.size() != b.size()) throw ArgumentError("dot size mismatch");
  return kernels::dot(a.data(), b.data(), a.size());
}

double vec_norm(const Vector &a) { return std::sqrt(vec_dot(a, a)); }

void check_finite(const Matrix &a, const char *what) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!std::isfinite(a.data()[i]))
      throw ArgumentError(std::string("non-finite entry in ") + what);
}

void check_finite(const Vector &v, const char *what) {
  for (double x : v)
    if (!std::isfinite(x))
      throw ArgumentError(std::string("non-finite entry in ") + what);
}

}  // namespace asv
