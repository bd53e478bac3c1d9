// asv/matrix.h

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

#ifndef ASV_MATRIX_H_
#define ASV_MATRIX_H_

#include <cstddef>
#include <vector>

namespace asv {

using Vector = std::vector<double>;

// Dense double-precision matrix, (row, col) indexing, row-major storage.
class Matrix {
 public:
  Matrix() : rows_(0), cols_(0) {}
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double &operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  double *row_ptr(std::size_t r) { return data_.data() + r * cols_; }
  const double *row_ptr(std::size_t r) const { return data_.data() + r * cols_; }

  double *data() { return data_.data(); }
  const double *data() const { return data_.data(); }
  std::size_t size() const { return data_.size(); }

  bool same_shape(const Matrix &other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  static Matrix identity(std::size_t n);

  Vector col(std::size_t c) const;
  void set_col(std::size_t c, const Vector &v);

 private:
  std::size_t rows_, cols_;
  std::vector<double> data_;
};

Matrix transpose(const Matrix &a);
Matrix matmul(const Matrix &a, const Matrix &b);
// a^T * b without forming the transpose.
Matrix matmul_at_b(const Matrix &a, const Matrix &b);
Vector mat_vec(const Matrix &a, const Vector &x);
// a^T * x
Vector mat_t_vec(const Matrix &a, const Vector &x);
Matrix outer(const Vector &a, const Vector &b);

Matrix add(const Matrix &a, const Matrix &b);
Matrix sub(const Matrix &a, const Matrix &b);
Matrix scale(const Matrix &a, double s);

Vector vec_add(const Vector &a, const Vector &b);
Vector vec_sub(const Vector &a, const Vector &b);
Vector vec_scale(const Vector &a, double s);
double vec_dot(const Vector &a, const Vector &b);
double vec_norm(const Vector &a);

// Throws if any entry is NaN/Inf; `what` names the offending value.
void check_finite(const Matrix &a, const char *what);
void check_finite(const Vector &v, const char *what);

}  // namespace asv

#endif  // ASV_MATRIX_H_
