// asv/numerics.h

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

#ifndef ASV_NUMERICS_H_
#define ASV_NUMERICS_H_

#include <cstddef>

#include "asv/matrix.h"

namespace asv {

// Cholesky factorization A = L L^T of a symmetric positive-definite matrix.
// The single entry point for every inversion in the codebase; explicit
// inverses are never formed.
class SpdFactor {
 public:
  // Checks symmetry (1e-9 relative) and throws a definiteness error naming
  // the failing pivot if A is not positive definite.
  explicit SpdFactor(const Matrix &a);

  std::size_t dim() const { return l_.rows(); }
  const Matrix &lower() const { return l_; }

  Vector solve(const Vector &b) const;
  Matrix solve(const Matrix &b) const;  // columnwise
  // Solves L y = b (forward substitution only); y^T y is then the
  // Mahalanobis quadratic form b^T A^{-1} b.
  Vector half_solve(const Vector &b) const;
  double logdet() const;
  double quad_form(const Vector &b) const;  // b^T A^{-1} b

 private:
  Matrix l_;
};

Matrix solve_spd(const Matrix &a, const Matrix &b);
Vector solve_spd(const Matrix &a, const Vector &b);
double logdet_spd(const Matrix &a);

// Overflow-safe log sum exp; throws on empty input.
double logsumexp(const double *v, std::size_t n);
double logsumexp(const Vector &v);

// Cyclic Jacobi eigendecomposition of a symmetric matrix: a = V diag(w) V^T,
// eigenvectors in columns of V, eigenvalues ascending. Used for covariance
// flooring and the LDA generalized eigenproblem.
void jacobi_eigen(const Matrix &a, Matrix *eigvecs, Vector *eigvals);

// Replaces a (symmetric) with the nearest matrix whose eigenvalues are all
// >= floor.
Matrix floor_spd(const Matrix &a, double floor);

}  // namespace asv

#endif  // ASV_NUMERICS_H_
