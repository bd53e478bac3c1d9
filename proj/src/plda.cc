// src/plda.cc

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

#include "asv/plda.h"

#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include "asv/error.h"
#include "asv/kernels.h"

namespace asv {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

Matrix phi_phi_t(const PldaModel &model) {
  return matmul(model.phi, transpose(model.phi));
}

Matrix marginal_cov(const PldaModel &model) {
  return add(phi_phi_t(model), model.sigma);
}

Matrix joint_cov(const PldaModel &model) {
  const std::size_t d = model.dim();
  Matrix g = marginal_cov(model);
  Matrix c = phi_phi_t(model);
  Matrix j(2 * d, 2 * d);
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t s = 0; s < d; ++s) {
      j(r, s) = g(r, s);
      j(d + r, d + s) = g(r, s);
      j(r, d + s) = c(r, s);
      j(d + r, s) = c(r, s);
    }
  return j;
}

// Per-speaker session grouping.
std::map<std::size_t, std::vector<std::size_t>> group_by_speaker(
    const std::vector<std::size_t> &labels) {
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(i);
  return groups;
}

}  // namespace

PldaScorer::PldaScorer(const PldaModel &model)
    : m_(model.m),
      marginal_(marginal_cov(model)),
      joint_(joint_cov(model)) {
  logdet_term_ = marginal_.logdet() - 0.5 * joint_.logdet();
}

double PldaScorer::score(const Vector &enroll, const Vector &test) const {
  const std::size_t d = dim();
  if (enroll.size() != d || test.size() != d)
    throw ArgumentError("embedding dimension mismatch in PLDA scoring");
  Vector e = vec_sub(enroll, m_), t = vec_sub(test, m_);
  Vector x(2 * d);
  for (std::size_t i = 0; i < d; ++i) {
    x[i] = e[i];
    x[d + i] = t[i];
  }
  return -0.5 * joint_.quad_form(x) + 0.5 * marginal_.quad_form(e) +
         0.5 * marginal_.quad_form(t) + logdet_term_;
}

Vector PldaScorer::grad_test(const Vector &enroll, const Vector &test) const {
  const std::size_t d = dim();
  if (enroll.size() != d || test.size() != d)
    throw ArgumentError("embedding dimension mismatch in PLDA gradient");
  Vector e = vec_sub(enroll, m_), t = vec_sub(test, m_);
  Vector x(2 * d);
  for (std::size_t i = 0; i < d; ++i) {
    x[i] = e[i];
    x[d + i] = t[i];
  }
  Vector jx = joint_.solve(x);
  Vector gt = marginal_.solve(t);
  Vector grad(d);
  for (std::size_t i = 0; i < d; ++i) grad[i] = -jx[d + i] + gt[i];
  return grad;
}

double plda_log_likelihood(const PldaModel &model,
                           const std::vector<SpeakerEmbedding> &embeddings,
                           const std::vector<std::size_t> &labels) {
  const std::size_t d = model.dim(), q = model.n_factors();
  SpdFactor sigma_fac(model.sigma);
  Matrix sigma_inv_phi = sigma_fac.solve(model.phi);           // d x q
  Matrix gram = matmul_at_b(model.phi, sigma_inv_phi);         // q x q
  auto groups = group_by_speaker(labels);
  double ll = 0.0;
  for (const auto &[spk, idx] : groups) {
    const double n = double(idx.size());
    Matrix m_mat = Matrix::identity(q);
    m_mat = add(m_mat, scale(gram, n));
    SpdFactor m_fac(m_mat);
    Vector sum_centered(d, 0.0);
    double quad = 0.0;
    for (std::size_t i : idx) {
      Vector r = vec_sub(embeddings[i].values, model.m);
      quad += sigma_fac.quad_form(r);
      kernels::axpy(1.0, r.data(), sum_centered.data(), d);
    }
    Vector g = mat_t_vec(sigma_inv_phi, sum_centered);  // q
    ll += -0.5 * n * d * kLog2Pi - 0.5 * n * sigma_fac.logdet() - 0.5 * quad +
          0.5 * vec_dot(g, m_fac.solve(g)) - 0.5 * m_fac.logdet();
  }
  return ll;
}

PldaModel train_plda(const std::vector<SpeakerEmbedding> &embeddings,
                     const std::vector<std::size_t> &labels,
                     const PldaTrainOptions &opts) {
  if (embeddings.size() != labels.size())
    throw ArgumentError("embedding/label count mismatch");
  if (embeddings.empty()) throw TrainingError("no embeddings for PLDA");
  const std::size_t d = embeddings[0].values.size();
  const std::size_t q = opts.n_factors > 0 ? opts.n_factors : d;
  if (q > d) throw ArgumentError("n_factors exceeds embedding dimension");
  auto groups = group_by_speaker(labels);
  if (groups.size() < 2)
    throw TrainingError("PLDA needs >= 2 speakers (degenerate training set)");
  bool any_multi = false;
  for (const auto &[spk, idx] : groups) any_multi |= idx.size() >= 2;
  if (!any_multi)
    throw TrainingError("PLDA needs a speaker with >= 2 sessions");

  const std::size_t n_total = embeddings.size();

  PldaModel model;
  model.m = embedding_mean(embeddings);

  // Initialization: Sigma = sample covariance (floored), Phi = fixed-seed
  // Gaussian scaled by the average data standard deviation.
  Matrix scatter(d, d);
  for (const auto &e : embeddings) {
    Vector r = vec_sub(e.values, model.m);
    for (std::size_t a = 0; a < d; ++a)
      kernels::axpy(r[a], r.data(), scatter.row_ptr(a), d);
  }
  Matrix sample_cov = scale(scatter, 1.0 / double(n_total));
  double trace = 0.0;
  for (std::size_t i = 0; i < d; ++i) trace += sample_cov(i, i);
  double sigma_floor = opts.sigma_floor_fraction * std::max(trace / d, 1e-300);

  model.sigma = floor_spd(sample_cov, sigma_floor);
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  model.phi = Matrix(d, q);
  double init_scale = 0.5 * std::sqrt(std::max(trace / d, 1e-12));
  for (std::size_t i = 0; i < model.phi.size(); ++i)
    model.phi.data()[i] = init_scale * gauss(rng);

  if (opts.ll_history)
    opts.ll_history->push_back(plda_log_likelihood(model, embeddings, labels));

  for (std::size_t it = 0; it < opts.iters; ++it) {
    SpdFactor sigma_fac(model.sigma);
    Matrix sigma_inv_phi = sigma_fac.solve(model.phi);
    Matrix gram = matmul_at_b(model.phi, sigma_inv_phi);
    // Accumulators: A = sum_spk (sum_r r) E[b]^T ; R = sum_spk n E[b b^T].
    Matrix a_acc(d, q), r_acc(q, q);
    for (const auto &[spk, idx] : groups) {
      const double n = double(idx.size());
      Matrix m_mat = add(Matrix::identity(q), scale(gram, n));
      SpdFactor m_fac(m_mat);
      Vector sum_centered(d, 0.0);
      for (std::size_t i : idx)
        kernels::axpy(1.0, vec_sub(embeddings[i].values, model.m).data(),
                      sum_centered.data(), d);
      Vector g = mat_t_vec(sigma_inv_phi, sum_centered);
      Vector e_b = m_fac.solve(g);
      Matrix e_bbt = m_fac.solve(Matrix::identity(q));  // posterior covariance
      for (std::size_t r = 0; r < q; ++r)
        kernels::axpy(e_b[r], e_b.data(), e_bbt.row_ptr(r), q);
      for (std::size_t r = 0; r < d; ++r)
        kernels::axpy(sum_centered[r], e_b.data(), a_acc.row_ptr(r), q);
      r_acc = add(r_acc, scale(e_bbt, n));
    }
    // M-step: Phi = A R^{-1}; Sigma = (S - Phi A^T) / N, floored SPD.
    Matrix r_sym = r_acc;
    for (std::size_t r = 0; r < q; ++r)
      for (std::size_t s = r + 1; s < q; ++s)
        r_sym(r, s) = r_sym(s, r) = 0.5 * (r_sym(r, s) + r_sym(s, r));
    Matrix phi_t = SpdFactor(r_sym).solve(transpose(a_acc));  // q x d
    model.phi = transpose(phi_t);
    Matrix sigma_new = scale(sub(scatter, matmul(model.phi, transpose(a_acc))),
                             1.0 / double(n_total));
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t s = r + 1; s < d; ++s)
        sigma_new(r, s) = sigma_new(s, r) =
            0.5 * (sigma_new(r, s) + sigma_new(s, r));
    model.sigma = floor_spd(sigma_new, sigma_floor);
    if (opts.ll_history)
      opts.ll_history->push_back(plda_log_likelihood(model, embeddings, labels));
  }
  return model;
}

Matrix train_lda(const std::vector<SpeakerEmbedding> &embeddings,
                 const std::vector<std::size_t> &labels, std::size_t out_dim) {
  if (embeddings.size() != labels.size())
    throw ArgumentError("embedding/label count mismatch");
  if (embeddings.empty()) throw TrainingError("no embeddings for LDA");
  const std::size_t d = embeddings[0].values.size();
  auto groups = group_by_speaker(labels);
  if (out_dim == 0 || out_dim > d || out_dim > groups.size() - 1)
    throw ArgumentError("LDA out_dim must be in [1, min(dim, n_speakers - 1)]");

  Vector global = embedding_mean(embeddings);
  Matrix within(d, d), between(d, d);
  for (const auto &[spk, idx] : groups) {
    Vector mean(d, 0.0);
    for (std::size_t i : idx)
      kernels::axpy(1.0, embeddings[i].values.data(), mean.data(), d);
    mean = vec_scale(mean, 1.0 / double(idx.size()));
    Vector diff = vec_sub(mean, global);
    for (std::size_t a = 0; a < d; ++a)
      kernels::axpy(double(idx.size()) * diff[a], diff.data(),
                    between.row_ptr(a), d);
    for (std::size_t i : idx) {
      Vector r = vec_sub(embeddings[i].values, mean);
      for (std::size_t a = 0; a < d; ++a)
        kernels::axpy(r[a], r.data(), within.row_ptr(a), d);
    }
  }
  // Ridge keeps the whitening factor well defined when a dimension has no
  // within-class variance.
  double tr = 0.0;
  for (std::size_t i = 0; i < d; ++i) tr += within(i, i);
  for (std::size_t i = 0; i < d; ++i)
    within(i, i) += std::max(1e-10 * tr / d, 1e-300);

  // Whiten the between scatter with the within factor, then eigensolve.
  SpdFactor w_fac(within);
  // M = L^{-1} B L^{-T}
  Matrix half = w_fac.lower();  // L
  // lb = L^{-1} B; since B is symmetric, M = L^{-1} B L^{-T} = L^{-1} lb^T.
  Matrix lb(d, d);
  for (std::size_t c = 0; c < d; ++c) lb.set_col(c, w_fac.half_solve(between.col(c)));
  Matrix lbt = transpose(lb);
  Matrix m_mat(d, d);
  for (std::size_t c = 0; c < d; ++c) m_mat.set_col(c, w_fac.half_solve(lbt.col(c)));
  // Symmetrize against roundoff before the eigensolve.
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t s = r + 1; s < d; ++s)
      m_mat(r, s) = m_mat(s, r) = 0.5 * (m_mat(r, s) + m_mat(s, r));

  Matrix eigvecs;
  Vector eigvals;
  jacobi_eigen(m_mat, &eigvecs, &eigvals);  // ascending

  // Rows of the projection: v^T L^{-1} for the top out_dim eigenvectors,
  // i.e. solve L^T u = v.
  Matrix proj(out_dim, d);
  for (std::size_t k = 0; k < out_dim; ++k) {
    Vector v = eigvecs.col(d - 1 - k);
    // back substitution with L^T
    Vector u(d);
    for (std::size_t ii = d; ii-- > 0;) {
      double s = v[ii];
      for (std::size_t j = ii + 1; j < d; ++j) s -= half(j, ii) * u[j];
      u[ii] = s / half(ii, ii);
    }
    for (std::size_t j = 0; j < d; ++j) proj(k, j) = u[j];
  }
  return proj;
}

SpeakerEmbedding project_lda(const Matrix &projection,
                             const SpeakerEmbedding &emb) {
  if (projection.cols() != emb.values.size())
    throw ArgumentError("LDA projection dimension mismatch");
  SpeakerEmbedding out;
  out.kind = emb.kind;
  out.values = mat_vec(projection, emb.values);
  out.normalized = false;
  return out;
}

}  // namespace asv
