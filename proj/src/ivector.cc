// src/ivector.cc

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

#include "asv/ivector.h"

#include <cmath>
#include <iostream>
#include <random>

#include "asv/error.h"
#include "asv/kernels.h"

namespace asv {

Matrix TotalVariabilityModel::mixture_block(std::size_t c) const {
  Matrix block(dim, ivec_dim);
  for (std::size_t r = 0; r < dim; ++r)
    for (std::size_t j = 0; j < ivec_dim; ++j)
      block(r, j) = t_matrix(c * dim + r, j);
  return block;
}

TvCache::TvCache(const GmmUbm &ubm, const GmmDensityCache &density,
                 const TotalVariabilityModel &tv)
    : ivec_dim_(tv.ivec_dim) {
  if (tv.ubm_hash != ubm.content_hash())
    throw BindingError("total variability model is bound to a different UBM");
  weighted_.reserve(ubm.n_mix());
  gram_.reserve(ubm.n_mix());
  for (std::size_t c = 0; c < ubm.n_mix(); ++c) {
    Matrix block = tv.mixture_block(c);
    Matrix weighted = density.factor(c).solve(block);  // Sigma_c^{-1} T_c
    gram_.push_back(matmul_at_b(block, weighted));
    weighted_.push_back(std::move(weighted));
  }
}

Matrix TvCache::precision(const BaumWelchStats &stats) const {
  Matrix l = Matrix::identity(ivec_dim_);
  for (std::size_t c = 0; c < n_mix(); ++c)
    if (stats.zeroth[c] != 0.0)
      l = add(l, scale(gram_[c], stats.zeroth[c]));
  return l;
}

Vector TvCache::projected_stats(const BaumWelchStats &stats) const {
  Vector b(ivec_dim_, 0.0);
  for (std::size_t c = 0; c < n_mix(); ++c) {
    const Matrix &w = weighted_[c];  // dim x ivec
    const double *f = stats.first_block(c);
    for (std::size_t r = 0; r < w.rows(); ++r)
      kernels::axpy(f[r], w.row_ptr(r), b.data(), ivec_dim_);
  }
  return b;
}

IvectorPosterior extract_ivector(const TotalVariabilityModel &tv,
                                 const TvCache &cache,
                                 const BaumWelchStats &stats) {
  if (stats.ubm_hash != tv.ubm_hash)
    throw BindingError("stats come from a different UBM than the T matrix");
  IvectorPosterior post;
  post.precision = cache.precision(stats);
  Vector b = cache.projected_stats(stats);
  post.mean = SpdFactor(post.precision).solve(b);
  check_finite(post.mean, "i-vector");
  return post;
}

IvectorPosterior extract_ivector(const GmmUbm &ubm,
                                 const TotalVariabilityModel &tv,
                                 const BaumWelchStats &stats) {
  GmmDensityCache density(ubm);
  TvCache cache(ubm, density, tv);
  return extract_ivector(tv, cache, stats);
}

double tv_objective(const GmmUbm &ubm, const TotalVariabilityModel &tv,
                    const std::vector<BaumWelchStats> &stats_list) {
  GmmDensityCache density(ubm);
  TvCache cache(ubm, density, tv);
  double obj = 0.0;
  for (const auto &stats : stats_list) {
    Matrix l = cache.precision(stats);
    Vector b = cache.projected_stats(stats);
    SpdFactor f(l);
    obj += 0.5 * (vec_dot(b, f.solve(b)) - f.logdet());
  }
  return obj;
}

TotalVariabilityModel train_total_variability(
    const GmmUbm &ubm, const std::vector<BaumWelchStats> &stats_list,
    const TvTrainOptions &opts) {
  if (stats_list.empty()) throw TrainingError("no stats for T-matrix training");
  const std::size_t m = ubm.n_mix(), d = ubm.dim(), q = opts.ivec_dim;
  const uint64_t ubm_hash = ubm.content_hash();
  for (const auto &s : stats_list)
    if (s.ubm_hash != ubm_hash)
      throw BindingError("stats come from a different UBM");

  // Fixed-seed Gaussian init scaled by the average UBM covariance diagonal.
  double avg_diag = 0.0;
  for (std::size_t c = 0; c < m; ++c)
    for (std::size_t i = 0; i < d; ++i) avg_diag += ubm.covariances[c](i, i);
  avg_diag /= double(m * d);
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  TotalVariabilityModel tv;
  tv.ivec_dim = q;
  tv.n_mix = m;
  tv.dim = d;
  tv.ubm_hash = ubm_hash;
  tv.t_matrix = Matrix(m * d, q);
  const double init_scale = 0.1 * std::sqrt(avg_diag);
  for (std::size_t i = 0; i < tv.t_matrix.size(); ++i)
    tv.t_matrix.data()[i] = init_scale * gauss(rng);

  if (opts.objective_history)
    opts.objective_history->push_back(tv_objective(ubm, tv, stats_list));

  GmmDensityCache density(ubm);
  for (std::size_t it = 0; it < opts.iters; ++it) {
    TvCache cache(ubm, density, tv);
    // E-step moments per mixture: A_c = sum_i f_ic E[w]^T,
    // B_c = sum_i N_ic E[w w^T].
    std::vector<Matrix> a(m, Matrix(d, q)), b_acc(m, Matrix(q, q));
    for (const auto &stats : stats_list) {
      SpdFactor l_fac(cache.precision(stats));
      Vector mean = l_fac.solve(cache.projected_stats(stats));
      // E[w w^T] = L^{-1} + mean mean^T
      Matrix moment = l_fac.solve(Matrix::identity(q));
      for (std::size_t r = 0; r < q; ++r)
        kernels::axpy(mean[r], mean.data(), moment.row_ptr(r), q);
      for (std::size_t c = 0; c < m; ++c) {
        const double *f = stats.first_block(c);
        for (std::size_t r = 0; r < d; ++r)
          kernels::axpy(f[r], mean.data(), a[c].row_ptr(r), q);
        if (stats.zeroth[c] != 0.0)
          b_acc[c] = add(b_acc[c], scale(moment, stats.zeroth[c]));
      }
    }
    // M-step: per-mixture rows of T solve T_c B_c = A_c.
    for (std::size_t c = 0; c < m; ++c) {
      Matrix b_sym = b_acc[c];
      for (std::size_t r = 0; r < q; ++r)  // symmetrize accumulation noise
        for (std::size_t s = r + 1; s < q; ++s)
          b_sym(r, s) = b_sym(s, r) = 0.5 * (b_sym(r, s) + b_sym(s, r));
      Matrix solved;
      try {
        solved = SpdFactor(b_sym).solve(transpose(a[c]));  // q x d
      } catch (const Error &) {
        std::cerr << "train_total_variability: singular M-step system for "
                     "mixture " << c << ", adding ridge 1e-8\n";
        for (std::size_t r = 0; r < q; ++r) b_sym(r, r) += 1e-8;
        solved = SpdFactor(b_sym).solve(transpose(a[c]));
      }
      for (std::size_t r = 0; r < d; ++r)
        for (std::size_t j = 0; j < q; ++j)
          tv.t_matrix(c * d + r, j) = solved(j, r);
    }
    if (opts.objective_history)
      opts.objective_history->push_back(tv_objective(ubm, tv, stats_list));
  }
  return tv;
}

SpeakerEmbedding center_and_length_normalize(const SpeakerEmbedding &emb,
                                             const Vector &mean) {
  if (emb.values.size() != mean.size())
    throw ArgumentError("embedding/mean dimension mismatch");
  Vector centered = vec_sub(emb.values, mean);
  double norm = vec_norm(centered);
  if (norm == 0.0)
    throw ArgumentError("zero vector after centering; cannot length-normalize");
  SpeakerEmbedding out;
  out.kind = emb.kind;
  out.values = vec_scale(centered, 1.0 / norm);
  out.normalized = true;
  return out;
}

Vector embedding_mean(const std::vector<SpeakerEmbedding> &embs) {
  if (embs.empty()) throw EmptyInputError("no embeddings to average");
  Vector mean(embs[0].values.size(), 0.0);
  for (const auto &e : embs)
    kernels::axpy(1.0, e.values.data(), mean.data(), mean.size());
  return vec_scale(mean, 1.0 / double(embs.size()));
}

}  // namespace asv
