// src/pipeline.cc

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

#include "asv/pipeline.h"

#include <cmath>

#include "asv/error.h"
#include "asv/numerics.h"

namespace asv {

Pipeline::Pipeline(FeatureKind kind, Vector center_mean, PldaModel plda,
                   PreprocessConfig prep)
    : kind_(kind),
      center_mean_(std::move(center_mean)),
      plda_(std::move(plda)),
      scorer_(std::make_unique<PldaScorer>(plda_)),
      prep_(prep) {}

PreparedFeatures Pipeline::prepare(const FeatureMatrix &raw) const {
  if (raw.kind != kind_)
    throw ArgumentError("feature kind does not match the pipeline");
  PreparedFeatures pf;
  pf.feat = raw;
  if (prep_.apply_vad && pf.feat.vad_mask.empty())
    pf.feat.vad_mask = energy_vad(pf.feat, prep_.vad_margin_sigmas);
  pf.cmvn_scale = Vector(raw.dim(), 1.0);
  if (prep_.apply_cmvn) {
    // Record the frozen per-dimension scale of the normalization before
    // replacing the values (same statistics as apply_cmvn).
    const std::size_t kept = pf.feat.kept_frames();
    for (std::size_t r = 0; r < pf.feat.dim(); ++r) {
      double mean = 0.0;
      for (std::size_t t = 0; t < pf.feat.frames(); ++t)
        if (pf.feat.frame_kept(t)) mean += pf.feat.values(r, t);
      mean /= double(kept);
      double var = 0.0;
      for (std::size_t t = 0; t < pf.feat.frames(); ++t)
        if (pf.feat.frame_kept(t)) {
          double c = pf.feat.values(r, t) - mean;
          var += c * c;
        }
      var /= double(kept);
      pf.cmvn_scale[r] =
          (kept < 2) ? 1.0 : 1.0 / std::sqrt(std::max(var, 1e-10));
    }
    pf.feat = apply_cmvn(pf.feat);
  }
  return pf;
}

double Pipeline::score_prepared(const PreparedFeatures &enroll,
                                const PreparedFeatures &test) const {
  SpeakerEmbedding e = embed(enroll);
  SpeakerEmbedding t = embed(test);
  return scorer_->score(e.values, t.values);
}

double Pipeline::score_trial(const FeatureMatrix &enroll,
                             const FeatureMatrix &test) const {
  return score_prepared(prepare(enroll), prepare(test));
}

IvectorPipeline::IvectorPipeline(FeatureKind kind, GmmUbm ubm,
                                 TotalVariabilityModel tv, Vector center_mean,
                                 PldaModel plda, PreprocessConfig prep)
    : Pipeline(kind, std::move(center_mean), std::move(plda), prep),
      ubm_(std::move(ubm)),
      tv_(std::move(tv)),
      density_(std::make_unique<GmmDensityCache>(ubm_)),
      tv_cache_(std::make_unique<TvCache>(ubm_, *density_, tv_)) {}

SpeakerEmbedding IvectorPipeline::embed(const PreparedFeatures &pf) const {
  BaumWelchStats stats = accumulate_stats(ubm_, *density_, pf.feat);
  IvectorPosterior post = extract_ivector(tv_, *tv_cache_, stats);
  SpeakerEmbedding raw;
  raw.kind = EmbeddingKind::kIvector;
  raw.values = post.mean;
  return center_and_length_normalize(raw, center_mean_);
}

Matrix IvectorPipeline::score_gradient(const FeatureMatrix &enroll,
                                       const FeatureMatrix &test) const {
  PreparedFeatures pe = prepare(enroll);
  PreparedFeatures pt = prepare(test);
  SpeakerEmbedding e_emb = embed(pe);

  // Forward pass on the test side, keeping every intermediate.
  const FeatureMatrix &x = pt.feat;
  const std::size_t d = ubm_.dim(), n_mix = ubm_.n_mix();
  Matrix gamma = frame_posteriors(ubm_, *density_, x);
  BaumWelchStats stats = accumulate_stats(ubm_, *density_, x);
  IvectorPosterior post = extract_ivector(tv_, *tv_cache_, stats);
  const Vector &omega = post.mean;

  Vector eta = vec_sub(omega, center_mean_);
  double eta_norm = vec_norm(eta);
  if (eta_norm == 0.0)
    throw ArgumentError("centered i-vector is zero; gradient undefined");
  Vector u = eta;
  for (auto &v : u) v /= eta_norm;

  // Backward through PLDA and length normalization.
  Vector g_u = scorer_->grad_test(e_emb.values, u);
  double proj = vec_dot(u, g_u);
  Vector g_omega(u.size());
  for (std::size_t i = 0; i < u.size(); ++i)
    g_omega[i] = (g_u[i] - u[i] * proj) / eta_norm;

  // omega = L^{-1} b: g_b = L^{-1} g_omega, dS/dN_c = -g_b^T G_c omega,
  // dS/df_c = W_c g_b with W_c = Sigma_c^{-1} T_c.
  SpdFactor l_fac(post.precision);
  Vector g_b = l_fac.solve(g_omega);
  Vector ds_dn(n_mix);
  std::vector<Vector> ds_df(n_mix);
  for (std::size_t c = 0; c < n_mix; ++c) {
    ds_dn[c] = -vec_dot(g_b, mat_vec(tv_cache_->gram(c), omega));
    ds_df[c] = mat_vec(tv_cache_->weighted_block(c), g_b);
  }

  // Per-frame backward: stats -> responsibilities -> log densities -> frame.
  Matrix grad(d, x.frames());
  Vector centered(d), solved(d), dgamma(n_mix), da(n_mix);
  for (std::size_t t = 0; t < x.frames(); ++t) {
    if (!x.frame_kept(t)) continue;  // frozen VAD: zero gradient column

    // Direct dependence of f_c on x_t.
    for (std::size_t c = 0; c < n_mix; ++c) {
      double g = gamma(c, t);
      if (g == 0.0) continue;
      for (std::size_t i = 0; i < d; ++i) grad(i, t) += g * ds_df[c][i];
    }

    // dS/dgamma_ct, then softmax backward to the per-mixture log densities.
    for (std::size_t c = 0; c < n_mix; ++c) {
      double dot = 0.0;
      for (std::size_t i = 0; i < d; ++i)
        dot += ds_df[c][i] * (x.values(i, t) - ubm_.means(c, i));
      dgamma[c] = ds_dn[c] + dot;
    }
    double weighted = 0.0;
    for (std::size_t c = 0; c < n_mix; ++c) weighted += gamma(c, t) * dgamma[c];
    for (std::size_t c = 0; c < n_mix; ++c)
      da[c] = gamma(c, t) * (dgamma[c] - weighted);

    // d log N(x; mu_c, Sigma_c) / dx = -Sigma_c^{-1} (x - mu_c).
    for (std::size_t c = 0; c < n_mix; ++c) {
      if (da[c] == 0.0) continue;
      for (std::size_t i = 0; i < d; ++i)
        centered[i] = x.values(i, t) - ubm_.means(c, i);
      solved = density_->factor(c).solve(centered);
      for (std::size_t i = 0; i < d; ++i) grad(i, t) -= da[c] * solved[i];
    }
  }

  // Frozen CMVN affine: raw-feature gradient picks up the per-dim scale.
  for (std::size_t t = 0; t < x.frames(); ++t)
    for (std::size_t i = 0; i < d; ++i) grad(i, t) *= pt.cmvn_scale[i];
  return grad;
}

XvectorPipeline::XvectorPipeline(FeatureKind kind, XvectorModel model,
                                 Matrix lda, Vector center_mean,
                                 PldaModel plda, PreprocessConfig prep)
    : Pipeline(kind, std::move(center_mean), std::move(plda), prep),
      model_(std::move(model)),
      lda_(std::move(lda)) {}

SpeakerEmbedding XvectorPipeline::embed(const PreparedFeatures &pf) const {
  SpeakerEmbedding xvec = forward_embed(model_, pf.feat);
  SpeakerEmbedding projected = project_lda(lda_, xvec);
  projected.kind = EmbeddingKind::kXvector;
  return center_and_length_normalize(projected, center_mean_);
}

}  // namespace asv
