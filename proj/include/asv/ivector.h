// asv/ivector.h

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

#ifndef ASV_IVECTOR_H_
#define ASV_IVECTOR_H_

#include <cstdint>
#include <vector>

#include "asv/gmm.h"
#include "asv/matrix.h"
#include "asv/numerics.h"

namespace asv {

enum class EmbeddingKind : int32_t { kIvector = 0, kXvector = 1 };

struct SpeakerEmbedding {
  EmbeddingKind kind = EmbeddingKind::kIvector;
  Vector values;
  bool normalized = false;
};

// Total variability matrix, (n_mix * dim) rows by ivec_dim columns, bound to
// the UBM that produced the training stats.
struct TotalVariabilityModel {
  Matrix t_matrix;
  std::size_t ivec_dim = 0;
  std::size_t n_mix = 0;
  std::size_t dim = 0;
  uint64_t ubm_hash = 0;

  // dim x ivec_dim block of rows for mixture c.
  Matrix mixture_block(std::size_t c) const;
};

// Gaussian posterior of the latent factor: precision and mean.
struct IvectorPosterior {
  Matrix precision;  // ivec_dim x ivec_dim, SPD
  Vector mean;       // the i-vector
};

// Precomputed per-mixture projections shared by extraction, training and the
// attack gradient: weighted_block(c) = Sigma_c^{-1} T_c and
// gram(c) = T_c^T Sigma_c^{-1} T_c.
class TvCache {
 public:
  TvCache(const GmmUbm &ubm, const GmmDensityCache &density,
          const TotalVariabilityModel &tv);

  const Matrix &weighted_block(std::size_t c) const { return weighted_[c]; }
  const Matrix &gram(std::size_t c) const { return gram_[c]; }
  std::size_t n_mix() const { return weighted_.size(); }
  std::size_t ivec_dim() const { return ivec_dim_; }

  // L_i = I + sum_c N_c gram(c); b_i = sum_c weighted_block(c)^T f_c.
  Matrix precision(const BaumWelchStats &stats) const;
  Vector projected_stats(const BaumWelchStats &stats) const;

 private:
  std::vector<Matrix> weighted_, gram_;
  std::size_t ivec_dim_;
};

IvectorPosterior extract_ivector(const TotalVariabilityModel &tv,
                                 const TvCache &cache,
                                 const BaumWelchStats &stats);
// Convenience overload that builds the caches (slow in loops).
IvectorPosterior extract_ivector(const GmmUbm &ubm,
                                 const TotalVariabilityModel &tv,
                                 const BaumWelchStats &stats);

struct TvTrainOptions {
  std::size_t ivec_dim = 16;
  std::size_t iters = 5;
  uint64_t seed = 0;
  // Marginal log-likelihood of the stats (up to a T-independent constant),
  // appended per iteration starting with the initialization.
  std::vector<double> *objective_history = nullptr;
};

TotalVariabilityModel train_total_variability(
    const GmmUbm &ubm, const std::vector<BaumWelchStats> &stats_list,
    const TvTrainOptions &opts);

// sum_i 0.5 * (b_i^T L_i^{-1} b_i - logdet L_i); the T-dependent part of the
// stats marginal likelihood, used for EM monotonicity checks.
double tv_objective(const GmmUbm &ubm, const TotalVariabilityModel &tv,
                    const std::vector<BaumWelchStats> &stats_list);

// (omega - mean) / ||omega - mean||; idempotent on the normalize step.
SpeakerEmbedding center_and_length_normalize(const SpeakerEmbedding &emb,
                                             const Vector &mean);

// Mean of raw embeddings, for the centering step.
Vector embedding_mean(const std::vector<SpeakerEmbedding> &embs);

}  // namespace asv

#endif  // ASV_IVECTOR_H_
