// asv/plda.h

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

#ifndef ASV_PLDA_H_
#define ASV_PLDA_H_

#include <vector>

#include "asv/ivector.h"
#include "asv/matrix.h"
#include "asv/numerics.h"

namespace asv {

// Simplified PLDA: omega = m + Phi beta + eps, beta ~ N(0, I),
// eps ~ N(0, Sigma) with full Sigma.
struct PldaModel {
  Vector m;      // global bias
  Matrix phi;    // dim x n_factors speaker subspace
  Matrix sigma;  // dim x dim residual covariance, SPD

  std::size_t dim() const { return m.size(); }
  std::size_t n_factors() const { return phi.cols(); }
};

// Precomputes the same-speaker joint precision and the marginal precision;
// per-trial cost is a handful of quadratic forms. Scores are differentiable
// in both embeddings and grad_test() returns the exact derivative with
// respect to the test embedding.
class PldaScorer {
 public:
  explicit PldaScorer(const PldaModel &model);

  // Log likelihood ratio per the same/different-identity hypotheses:
  // ln P(e,t|same) - ln P(e|diff) - ln P(t|diff). Symmetric in (e, t).
  double score(const Vector &enroll, const Vector &test) const;
  Vector grad_test(const Vector &enroll, const Vector &test) const;

  std::size_t dim() const { return m_.size(); }

 private:
  Vector m_;
  SpdFactor marginal_;  // PhiPhi^T + Sigma
  SpdFactor joint_;     // [[G, C], [C, G]] with C = PhiPhi^T
  double logdet_term_;  // logdet G - 0.5 logdet J
};

struct PldaTrainOptions {
  std::size_t n_factors = 0;  // 0 = full rank (dim)
  std::size_t iters = 10;
  uint64_t seed = 0;
  double sigma_floor_fraction = 1e-6;  // eigenvalue floor, fraction of trace/dim
  std::vector<double> *ll_history = nullptr;
};

// EM over per-speaker latent factors with exact multi-session posteriors.
// labels[i] is the speaker index of embeddings[i]; needs >= 2 speakers and a
// speaker with >= 2 sessions.
PldaModel train_plda(const std::vector<SpeakerEmbedding> &embeddings,
                     const std::vector<std::size_t> &labels,
                     const PldaTrainOptions &opts);

// Exact marginal log-likelihood of the labeled embeddings under the model.
double plda_log_likelihood(const PldaModel &model,
                           const std::vector<SpeakerEmbedding> &embeddings,
                           const std::vector<std::size_t> &labels);

// Fisher LDA projection (out_dim x dim); rows orthonormal under the
// within-class scatter metric.
Matrix train_lda(const std::vector<SpeakerEmbedding> &embeddings,
                 const std::vector<std::size_t> &labels, std::size_t out_dim);

SpeakerEmbedding project_lda(const Matrix &projection,
                             const SpeakerEmbedding &emb);

}  // namespace asv

#endif  // ASV_PLDA_H_
