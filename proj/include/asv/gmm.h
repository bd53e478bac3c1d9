// asv/gmm.h

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

#ifndef ASV_GMM_H_
#define ASV_GMM_H_

#include <cstdint>
#include <memory>
#include <vector>

#include "asv/features.h"
#include "asv/matrix.h"
#include "asv/numerics.h"

namespace asv {

enum class CovarianceKind : int32_t { kFull = 0, kDiagonal = 1 };

// Universal background model; immutable once trained.
struct GmmUbm {
  CovarianceKind covariance_kind = CovarianceKind::kFull;
  Vector weights;                  // n_mix, sums to 1
  Matrix means;                    // n_mix x dim
  std::vector<Matrix> covariances; // n_mix of dim x dim (diagonal kind keeps
                                   // off-diagonal zeros)

  std::size_t n_mix() const { return weights.size(); }
  std::size_t dim() const { return means.cols(); }
  // Stable hash of all parameters; binds Baum-Welch stats and the total
  // variability model to the UBM that produced them.
  uint64_t content_hash() const;
};

// Zeroth/first order sufficient statistics of one utterance; first-order
// vectors are centered by the UBM means.
struct BaumWelchStats {
  Vector zeroth;     // n_mix occupancies
  Vector first;      // n_mix * dim, stacked per mixture
  std::size_t dim = 0;
  uint64_t ubm_hash = 0;

  std::size_t n_mix() const { return zeroth.size(); }
  const double *first_block(std::size_t c) const { return first.data() + c * dim; }
  // Stats of concatenated utterances are the sums of per-utterance stats.
  void add(const BaumWelchStats &other);
};

// Per-mixture Cholesky factors and log-density constants; build once per
// model, share across threads (read-only).
class GmmDensityCache {
 public:
  explicit GmmDensityCache(const GmmUbm &ubm);

  const SpdFactor &factor(std::size_t c) const { return factors_[c]; }
  // log w_c + log N(x; mu_c, Sigma_c)
  double log_density(const GmmUbm &ubm, std::size_t c, const double *x) const;

 private:
  std::vector<SpdFactor> factors_;
  Vector log_norms_;  // log w_c - 0.5 logdet - d/2 log(2 pi)
};

// Responsibilities gamma, n_mix x frames; every column a probability simplex.
// Computed for all frames regardless of VAD mask.
Matrix frame_posteriors(const GmmUbm &ubm, const GmmDensityCache &cache,
                        const FeatureMatrix &feat);
Matrix frame_posteriors(const GmmUbm &ubm, const FeatureMatrix &feat);

// Accumulates over VAD-retained frames only; throws if none are retained.
BaumWelchStats accumulate_stats(const GmmUbm &ubm, const GmmDensityCache &cache,
                                const FeatureMatrix &feat);
BaumWelchStats accumulate_stats(const GmmUbm &ubm, const FeatureMatrix &feat);

// Total log-likelihood of the retained frames of every utterance.
double gmm_log_likelihood(const GmmUbm &ubm,
                          const std::vector<FeatureMatrix> &features);

struct UbmTrainOptions {
  std::size_t n_mix = 8;
  CovarianceKind covariance_kind = CovarianceKind::kFull;
  std::size_t iters = 10;
  uint64_t seed = 0;
  std::size_t kmeans_iters = 10;
  // Covariance eigenvalue (full) / entry (diagonal) floor, as a fraction of
  // the average per-dimension data variance.
  double cov_floor_fraction = 1e-4;
  // Per-iteration log-likelihoods, appended during training (init value
  // first); exposed for the EM monotonicity checks.
  std::vector<double> *ll_history = nullptr;
};

// K-means initialization (fixed seed, farthest-point seeding) followed by EM.
// iters = 0 returns the initialization unchanged.
GmmUbm train_ubm(const std::vector<FeatureMatrix> &features,
                 const UbmTrainOptions &opts);

}  // namespace asv

#endif  // ASV_GMM_H_
