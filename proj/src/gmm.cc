// src/gmm.cc

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

#include "asv/gmm.h"

#include <cmath>
#include <cstring>
#include <iostream>
#include <numbers>
#include <random>

#include "asv/error.h"
#include "asv/kernels.h"

namespace asv {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

uint64_t hash_doubles(uint64_t h, const double *v, std::size_t n) {
  // FNV-1a over the raw bytes
  for (std::size_t i = 0; i < n; ++i) {
    uint64_t bits;
    std::memcpy(&bits, &v[i], sizeof bits);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xff;
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

struct FrameView {
  const FeatureMatrix *feat;
  std::size_t t;
};

// All VAD-retained frame columns across the corpus (column copies).
std::vector<Vector> collect_frames(const std::vector<FeatureMatrix> &features) {
  std::vector<Vector> frames;
  for (const auto &f : features)
    for (std::size_t t = 0; t < f.frames(); ++t)
      if (f.frame_kept(t)) frames.push_back(f.values.col(t));
  return frames;
}

}  // namespace

uint64_t GmmUbm::content_hash() const {
  uint64_t h = 0xcbf29ce484222325ull;
  h = hash_doubles(h, weights.data(), weights.size());
  h = hash_doubles(h, means.data(), means.size());
  for (const auto &c : covariances) h = hash_doubles(h, c.data(), c.size());
  return h;
}

void BaumWelchStats::add(const BaumWelchStats &other) {
  if (other.n_mix() != n_mix() || other.dim != dim)
    throw ArgumentError("stats shape mismatch in add");
  if (other.ubm_hash != ubm_hash)
    throw BindingError("cannot add stats from different UBMs");
  kernels::axpy(1.0, other.zeroth.data(), zeroth.data(), zeroth.size());
  kernels::axpy(1.0, other.first.data(), first.data(), first.size());
}

GmmDensityCache::GmmDensityCache(const GmmUbm &ubm) {
  factors_.reserve(ubm.n_mix());
  log_norms_.resize(ubm.n_mix());
  const double d = static_cast<double>(ubm.dim());
  for (std::size_t c = 0; c < ubm.n_mix(); ++c) {
    factors_.emplace_back(ubm.covariances[c]);
    log_norms_[c] = std::log(ubm.weights[c]) - 0.5 * factors_[c].logdet() -
                    0.5 * d * kLog2Pi;
  }
}

double GmmDensityCache::log_density(const GmmUbm &ubm, std::size_t c,
                                    const double *x) const {
  const std::size_t d = ubm.dim();
  Vector centered(d);
  for (std::size_t i = 0; i < d; ++i) centered[i] = x[i] - ubm.means(c, i);
  return log_norms_[c] - 0.5 * factors_[c].quad_form(centered);
}

Matrix frame_posteriors(const GmmUbm &ubm, const GmmDensityCache &cache,
                        const FeatureMatrix &feat) {
  if (feat.dim() != ubm.dim())
    throw ArgumentError("feature dim " + std::to_string(feat.dim()) +
                        " does not match UBM dim " + std::to_string(ubm.dim()));
  const std::size_t m = ubm.n_mix(), n = feat.frames();
  Matrix gamma(m, n);
  Vector logs(m), x(feat.dim());
  for (std::size_t t = 0; t < n; ++t) {
    x = feat.values.col(t);
    for (std::size_t c = 0; c < m; ++c)
      logs[c] = cache.log_density(ubm, c, x.data());
    double lse = logsumexp(logs);
    for (std::size_t c = 0; c < m; ++c) gamma(c, t) = std::exp(logs[c] - lse);
  }
  return gamma;
}

Matrix frame_posteriors(const GmmUbm &ubm, const FeatureMatrix &feat) {
  return frame_posteriors(ubm, GmmDensityCache(ubm), feat);
}

BaumWelchStats accumulate_stats(const GmmUbm &ubm, const GmmDensityCache &cache,
                                const FeatureMatrix &feat) {
  if (feat.kept_frames() == 0)
    throw EmptyInputError("no retained frames for stats accumulation");
  Matrix gamma = frame_posteriors(ubm, cache, feat);
  const std::size_t m = ubm.n_mix(), d = ubm.dim();
  BaumWelchStats stats;
  stats.zeroth = Vector(m, 0.0);
  stats.first = Vector(m * d, 0.0);
  stats.dim = d;
  stats.ubm_hash = ubm.content_hash();
  Vector x(d);
  for (std::size_t t = 0; t < feat.frames(); ++t) {
    if (!feat.frame_kept(t)) continue;
    x = feat.values.col(t);
    for (std::size_t c = 0; c < m; ++c) {
      double g = gamma(c, t);
      stats.zeroth[c] += g;
      double *f = stats.first.data() + c * d;
      for (std::size_t i = 0; i < d; ++i)
        f[i] += g * (x[i] - ubm.means(c, i));
    }
  }
  return stats;
}

BaumWelchStats accumulate_stats(const GmmUbm &ubm, const FeatureMatrix &feat) {
  return accumulate_stats(ubm, GmmDensityCache(ubm), feat);
}

double gmm_log_likelihood(const GmmUbm &ubm,
                          const std::vector<FeatureMatrix> &features) {
  GmmDensityCache cache(ubm);
  double total = 0.0;
  Vector logs(ubm.n_mix());
  for (const auto &feat : features) {
    for (std::size_t t = 0; t < feat.frames(); ++t) {
      if (!feat.frame_kept(t)) continue;
      Vector x = feat.values.col(t);
      for (std::size_t c = 0; c < ubm.n_mix(); ++c)
        logs[c] = cache.log_density(ubm, c, x.data());
      total += logsumexp(logs);
    }
  }
  return total;
}

namespace {

// Farthest-point seeding + Lloyd iterations; returns hard assignments.
std::vector<std::size_t> kmeans(const std::vector<Vector> &frames,
                                std::size_t k, std::size_t iters, uint64_t seed,
                                std::vector<Vector> *centers_out) {
  std::mt19937_64 rng(seed);
  const std::size_t n = frames.size(), d = frames[0].size();
  std::vector<Vector> centers;
  centers.push_back(frames[rng() % n]);
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  while (centers.size() < k) {
    std::size_t far = 0;
    for (std::size_t i = 0; i < n; ++i) {
      Vector diff = vec_sub(frames[i], centers.back());
      dist[i] = std::min(dist[i], vec_dot(diff, diff));
      if (dist[i] > dist[far]) far = i;
    }
    centers.push_back(frames[far]);
  }
  std::vector<std::size_t> assign(n, 0);
  for (std::size_t it = 0; it < iters; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        Vector diff = vec_sub(frames[i], centers[c]);
        double e = vec_dot(diff, diff);
        if (e < best) {
          best = e;
          assign[i] = c;
        }
      }
    }
    std::vector<Vector> sums(k, Vector(d, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      kernels::axpy(1.0, frames[i].data(), sums[assign[i]].data(), d);
      counts[assign[i]]++;
    }
    for (std::size_t c = 0; c < k; ++c)
      if (counts[c] > 0) centers[c] = vec_scale(sums[c], 1.0 / counts[c]);
  }
  *centers_out = centers;
  return assign;
}

// Average per-dimension variance of the pooled data, used for the floor.
double average_variance(const std::vector<Vector> &frames) {
  const std::size_t n = frames.size(), d = frames[0].size();
  Vector mean(d, 0.0);
  for (const auto &f : frames) kernels::axpy(1.0, f.data(), mean.data(), d);
  for (double &m : mean) m /= double(n);
  double var = 0.0;
  for (const auto &f : frames)
    for (std::size_t i = 0; i < d; ++i)
      var += (f[i] - mean[i]) * (f[i] - mean[i]);
  return var / double(n * d);
}

Matrix floor_covariance(const Matrix &cov, CovarianceKind kind, double floor) {
  if (kind == CovarianceKind::kDiagonal) {
    Matrix out(cov.rows(), cov.cols());
    for (std::size_t i = 0; i < cov.rows(); ++i)
      out(i, i) = std::max(cov(i, i), floor);
    return out;
  }
  return floor_spd(cov, floor);
}

}  // namespace

GmmUbm train_ubm(const std::vector<FeatureMatrix> &features,
                 const UbmTrainOptions &opts) {
  std::vector<Vector> frames = collect_frames(features);
  const std::size_t k = opts.n_mix;
  if (frames.empty()) throw TrainingError("no retained frames in training data");
  const std::size_t d = frames[0].size();
  if (frames.size() < 10 * k * d)
    throw TrainingError("insufficient data: " + std::to_string(frames.size()) +
                        " frames < 10 * n_mix * dim = " +
                        std::to_string(10 * k * d));

  const double floor = opts.cov_floor_fraction * average_variance(frames);

  // --- initialization: k-means, then cluster sample statistics ---
  std::vector<Vector> centers;
  std::vector<std::size_t> assign =
      kmeans(frames, k, opts.kmeans_iters, opts.seed, &centers);

  GmmUbm ubm;
  ubm.covariance_kind = opts.covariance_kind;
  ubm.weights = Vector(k, 0.0);
  ubm.means = Matrix(k, d);
  ubm.covariances.assign(k, Matrix(d, d));
  {
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < frames.size(); ++i) counts[assign[i]]++;
    for (std::size_t c = 0; c < k; ++c) {
      ubm.weights[c] = double(counts[c]) / double(frames.size());
      for (std::size_t i = 0; i < d; ++i) ubm.means(c, i) = centers[c][i];
    }
    std::vector<Matrix> scatter(k, Matrix(d, d));
    for (std::size_t i = 0; i < frames.size(); ++i) {
      std::size_t c = assign[i];
      for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = a; b < d; ++b)
          scatter[c](a, b) += (frames[i][a] - centers[c][a]) *
                              (frames[i][b] - centers[c][b]);
    }
    for (std::size_t c = 0; c < k; ++c) {
      Matrix cov(d, d);
      double denom = std::max<double>(counts[c], 1);
      for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = a; b < d; ++b)
          cov(a, b) = cov(b, a) = scatter[c](a, b) / denom;
      if (opts.covariance_kind == CovarianceKind::kDiagonal)
        for (std::size_t a = 0; a < d; ++a)
          for (std::size_t b = 0; b < d; ++b)
            if (a != b) cov(a, b) = 0.0;
      ubm.covariances[c] = floor_covariance(cov, opts.covariance_kind, floor);
      if (ubm.weights[c] <= 0.0) ubm.weights[c] = 1e-10;  // renormalized below
    }
    double wsum = 0.0;
    for (double w : ubm.weights) wsum += w;
    for (double &w : ubm.weights) w /= wsum;
  }

  if (opts.ll_history)
    opts.ll_history->push_back(gmm_log_likelihood(ubm, features));

  // --- EM iterations ---
  Vector logs(k);
  for (std::size_t it = 0; it < opts.iters; ++it) {
    GmmDensityCache cache(ubm);
    Vector occ(k, 0.0);
    Matrix first(k, d);
    std::vector<Matrix> second(k, Matrix(d, d));
    for (const auto &f : frames) {
      for (std::size_t c = 0; c < k; ++c)
        logs[c] = cache.log_density(ubm, c, f.data());
      double lse = logsumexp(logs);
      for (std::size_t c = 0; c < k; ++c) {
        double g = std::exp(logs[c] - lse);
        occ[c] += g;
        kernels::axpy(g, f.data(), first.row_ptr(c), d);
        for (std::size_t a = 0; a < d; ++a)
          kernels::axpy(g * f[a], f.data() + a, second[c].row_ptr(a) + a,
                        d - a);
      }
    }
    // collapsed mixtures are re-seeded from the heaviest one
    std::size_t heaviest = 0;
    for (std::size_t c = 1; c < k; ++c)
      if (occ[c] > occ[heaviest]) heaviest = c;
    for (std::size_t c = 0; c < k; ++c) {
      if (occ[c] >= 1.0) continue;
      std::cerr << "train_ubm: mixture " << c << " collapsed (occupancy "
                << occ[c] << "), re-seeding from mixture " << heaviest << "\n";
      occ[c] = occ[heaviest] / 2.0;
      occ[heaviest] /= 2.0;
      for (std::size_t i = 0; i < d; ++i) {
        first(c, i) = first(heaviest, i) / 2.0 * (1.0 + 1e-3 * double(c + 1));
        first(heaviest, i) /= 2.0;
      }
      second[c] = scale(second[heaviest], 0.5);
      second[heaviest] = scale(second[heaviest], 0.5);
    }
    double total = 0.0;
    for (std::size_t c = 0; c < k; ++c) total += occ[c];
    for (std::size_t c = 0; c < k; ++c) {
      ubm.weights[c] = occ[c] / total;
      for (std::size_t i = 0; i < d; ++i)
        ubm.means(c, i) = first(c, i) / occ[c];
      Matrix cov(d, d);
      for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = a; b < d; ++b) {
          double s = second[c](a, b) / occ[c] -
                     ubm.means(c, a) * ubm.means(c, b);
          if (opts.covariance_kind == CovarianceKind::kDiagonal && a != b)
            s = 0.0;
          cov(a, b) = cov(b, a) = s;
        }
      ubm.covariances[c] = floor_covariance(cov, opts.covariance_kind, floor);
    }
    if (opts.ll_history)
      opts.ll_history->push_back(gmm_log_likelihood(ubm, features));
  }
  return ubm;
}

}  // namespace asv
