// tests/acceptance.cc

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

// Acceptance gate: one pass/fail line per criterion, nonzero exit on any
// failure. Criteria 1-3 and 6-10 run on small synthetic systems; criteria
// 4, 5, 10 (transfer half) and 11 share one desk-scale waveform benchmark.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "asv/attack.h"
#include "asv/corpus.h"
#include "asv/evaluation.h"
#include "asv/features.h"
#include "asv/gmm.h"
#include "asv/ivector.h"
#include "asv/matrix.h"
#include "asv/pipeline.h"
#include "asv/plda.h"
#include "asv/wav.h"
#include "asv/xvector.h"

using namespace asv;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int num, const char *name, bool pass, const std::string &detail) {
  std::printf("%s  criterion %2d  %-24s %s\n", pass ? "PASS" : "FAIL", num,
              name, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch())
      .count();
}

std::string fmt(const char *format, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, format);
  std::vsnprintf(buf, sizeof buf, format, ap);
  va_end(ap);
  return buf;
}

// ---------------------------------------------------------------------------
// Small feature-mode i-vector system for the gradient / FGSM criteria.

struct TestSystem {
  std::unique_ptr<IvectorPipeline> pipeline;
  SyntheticCorpus corpus;
};

TestSystem build_feature_system(uint64_t seed) {
  SyntheticCorpusSpec spec;
  spec.n_speakers = 8;
  spec.utterances_per_speaker = 3;
  spec.frames_per_utterance = 60;
  spec.feature_dim = 4;
  spec.between_spread = 2.0;
  spec.within_spread = 1.0;
  spec.seed = seed;
  TestSystem sys;
  sys.corpus = gen_synthetic_corpus(spec);

  PreprocessConfig prep;
  std::vector<FeatureMatrix> prepped;
  for (auto &u : sys.corpus.utterances) {
    FeatureMatrix f = u.features;
    f.vad_mask = energy_vad(f, prep.vad_margin_sigmas);
    prepped.push_back(apply_cmvn(f));
  }

  UbmTrainOptions uopts;
  uopts.n_mix = 4;
  uopts.iters = 4;
  uopts.seed = seed;
  GmmUbm ubm = train_ubm(prepped, uopts);

  std::vector<BaumWelchStats> stats;
  for (const auto &f : prepped) stats.push_back(accumulate_stats(ubm, f));

  TvTrainOptions topts;
  topts.ivec_dim = 4;
  topts.iters = 4;
  topts.seed = seed;
  TotalVariabilityModel tv = train_total_variability(ubm, stats, topts);

  std::vector<SpeakerEmbedding> raw;
  for (const auto &st : stats) {
    SpeakerEmbedding e;
    e.kind = EmbeddingKind::kIvector;
    e.values = extract_ivector(ubm, tv, st).mean;
    raw.push_back(e);
  }
  Vector mean = embedding_mean(raw);
  std::vector<SpeakerEmbedding> normed;
  std::vector<std::size_t> labels;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    normed.push_back(center_and_length_normalize(raw[i], mean));
    labels.push_back(sys.corpus.utterances[i].speaker);
  }
  PldaTrainOptions popts;
  popts.n_factors = 3;
  popts.iters = 8;
  PldaModel plda = train_plda(normed, labels, popts);

  sys.pipeline = std::make_unique<IvectorPipeline>(FeatureKind::kMfcc, ubm, tv,
                                                   mean, plda, prep);
  return sys;
}

double feature_std(const FeatureMatrix &f) {
  double mean = 0.0, var = 0.0;
  for (std::size_t i = 0; i < f.values.size(); ++i)
    mean += f.values.data()[i] / double(f.values.size());
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    double c = f.values.data()[i] - mean;
    var += c * c / double(f.values.size());
  }
  return std::sqrt(var);
}

// ---------------------------------------------------------------------------
// Independent linear-algebra oracles (elimination, not Cholesky).

Vector elimination_solve(Matrix a, Vector b) {
  const std::size_t n = a.rows();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
    for (std::size_t c = 0; c < n; ++c) std::swap(a(col, c), a(piv, c));
    std::swap(b[col], b[piv]);
    double p = a(col, col);
    for (std::size_t c = 0; c < n; ++c) a(col, c) /= p;
    b[col] /= p;
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      double f = a(r, col);
      for (std::size_t c = 0; c < n; ++c) a(r, c) -= f * a(col, c);
      b[r] -= f * b[col];
    }
  }
  return b;
}

Matrix gj_inverse(Matrix a, double *det_out = nullptr) {
  const std::size_t n = a.rows();
  Matrix inv = Matrix::identity(n);
  double det = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
    if (piv != col) {
      for (std::size_t c = 0; c < n; ++c) {
        std::swap(a(col, c), a(piv, c));
        std::swap(inv(col, c), inv(piv, c));
      }
      det = -det;
    }
    double p = a(col, col);
    det *= p;
    for (std::size_t c = 0; c < n; ++c) {
      a(col, c) /= p;
      inv(col, c) /= p;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      double f = a(r, col);
      for (std::size_t c = 0; c < n; ++c) {
        a(r, c) -= f * a(col, c);
        inv(r, c) -= f * inv(col, c);
      }
    }
  }
  if (det_out) *det_out = det;
  return inv;
}

double gaussian_log_density(const Vector &x, const Vector &mean,
                            const Matrix &cov) {
  const std::size_t n = x.size();
  double det = 0.0;
  Matrix inv = gj_inverse(cov, &det);
  double quad = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      quad += (x[i] - mean[i]) * inv(i, j) * (x[j] - mean[j]);
  return -0.5 * (double(n) * std::log(2.0 * M_PI) + std::log(det) + quad);
}

// Brute-force EER: enumerate every midpoint and sentinel threshold, find the
// FAR/FRR crossing, interpolate linearly. Independent of compute_eer.
EerResult brute_force_eer(const std::vector<ScoredTrial> &trials) {
  std::vector<double> scores;
  for (const auto &t : trials) scores.push_back(t.score);
  std::sort(scores.begin(), scores.end());
  scores.erase(std::unique(scores.begin(), scores.end()), scores.end());
  std::vector<double> thresholds;
  thresholds.push_back(scores.front() - 1.0);
  for (std::size_t i = 0; i + 1 < scores.size(); ++i)
    thresholds.push_back(0.5 * (scores[i] + scores[i + 1]));
  thresholds.push_back(scores.back() + 1.0);

  for (std::size_t i = 0; i + 1 < thresholds.size(); ++i) {
    Rates r0 = compute_rates(trials, thresholds[i]);
    Rates r1 = compute_rates(trials, thresholds[i + 1]);
    double d0 = r0.far - r0.frr, d1 = r1.far - r1.frr;
    if (d0 >= 0.0 && d1 <= 0.0) {
      if (d0 == d1) return {0.5 * (r0.far + r0.frr), thresholds[i]};
      double alpha = d0 / (d0 - d1);
      double far = r0.far + alpha * (r1.far - r0.far);
      double frr = r0.frr + alpha * (r1.frr - r0.frr);
      return {0.5 * (far + frr),
              thresholds[i] + alpha * (thresholds[i + 1] - thresholds[i])};
    }
  }
  Rates last = compute_rates(trials, thresholds.back());
  return {0.5 * (last.far + last.frr), thresholds.back()};
}

// Random GMM / T / stats generators for the dense i-vector oracle.
GmmUbm random_ubm(std::size_t n_mix, std::size_t dim, std::mt19937_64 &rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  GmmUbm ubm;
  ubm.weights = Vector(n_mix, 1.0 / double(n_mix));
  ubm.means = Matrix(n_mix, dim);
  for (std::size_t i = 0; i < ubm.means.size(); ++i)
    ubm.means.data()[i] = d(rng);
  for (std::size_t c = 0; c < n_mix; ++c) {
    Matrix m(dim, dim);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = 0.3 * d(rng);
    Matrix cov = matmul_at_b(m, m);
    for (std::size_t i = 0; i < dim; ++i) cov(i, i) += 1.0;
    ubm.covariances.push_back(cov);
  }
  return ubm;
}

TotalVariabilityModel random_tv(const GmmUbm &ubm, std::size_t ivec_dim,
                                std::mt19937_64 &rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  TotalVariabilityModel tv;
  tv.ivec_dim = ivec_dim;
  tv.n_mix = ubm.n_mix();
  tv.dim = ubm.dim();
  tv.ubm_hash = ubm.content_hash();
  tv.t_matrix = Matrix(tv.n_mix * tv.dim, ivec_dim);
  for (std::size_t i = 0; i < tv.t_matrix.size(); ++i)
    tv.t_matrix.data()[i] = d(rng);
  return tv;
}

BaumWelchStats random_stats(const GmmUbm &ubm, std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::normal_distribution<double> d(0.0, 1.0);
  BaumWelchStats st;
  st.dim = ubm.dim();
  st.ubm_hash = ubm.content_hash();
  st.zeroth = Vector(ubm.n_mix());
  st.first = Vector(ubm.n_mix() * ubm.dim());
  for (std::size_t c = 0; c < ubm.n_mix(); ++c) st.zeroth[c] = u(rng);
  for (std::size_t i = 0; i < st.first.size(); ++i) st.first[i] = d(rng);
  return st;
}

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64 &rng,
                     double s = 1.0) {
  std::normal_distribution<double> d(0.0, s);
  Matrix m(r, c);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = d(rng);
  return m;
}

PldaModel random_plda_model(std::size_t dim, std::size_t q,
                            std::mt19937_64 &rng) {
  PldaModel model;
  model.m = Vector(dim);
  std::normal_distribution<double> d(0.0, 1.0);
  for (auto &v : model.m) v = d(rng);
  model.phi = random_matrix(dim, q, rng, 0.7);
  Matrix a = random_matrix(dim, dim, rng, 0.4);
  model.sigma = matmul_at_b(a, a);
  for (std::size_t i = 0; i < dim; ++i) model.sigma(i, i) += 0.8;
  return model;
}

// Direct density-ratio oracle for the PLDA score.
double oracle_plda_score(const PldaModel &model, const Vector &e,
                         const Vector &t) {
  const std::size_t d = model.dim();
  Matrix cross = matmul(model.phi, transpose(model.phi));
  Matrix marg = add(cross, model.sigma);
  Matrix joint(2 * d, 2 * d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      joint(i, j) = marg(i, j);
      joint(d + i, d + j) = marg(i, j);
      joint(i, d + j) = cross(i, j);
      joint(d + i, j) = cross(i, j);
    }
  Vector xy(2 * d), mm(2 * d);
  for (std::size_t i = 0; i < d; ++i) {
    xy[i] = e[i];
    xy[d + i] = t[i];
    mm[i] = model.m[i];
    mm[d + i] = model.m[i];
  }
  return gaussian_log_density(xy, mm, joint) -
         gaussian_log_density(e, model.m, marg) -
         gaussian_log_density(t, model.m, marg);
}

// ---------------------------------------------------------------------------
// Desk-scale waveform benchmark shared by criteria 4, 5, 10 and 11.
//
// 20 speakers x 4 utterances of 4 s of filtered noise. Three systems:
//  - MFCC i-vector trained with noise augmentation (two Gaussian-noise copies
//    per utterance, sigma 0.015); the clean-trained variant scores round-trip
//    perturbations as broadband noise and its transfer FAR never rises.
//  - LPMS i-vector trained clean (attack source for the feature-hop arrows).
//  - MFCC x-vector: TDNN trained on the augmented features, LDA + PLDA
//    backend trained on the clean features (the augmented backend collapses
//    at this corpus size).

struct DeskBench {
  SyntheticCorpus corpus;
  FeatureConfig mfcc_cfg, lpms_cfg;
  std::vector<FeatureMatrix> mfcc, lpms;  // clean, corpus order
  std::vector<PhaseMatrix> phase;
  std::vector<std::size_t> labels;
  std::map<std::string, std::size_t> index;  // utterance id -> position

  std::unique_ptr<IvectorPipeline> mfcc_ivec;
  std::unique_ptr<IvectorPipeline> lpms_ivec;
  std::unique_ptr<XvectorPipeline> xvec;

  double synth_seconds = 0.0;  // corpus, WAV round trip, feature extraction
  double ivec_train_seconds = 0.0;
  double xvec_train_seconds = 0.0;
};

std::vector<FeatureMatrix> prepare_all(const std::vector<FeatureMatrix> &in,
                                       const PreprocessConfig &prep) {
  std::vector<FeatureMatrix> out;
  for (const auto &u : in) {
    FeatureMatrix f = u;
    if (prep.apply_vad && f.vad_mask.empty())
      f.vad_mask = energy_vad(f, prep.vad_margin_sigmas);
    if (prep.apply_cmvn) f = apply_cmvn(f);
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<SpeakerEmbedding> raw_ivectors(
    const GmmUbm &ubm, const TotalVariabilityModel &tv,
    const std::vector<FeatureMatrix> &feats) {
  std::vector<SpeakerEmbedding> out;
  for (const auto &f : feats) {
    SpeakerEmbedding e;
    e.kind = EmbeddingKind::kIvector;
    e.values = extract_ivector(ubm, tv, accumulate_stats(ubm, f)).mean;
    out.push_back(std::move(e));
  }
  return out;
}

std::unique_ptr<IvectorPipeline> train_ivector_system(
    FeatureKind kind, const std::vector<FeatureMatrix> &feats,
    const std::vector<std::size_t> &labels, std::size_t n_mix,
    std::size_t ubm_iters, std::size_t tv_iters, uint64_t seed) {
  PreprocessConfig prep;
  auto prepped = prepare_all(feats, prep);

  UbmTrainOptions uopts;
  uopts.n_mix = n_mix;
  uopts.iters = ubm_iters;
  uopts.seed = seed;
  uopts.covariance_kind = CovarianceKind::kDiagonal;
  GmmUbm ubm = train_ubm(prepped, uopts);

  std::vector<BaumWelchStats> stats;
  for (const auto &f : prepped) stats.push_back(accumulate_stats(ubm, f));
  TvTrainOptions topts;
  topts.ivec_dim = 32;
  topts.iters = tv_iters;
  topts.seed = seed;
  TotalVariabilityModel tv = train_total_variability(ubm, stats, topts);

  auto raw = raw_ivectors(ubm, tv, prepped);
  Vector mean = embedding_mean(raw);
  std::vector<SpeakerEmbedding> normed;
  for (const auto &e : raw)
    normed.push_back(center_and_length_normalize(e, mean));
  PldaTrainOptions popts;
  popts.n_factors = 16;
  popts.iters = 10;
  PldaModel plda = train_plda(normed, labels, popts);

  return std::make_unique<IvectorPipeline>(kind, std::move(ubm), std::move(tv),
                                           std::move(mean), std::move(plda),
                                           prep);
}

DeskBench build_desk_bench(const fs::path &tmp) {
  DeskBench b;
  double t0 = now_seconds();

  SyntheticCorpusSpec spec;
  spec.n_speakers = 20;
  spec.utterances_per_speaker = 4;
  spec.between_spread = 3.0;
  spec.within_spread = 0.3;
  spec.seed = 11;
  spec.waveform_mode = true;
  spec.utterance_seconds = 4.0;
  spec.sample_rate = 16000;
  b.corpus = gen_synthetic_corpus(spec);

  b.mfcc_cfg = FeatureConfig::mfcc_default();
  b.lpms_cfg = FeatureConfig::lpms_default();

  fs::create_directories(tmp);

  // WAV round trip pins the 16-bit quantization the file-based tooling sees.
  std::vector<Waveform> clean;
  for (const auto &u : b.corpus.utterances) {
    std::string path = (tmp / (u.id + ".wav")).string();
    write_wav(path, u.wav);
    clean.push_back(read_wav(path));
  }

  // Noise augmentation: one RNG stream over the utterances in corpus order,
  // two copies each, also quantized through the WAV container.
  std::mt19937_64 noise_rng(271);
  std::normal_distribution<double> noise(0.0, 0.015);
  std::vector<FeatureMatrix> mfcc_aug;
  std::vector<std::size_t> labels_aug;
  for (std::size_t i = 0; i < b.corpus.utterances.size(); ++i) {
    const Utterance &u = b.corpus.utterances[i];
    b.labels.push_back(u.speaker);
    b.index[u.id] = i;
    b.mfcc.push_back(extract_mfcc(clean[i], b.mfcc_cfg));
    auto [lp, ph] = extract_lpms(clean[i], b.lpms_cfg);
    b.lpms.push_back(std::move(lp));
    b.phase.push_back(std::move(ph));

    mfcc_aug.push_back(b.mfcc.back());
    labels_aug.push_back(u.speaker);
    for (int c = 0; c < 2; ++c) {
      Waveform n = clean[i];
      for (auto &s : n.samples) s += noise(noise_rng);
      std::string path = (tmp / (u.id + "n" + std::to_string(c) + ".wav"))
                             .string();
      write_wav(path, n);
      mfcc_aug.push_back(extract_mfcc(read_wav(path), b.mfcc_cfg));
      labels_aug.push_back(u.speaker);
    }
  }
  double t1 = now_seconds();
  b.synth_seconds = t1 - t0;

  b.mfcc_ivec = train_ivector_system(FeatureKind::kMfcc, mfcc_aug, labels_aug,
                                     32, 8, 8, 11);
  b.lpms_ivec = train_ivector_system(FeatureKind::kLpms, b.lpms, b.labels, 16,
                                     6, 6, 11);
  double t2 = now_seconds();
  b.ivec_train_seconds = t2 - t1;

  PreprocessConfig prep;
  auto aug_prepped = prepare_all(mfcc_aug, prep);
  std::vector<TrainRecord> records;
  for (std::size_t i = 0; i < aug_prepped.size(); ++i) {
    TrainRecord r;
    r.features = aug_prepped[i];
    r.speaker_label = labels_aug[i];
    records.push_back(std::move(r));
  }
  XvectorArch arch;
  arch.input_dim = aug_prepped.front().dim();
  arch.hidden_dim = 64;
  arch.embed_dim = 32;
  arch.segment_hidden_dim = 32;
  XvectorTrainOptions xopts;
  xopts.epochs = 60;
  xopts.lr = 0.008;
  xopts.seed = 1;
  XvectorModel model = train_xvector(records, arch, xopts);

  // Backend on the clean features: the network generalizes from the
  // augmented set, the Gaussian backend does not.
  auto clean_prepped = prepare_all(b.mfcc, prep);
  std::vector<SpeakerEmbedding> embs;
  for (const auto &f : clean_prepped) embs.push_back(forward_embed(model, f));
  Matrix lda = train_lda(embs, b.labels, 16);
  std::vector<SpeakerEmbedding> proj;
  for (const auto &e : embs) proj.push_back(project_lda(lda, e));
  Vector mean = embedding_mean(proj);
  std::vector<SpeakerEmbedding> normed;
  for (const auto &e : proj)
    normed.push_back(center_and_length_normalize(e, mean));
  PldaTrainOptions popts;
  popts.n_factors = 12;
  popts.iters = 10;
  PldaModel plda = train_plda(normed, b.labels, popts);
  b.xvec = std::make_unique<XvectorPipeline>(FeatureKind::kMfcc,
                                             std::move(model), std::move(lda),
                                             std::move(mean), std::move(plda),
                                             prep);
  b.xvec_train_seconds = now_seconds() - t2;
  return b;
}

std::vector<CampaignTrial> make_campaign_trials(const DeskBench &b,
                                                AttackSetting setting) {
  const bool lpms_source = setting == AttackSetting::kCrossFeature ||
                           setting == AttackSetting::kCrossFeatureModel;
  const auto &src = lpms_source ? b.lpms : b.mfcc;
  std::vector<CampaignTrial> trials;
  for (const auto &t : b.corpus.trials) {
    CampaignTrial c;
    c.trial_id = t.enroll_id + ":" + t.test_id;
    c.label = t.target ? TrialLabel::kTarget : TrialLabel::kNontarget;
    std::size_t e = b.index.at(t.enroll_id), x = b.index.at(t.test_id);
    c.enroll_source = src[e];
    c.test_source = src[x];
    if (lpms_source) c.test_phase = b.phase[x];
    if (setting != AttackSetting::kWhiteBox) c.enroll_target = b.mfcc[e];
    trials.push_back(std::move(c));
  }
  return trials;
}

// White-box campaign over the given source system and feature list.
std::vector<CampaignTrial> make_white_box_trials(
    const DeskBench &b, const std::vector<FeatureMatrix> &src,
    bool with_phase) {
  std::vector<CampaignTrial> trials;
  for (const auto &t : b.corpus.trials) {
    CampaignTrial c;
    c.trial_id = t.enroll_id + ":" + t.test_id;
    c.label = t.target ? TrialLabel::kTarget : TrialLabel::kNontarget;
    std::size_t e = b.index.at(t.enroll_id), x = b.index.at(t.test_id);
    c.enroll_source = src[e];
    c.test_source = src[x];
    if (with_phase) c.test_phase = b.phase[x];
    trials.push_back(std::move(c));
  }
  return trials;
}

struct CampaignResult {
  std::vector<CampaignRecord> records;
  std::vector<CampaignSummaryRow> rows;
};

CampaignResult run_one(const DeskBench &b, const IvectorPipeline &source,
                       const Pipeline &target, AttackSetting setting,
                       const std::vector<CampaignTrial> &trials,
                       const std::vector<double> &epsilons,
                       const FeatureConfig &source_cfg,
                       const FeatureConfig &target_cfg, const char *name) {
  (void)b;
  CampaignResult r;
  r.records = run_campaign(source, target, setting, trials, epsilons,
                           source_cfg, target_cfg);
  r.rows = summarize_campaign(r.records, name);
  return r;
}

const CampaignSummaryRow *row_at(const std::vector<CampaignSummaryRow> &rows,
                                 double eps) {
  for (const auto &r : rows)
    if (r.epsilon == eps) return &r;
  return nullptr;
}

double best_far(const std::vector<CampaignSummaryRow> &rows) {
  double best = 0.0;
  for (const auto &r : rows)
    if (r.epsilon > 0.0) best = std::max(best, r.far_at_clean_threshold);
  return best;
}

}  // namespace

int main() {
  fs::path tmp = fs::temp_directory_path() / "asv-acceptance";
  fs::remove_all(tmp);

  // -------------------------------------------------------------- criterion 1
  {
    double t0 = now_seconds();
    std::size_t pairs = 0, entries = 0;
    double worst = 0.0;
    bool ok = true;
    const double h = 1e-4;
    for (uint64_t seed = 41; seed <= 45; ++seed) {
      TestSystem sys = build_feature_system(seed);
      const IvectorPipeline &p = *sys.pipeline;
      std::mt19937_64 rng(seed * 977);
      const auto &utts = sys.corpus.utterances;
      std::uniform_int_distribution<std::size_t> pick(0, utts.size() - 1);
      for (int trial = 0; trial < 4; ++trial, ++pairs) {
        const FeatureMatrix &enroll = utts[pick(rng)].features;
        const FeatureMatrix &test = utts[pick(rng)].features;
        Matrix grad = p.score_gradient(enroll, test);
        PreparedFeatures enroll_pf = p.prepare(enroll);
        PreparedFeatures clean_pf = p.prepare(test);
        std::uniform_int_distribution<std::size_t> pr(0, test.dim() - 1);
        std::uniform_int_distribution<std::size_t> pc(0, test.frames() - 1);
        std::size_t checked = 0;
        for (int rep = 0; rep < 40 && checked < 8; ++rep) {
          std::size_t r = pr(rng), c = pc(rng);
          if (std::abs(grad(r, c)) <= 1e-8) continue;
          PreparedFeatures up = clean_pf, dn = clean_pf;
          up.feat.values(r, c) += h * clean_pf.cmvn_scale[r];
          dn.feat.values(r, c) -= h * clean_pf.cmvn_scale[r];
          double fd = (p.score_prepared(enroll_pf, up) -
                       p.score_prepared(enroll_pf, dn)) /
                      (2.0 * h);
          double rel = std::abs(grad(r, c) - fd) / std::abs(fd);
          worst = std::max(worst, rel);
          if (rel > 1e-4) ok = false;
          ++checked;
          ++entries;
        }
      }
    }
    double dt = now_seconds() - t0;
    ok = ok && pairs == 20 && entries >= 100 && dt <= 120.0;
    report(1, "gradient-oracle", ok,
           fmt("%zu pairs, %zu entries, worst rel %.2e, %.1fs", pairs, entries,
               worst, dt));
  }

  // -------------------------------------------------------------- criterion 2
  {
    TestSystem sys = build_feature_system(46);
    const IvectorPipeline &p = *sys.pipeline;
    Matrix grad = p.score_gradient(sys.corpus.utterances[0].features,
                                   sys.corpus.utterances[9].features);
    const double eps = 0.7;
    Perturbation up = fgsm_step(grad, TrialLabel::kNontarget, eps);
    Perturbation dn = fgsm_step(grad, TrialLabel::kTarget, eps);
    bool ok = up.k == 1 && dn.k == -1;
    double max_abs = 0.0;
    bool any_nonzero = false;
    for (std::size_t i = 0; i < grad.size(); ++i) {
      double d = up.delta.data()[i];
      ok = ok && (d == eps || d == 0.0 || d == -eps);
      ok = ok && dn.delta.data()[i] == -d;  // exact k-sign flip
      ok = ok && ((grad.data()[i] == 0.0) == (d == 0.0));
      max_abs = std::max(max_abs, std::abs(d));
      any_nonzero = any_nonzero || grad.data()[i] != 0.0;
    }
    ok = ok && any_nonzero && max_abs == eps;
    report(2, "fgsm-invariants", ok,
           fmt("%zu entries, max|delta|=%g", grad.size(), max_abs));
  }

  // -------------------------------------------------------------- criterion 3
  {
    std::size_t agree = 0, total = 0;
    for (uint64_t seed = 51; seed <= 55; ++seed) {
      TestSystem sys = build_feature_system(seed);
      const IvectorPipeline &p = *sys.pipeline;
      const auto &utts = sys.corpus.utterances;
      std::mt19937_64 rng(seed * 31);
      std::uniform_int_distribution<std::size_t> pick(0, utts.size() - 1);
      for (int t = 0; t < 20; ++t, ++total) {
        const FeatureMatrix &enroll = utts[pick(rng)].features;
        const FeatureMatrix &test = utts[pick(rng)].features;
        TrialLabel label =
            t % 2 == 0 ? TrialLabel::kNontarget : TrialLabel::kTarget;
        int k = label == TrialLabel::kNontarget ? 1 : -1;
        double eps = 1e-4 * feature_std(test);
        // Rescore through the frozen preprocessing the gradient is taken
        // against: raw deltas enter scaled by the clean CMVN factors.
        PreparedFeatures enroll_pf = p.prepare(enroll);
        PreparedFeatures clean_pf = p.prepare(test);
        FeatureMatrix adv = attack_trial(p, enroll, test, label, eps);
        PreparedFeatures adv_pf = clean_pf;
        for (std::size_t r = 0; r < test.dim(); ++r)
          for (std::size_t c = 0; c < test.frames(); ++c)
            adv_pf.feat.values(r, c) +=
                (adv.values(r, c) - test.values(r, c)) *
                clean_pf.cmvn_scale[r];
        double change = p.score_prepared(enroll_pf, adv_pf) -
                        p.score_prepared(enroll_pf, clean_pf);
        if (change * k > 0.0) ++agree;
      }
    }
    bool ok = total == 100 && agree >= 95;
    report(3, "first-order-direction", ok,
           fmt("%zu/%zu trials move with k", agree, total));
  }

  // ------------------------------------------------- criteria 4, 5, 10, 11
  DeskBench bench = build_desk_bench(tmp);
  const std::vector<double> wb_mfcc_eps = {0.0, 0.03, 0.1, 0.3, 1.0, 5.0};
  const std::vector<double> wb_lpms_eps = {0.0, 0.03, 0.1, 0.3};
  const std::vector<double> transfer_eps = {0.0, 0.03, 0.1, 0.3, 1.0, 5.0, 20.0};

  auto run_all = [&](double *campaign_seconds) {
    double t0 = now_seconds();
    std::map<std::string, CampaignResult> out;
    out["white_box_mfcc"] = run_one(
        bench, *bench.mfcc_ivec, *bench.mfcc_ivec, AttackSetting::kWhiteBox,
        make_white_box_trials(bench, bench.mfcc, false), wb_mfcc_eps,
        bench.mfcc_cfg, bench.mfcc_cfg, "white_box_mfcc");
    out["white_box_lpms"] = run_one(
        bench, *bench.lpms_ivec, *bench.lpms_ivec, AttackSetting::kWhiteBox,
        make_white_box_trials(bench, bench.lpms, true), wb_lpms_eps,
        bench.lpms_cfg, bench.lpms_cfg, "white_box_lpms");
    out["cross_feature"] = run_one(
        bench, *bench.lpms_ivec, *bench.mfcc_ivec,
        AttackSetting::kCrossFeature,
        make_campaign_trials(bench, AttackSetting::kCrossFeature),
        transfer_eps, bench.lpms_cfg, bench.mfcc_cfg, "cross_feature");
    out["cross_model"] = run_one(
        bench, *bench.mfcc_ivec, *bench.xvec, AttackSetting::kCrossModel,
        make_campaign_trials(bench, AttackSetting::kCrossModel), transfer_eps,
        bench.mfcc_cfg, bench.mfcc_cfg, "cross_model");
    out["cross_feature_model"] = run_one(
        bench, *bench.lpms_ivec, *bench.xvec,
        AttackSetting::kCrossFeatureModel,
        make_campaign_trials(bench, AttackSetting::kCrossFeatureModel),
        transfer_eps, bench.lpms_cfg, bench.mfcc_cfg, "cross_feature_model");
    if (campaign_seconds) *campaign_seconds = now_seconds() - t0;
    return out;
  };

  double campaign_seconds = 0.0;
  auto campaigns = run_all(&campaign_seconds);

  // -------------------------------------------------------------- criterion 4
  {
    bool ok = true;
    std::string detail;
    for (const char *name : {"white_box_mfcc", "white_box_lpms"}) {
      const auto &rows = campaigns[name].rows;
      const CampaignSummaryRow *clean = row_at(rows, 0.0);
      double clean_eer = clean->eer, clean_far = clean->far_at_clean_threshold;
      bool found = false;
      double hit_eps = 0.0, hit_far = 0.0, hit_eer = 0.0;
      for (const auto &r : rows) {
        if (r.epsilon == 0.0) continue;
        if (clean_far > 0.0 && r.far_at_clean_threshold >= 5.0 * clean_far &&
            r.eer >= 0.5) {
          found = true;
          hit_eps = r.epsilon;
          hit_far = r.far_at_clean_threshold;
          hit_eer = r.eer;
          break;
        }
      }
      ok = ok && clean_eer <= 0.15 && found;
      detail += fmt("%s: clean EER %.1f%%, eps %g -> FAR %.1f%% EER %.1f%%; ",
                    name, 100 * clean_eer, hit_eps, 100 * hit_far,
                    100 * hit_eer);
    }
    double c4_seconds =
        bench.synth_seconds + bench.ivec_train_seconds + campaign_seconds;
    ok = ok && c4_seconds <= 600.0;
    report(4, "white-box-trend", ok, detail + fmt("%.0fs", c4_seconds));
  }

  // -------------------------------------------------------------- criterion 5
  {
    auto baseline = [&](const char *name) {
      return row_at(campaigns[name].rows, 0.0)->far_at_clean_threshold;
    };
    double cf_base = baseline("cross_feature");
    double cm_base = baseline("cross_model");
    double cfm_base = baseline("cross_feature_model");
    double cf_best = best_far(campaigns["cross_feature"].rows);
    double cm_best = best_far(campaigns["cross_model"].rows);
    double cfm_best = best_far(campaigns["cross_feature_model"].rows);
    double cf_gain = cf_best - cf_base;
    double cfm_gain = cfm_best - cfm_base;
    bool ok = cf_base > 0.0 && cf_best >= 2.0 * cf_base &&  //
              cm_base > 0.0 && cm_best >= 2.0 * cm_base &&  //
              cfm_gain < cf_gain;
    report(5, "transfer-trend", ok,
           fmt("cf %.1f->%.1f%%, cm %.1f->%.1f%%, cfm %.1f->%.1f%% "
               "(gain %.1f < %.1f pts)",
               100 * cf_base, 100 * cf_best, 100 * cm_base, 100 * cm_best,
               100 * cfm_base, 100 * cfm_best, 100 * cfm_gain, 100 * cf_gain));
  }

  // -------------------------------------------------------------- criterion 6
  {
    std::mt19937_64 rng(60);
    double worst = 0.0;
    bool ok = true;
    for (int set = 0; set < 50; ++set) {
      std::uniform_int_distribution<std::size_t> size(1, 500);
      std::normal_distribution<double> tgt(1.0, 1.0), non(-1.0, 1.2);
      std::vector<ScoredTrial> trials;
      std::size_t nt = size(rng), nn = size(rng);
      for (std::size_t i = 0; i < nt; ++i)
        trials.push_back({tgt(rng), TrialLabel::kTarget});
      for (std::size_t i = 0; i < nn; ++i)
        trials.push_back({non(rng), TrialLabel::kNontarget});
      EerResult got = compute_eer(trials);
      EerResult want = brute_force_eer(trials);
      double diff = std::abs(got.eer - want.eer);
      worst = std::max(worst, diff);
      if (diff > 1e-12) ok = false;
    }
    report(6, "eer-oracle", ok, fmt("50 sets, worst |diff| %.2e", worst));
  }

  // -------------------------------------------------------------- criterion 7
  {
    SyntheticCorpusSpec spec;
    spec.n_speakers = 8;
    spec.utterances_per_speaker = 3;
    spec.frames_per_utterance = 80;
    spec.feature_dim = 5;
    spec.seed = 70;
    SyntheticCorpus corpus = gen_synthetic_corpus(spec);
    PreprocessConfig prep;
    std::vector<FeatureMatrix> prepped;
    for (auto &u : corpus.utterances) {
      FeatureMatrix f = u.features;
      f.vad_mask = energy_vad(f, prep.vad_margin_sigmas);
      prepped.push_back(apply_cmvn(f));
    }

    auto monotone = [](const std::vector<double> &h) {
      for (std::size_t i = 1; i < h.size(); ++i)
        if (h[i] < h[i - 1] - 1e-8 * std::abs(h[i - 1])) return false;
      return true;
    };

    std::vector<double> ubm_ll, tv_obj, plda_ll;
    UbmTrainOptions uopts;
    uopts.n_mix = 4;
    uopts.iters = 10;
    uopts.seed = 70;
    uopts.ll_history = &ubm_ll;
    GmmUbm ubm = train_ubm(prepped, uopts);

    std::vector<BaumWelchStats> stats;
    for (const auto &f : prepped) stats.push_back(accumulate_stats(ubm, f));
    TvTrainOptions topts;
    topts.ivec_dim = 4;
    topts.iters = 10;
    topts.seed = 70;
    topts.objective_history = &tv_obj;
    TotalVariabilityModel tv = train_total_variability(ubm, stats, topts);

    auto raw = raw_ivectors(ubm, tv, prepped);
    Vector mean = embedding_mean(raw);
    std::vector<SpeakerEmbedding> normed;
    std::vector<std::size_t> labels;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      normed.push_back(center_and_length_normalize(raw[i], mean));
      labels.push_back(corpus.utterances[i].speaker);
    }
    PldaTrainOptions popts;
    popts.n_factors = 3;
    popts.iters = 10;
    popts.ll_history = &plda_ll;
    train_plda(normed, labels, popts);

    bool ok = ubm_ll.size() >= 10 && tv_obj.size() >= 10 &&
              plda_ll.size() >= 10 && monotone(ubm_ll) && monotone(tv_obj) &&
              monotone(plda_ll);
    report(7, "em-monotonicity", ok,
           fmt("UBM %zu, T %zu, PLDA %zu iterations non-decreasing",
               ubm_ll.size(), tv_obj.size(), plda_ll.size()));
  }

  // -------------------------------------------------------------- criterion 8
  {
    std::mt19937_64 rng(80);
    double worst = 0.0;
    bool ok = true;
    for (int rep = 0; rep < 10; ++rep) {
      GmmUbm ubm = random_ubm(2, 3, rng);
      TotalVariabilityModel tv = random_tv(ubm, 2, rng);
      BaumWelchStats st = random_stats(ubm, rng);
      IvectorPosterior post = extract_ivector(ubm, tv, st);

      Matrix l_mat = Matrix::identity(2);
      Vector b(2, 0.0);
      for (std::size_t c = 0; c < 2; ++c) {
        Matrix sinv = gj_inverse(ubm.covariances[c]);
        Matrix t_c = tv.mixture_block(c);
        Matrix g = matmul_at_b(t_c, matmul(sinv, t_c));
        for (std::size_t i = 0; i < 2; ++i)
          for (std::size_t j = 0; j < 2; ++j)
            l_mat(i, j) += st.zeroth[c] * g(i, j);
        Vector f(3);
        for (std::size_t i = 0; i < 3; ++i) f[i] = st.first_block(c)[i];
        Vector contrib = mat_t_vec(t_c, mat_vec(sinv, f));
        for (std::size_t i = 0; i < 2; ++i) b[i] += contrib[i];
      }
      Vector want = elimination_solve(l_mat, b);
      for (std::size_t i = 0; i < 2; ++i) {
        worst = std::max(worst, std::abs(post.mean[i] - want[i]));
        if (std::abs(post.mean[i] - want[i]) > 1e-10) ok = false;
      }

      BaumWelchStats zero = st;
      zero.first.assign(zero.first.size(), 0.0);
      IvectorPosterior z = extract_ivector(ubm, tv, zero);
      for (double v : z.mean)
        if (v != 0.0) ok = false;
    }
    report(8, "ivector-dense-oracle", ok,
           fmt("10 systems, worst |diff| %.2e; omega(0 stats) = 0", worst));
  }

  // -------------------------------------------------------------- criterion 9
  {
    PldaModel hand;
    hand.m = {0.0};
    hand.phi = Matrix(1, 1);
    hand.phi(0, 0) = 1.0;
    hand.sigma = Matrix::identity(1);
    PldaScorer hand_scorer(hand);
    double want = -0.5 * std::log(3.0) + std::log(2.0);
    double got = hand_scorer.score({0.0}, {0.0});
    double density = oracle_plda_score(hand, {0.0}, {0.0});
    bool ok = std::abs(got - want) < 1e-10 && std::abs(density - want) < 1e-10;

    std::mt19937_64 rng(90);
    std::normal_distribution<double> d(0.0, 1.0);
    double worst_asym = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
      std::size_t dim = 1 + rep % 4;
      PldaModel model = random_plda_model(dim, 1 + rep % dim, rng);
      PldaScorer scorer(model);
      Vector e(dim), t(dim);
      for (std::size_t i = 0; i < dim; ++i) {
        e[i] = d(rng);
        t[i] = d(rng);
      }
      double asym = std::abs(scorer.score(e, t) - scorer.score(t, e));
      worst_asym = std::max(worst_asym, asym);
      if (asym > 1e-10) ok = false;
    }
    report(9, "plda-closed-form", ok,
           fmt("hand case |diff| %.2e, worst asymmetry %.2e",
               std::abs(got - want), worst_asym));
  }

  // ------------------------------------------------------------- criterion 10
  {
    FeatureConfig cfg = FeatureConfig::lpms_default();
    double worst_rt = 0.0;
    bool ok = true;
    std::mt19937_64 rng(100);
    std::uniform_real_distribution<double> amp(-0.3, 0.3);
    for (int rep = 0; rep < 10; ++rep) {
      Waveform w;
      w.samples.resize(8000);
      for (auto &s : w.samples) s = amp(rng);
      auto [feat, phase] = extract_lpms(w, cfg);
      Waveform r = invert_lpms(feat, phase, cfg);
      r.samples.resize(w.samples.size());
      auto [feat2, phase2] = extract_lpms(r, cfg);
      if (feat2.frames() != feat.frames()) {
        ok = false;
        continue;
      }
      for (std::size_t t = 2; t + 2 < feat.frames(); ++t)
        for (std::size_t bin = 0; bin < feat.dim(); ++bin)
          worst_rt = std::max(
              worst_rt, std::abs(feat2.values(bin, t) - feat.values(bin, t)));
    }
    ok = ok && worst_rt <= 1e-2;

    // Zero-perturbation transfer: the epsilon = 0 round-trip baseline of the
    // cross-feature campaign against direct scoring of the same trials.
    double sum_delta = 0.0, sum_direct = 0.0;
    const auto &records = campaigns["cross_feature"].records;
    std::map<std::string, double> round_trip;
    for (const auto &r : records)
      if (r.epsilon == 0.0) round_trip[r.trial_id] = r.adv_score;
    for (const auto &t : bench.corpus.trials) {
      std::size_t e = bench.index.at(t.enroll_id),
                  x = bench.index.at(t.test_id);
      double direct =
          bench.mfcc_ivec->score_trial(bench.mfcc[e], bench.mfcc[x]);
      double rt = round_trip.at(t.enroll_id + ":" + t.test_id);
      sum_delta += std::abs(rt - direct);
      sum_direct += std::abs(direct);
    }
    double rel = sum_delta / sum_direct;
    ok = ok && rel <= 0.05;
    report(10, "lpms-round-trip", ok,
           fmt("max interior error %.2e, transfer score change %.2f%%",
               worst_rt, 100 * rel));
  }

  // ------------------------------------------------------------- criterion 11
  {
    auto render = [](std::map<std::string, CampaignResult> &c) {
      std::string out;
      for (const auto &[name, result] : c) out += report_csv(result.rows);
      return out;
    };
    std::string first = render(campaigns);
    auto again = run_all(nullptr);
    std::string second = render(again);

    fs::path a = tmp / "report_a.csv", b = tmp / "report_b.csv";
    std::ofstream(a) << first;
    std::ofstream(b) << second;
    std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
    std::string ba((std::istreambuf_iterator<char>(fa)),
                   std::istreambuf_iterator<char>());
    std::string bb((std::istreambuf_iterator<char>(fb)),
                   std::istreambuf_iterator<char>());
    bool ok = !ba.empty() && ba == bb;
    report(11, "determinism", ok,
           fmt("two campaign runs, %zu-byte reports %s", ba.size(),
               ok ? "identical" : "differ"));
  }

  fs::remove_all(tmp);
  if (g_failures > 0) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all 11 criteria passed\n");
  return 0;
}
