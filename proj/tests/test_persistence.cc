// tests/test_persistence.cc

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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "asv/archive.h"
#include "asv/corpus.h"
#include "asv/error.h"

using namespace asv;

namespace {

std::string tmp_path(const char *stem) {
  return std::string("/tmp/asv_test_") + stem + "_" +
         std::to_string(::getpid());
}

Matrix random_matrix(std::mt19937_64 &rng, std::size_t r, std::size_t c) {
  std::normal_distribution<double> d(0.0, 1.0);
  Matrix m(r, c);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = d(rng);
  return m;
}

Vector random_vector(std::mt19937_64 &rng, std::size_t n) {
  std::normal_distribution<double> d(0.0, 1.0);
  Vector v(n);
  for (double &x : v) x = d(rng);
  return v;
}

GmmUbm random_ubm(std::mt19937_64 &rng, std::size_t n_mix, std::size_t dim,
                  CovarianceKind kind) {
  GmmUbm m;
  m.covariance_kind = kind;
  m.weights = random_vector(rng, n_mix);
  double sum = 0.0;
  for (double &w : m.weights) {
    w = std::abs(w) + 0.1;
    sum += w;
  }
  for (double &w : m.weights) w /= sum;
  m.means = random_matrix(rng, n_mix, dim);
  for (std::size_t c = 0; c < n_mix; ++c) {
    Matrix cov = Matrix::identity(dim);
    for (std::size_t i = 0; i < dim; ++i) cov(i, i) = 0.5 + i * 0.1 + c * 0.01;
    if (kind == CovarianceKind::kFull && dim > 1) {
      cov(0, 1) = cov(1, 0) = 0.05;
    }
    m.covariances.push_back(cov);
  }
  return m;
}

bool matrix_equal(const Matrix &a, const Matrix &b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a.data()[i] != b.data()[i]) return false;
  return true;
}

bool vector_equal(const Vector &a, const Vector &b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

}  // namespace

TEST_CASE("UBM round trip is bit exact, both covariance kinds") {
  std::mt19937_64 rng(1);
  for (CovarianceKind kind :
       {CovarianceKind::kFull, CovarianceKind::kDiagonal}) {
    GmmUbm m = random_ubm(rng, 3, 4, kind);
    std::string path = tmp_path("ubm");
    save_archive(path, {encode_ubm("ubm", m)});
    auto sections = load_archive(path);
    GmmUbm back = decode_ubm(find_section(sections, "ubm"));
    CHECK(back.covariance_kind == m.covariance_kind);
    CHECK(back.content_hash() == m.content_hash());
    CHECK(vector_equal(back.weights, m.weights));
    CHECK(matrix_equal(back.means, m.means));
    REQUIRE(back.covariances.size() == m.covariances.size());
    for (std::size_t c = 0; c < m.covariances.size(); ++c)
      CHECK(matrix_equal(back.covariances[c], m.covariances[c]));
    std::remove(path.c_str());
  }
}

TEST_CASE("TV, PLDA, LDA, mean, and feature-config round trips") {
  std::mt19937_64 rng(2);
  TotalVariabilityModel tv;
  tv.n_mix = 3;
  tv.dim = 4;
  tv.ivec_dim = 5;
  tv.t_matrix = random_matrix(rng, 12, 5);
  tv.ubm_hash = rng();

  PldaModel plda;
  plda.m = random_vector(rng, 5);
  plda.phi = random_matrix(rng, 5, 2);
  plda.sigma = Matrix::identity(5);

  Matrix lda = random_matrix(rng, 3, 5);
  Vector mean = random_vector(rng, 5);
  FeatureConfig fc = FeatureConfig::lpms_default();

  std::string path = tmp_path("models");
  save_archive(path, {encode_tv("tv", tv), encode_plda("plda", plda),
                      encode_lda("lda", lda), encode_mean("mean", mean),
                      encode_feature_config("feat", fc)});
  auto sections = load_archive(path);

  TotalVariabilityModel tv2 = decode_tv(find_section(sections, "tv"));
  CHECK(tv2.n_mix == tv.n_mix);
  CHECK(tv2.dim == tv.dim);
  CHECK(tv2.ivec_dim == tv.ivec_dim);
  CHECK(tv2.ubm_hash == tv.ubm_hash);
  CHECK(matrix_equal(tv2.t_matrix, tv.t_matrix));

  PldaModel plda2 = decode_plda(find_section(sections, "plda"));
  CHECK(vector_equal(plda2.m, plda.m));
  CHECK(matrix_equal(plda2.phi, plda.phi));
  CHECK(matrix_equal(plda2.sigma, plda.sigma));

  CHECK(matrix_equal(decode_lda(find_section(sections, "lda")), lda));
  CHECK(vector_equal(decode_mean(find_section(sections, "mean")), mean));

  FeatureConfig fc2 = decode_feature_config(find_section(sections, "feat"));
  CHECK(fc2.kind == fc.kind);
  CHECK(fc2.window == fc.window);
  CHECK(fc2.win_len_s == fc.win_len_s);
  CHECK(fc2.hop_s == fc.hop_s);
  CHECK(fc2.pre_emphasis == fc.pre_emphasis);
  CHECK(fc2.n_mels == fc.n_mels);
  CHECK(fc2.n_ceps == fc.n_ceps);
  CHECK(fc2.n_fft == fc.n_fft);
  CHECK(fc2.log_floor == fc.log_floor);
  CHECK_FALSE(has_section(sections, "nope"));
  std::remove(path.c_str());
}

TEST_CASE("x-vector model round trip is bit exact") {
  XvectorArch arch;
  arch.input_dim = 6;
  arch.hidden_dim = 8;
  arch.embed_dim = 5;
  arch.segment_hidden_dim = 4;
  XvectorModel m = init_xvector(arch, 3, 42);
  std::string path = tmp_path("xvec");
  save_archive(path, {encode_xvector("xvec", m)});
  auto sections = load_archive(path);
  XvectorModel back = decode_xvector(find_section(sections, "xvec"));
  REQUIRE(back.frame_layers.size() == m.frame_layers.size());
  for (std::size_t l = 0; l < m.frame_layers.size(); ++l) {
    CHECK(back.frame_layers[l].context == m.frame_layers[l].context);
    CHECK(matrix_equal(back.frame_layers[l].weight, m.frame_layers[l].weight));
    CHECK(vector_equal(back.frame_layers[l].bias, m.frame_layers[l].bias));
  }
  REQUIRE(back.segment_weights.size() == m.segment_weights.size());
  for (std::size_t l = 0; l < m.segment_weights.size(); ++l) {
    CHECK(matrix_equal(back.segment_weights[l], m.segment_weights[l]));
    CHECK(vector_equal(back.segment_biases[l], m.segment_biases[l]));
  }
  CHECK(back.embedding_layer_index == m.embedding_layer_index);
  CHECK(matrix_equal(back.softmax_weight, m.softmax_weight));
  CHECK(vector_equal(back.softmax_bias, m.softmax_bias));
  std::remove(path.c_str());
}

TEST_CASE("feature and phase matrices round trip with the VAD mask") {
  std::mt19937_64 rng(3);
  FeatureMatrix f;
  f.kind = FeatureKind::kLpms;
  f.values = random_matrix(rng, 4, 7);
  f.vad_mask = {1, 0, 1, 1, 0, 1, 1};
  PhaseMatrix ph;
  ph.angles = random_matrix(rng, 5, 7);
  std::string path = tmp_path("feat");
  save_archive(path, {encode_features("f", f), encode_phase("ph", ph)});
  auto sections = load_archive(path);
  FeatureMatrix f2 = decode_features(find_section(sections, "f"));
  CHECK(f2.kind == f.kind);
  CHECK(matrix_equal(f2.values, f.values));
  CHECK(f2.vad_mask == f.vad_mask);
  PhaseMatrix ph2 = decode_phase(find_section(sections, "ph"));
  CHECK(matrix_equal(ph2.angles, ph.angles));
  std::remove(path.c_str());
}

TEST_CASE("truncated archives are reported as corrupt") {
  std::mt19937_64 rng(4);
  std::string path = tmp_path("trunc");
  save_archive(path, {encode_lda("lda", random_matrix(rng, 6, 6))});
  std::ifstream in(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  in.close();
  for (std::size_t keep : {bytes.size() - 1, bytes.size() / 2, size_t(10)}) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), std::streamsize(keep));
    out.close();
    try {
      load_archive(path);
      FAIL("expected an error");
    } catch (const Error &e) {
      CHECK(e.error_class() == "corrupt-archive-error");
    }
  }
  std::remove(path.c_str());
}

TEST_CASE("unknown versions and section kinds raise version errors") {
  std::mt19937_64 rng(5);
  std::string path = tmp_path("ver");
  save_archive(path, {encode_mean("m", random_vector(rng, 3))});
  std::ifstream in(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  in.close();

  SUBCASE("version bump") {
    std::string bad = bytes;
    bad[8] = 9;  // version field follows the 8-byte magic
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bad.data(), std::streamsize(bad.size()));
    out.close();
    try {
      load_archive(path);
      FAIL("expected an error");
    } catch (const Error &e) {
      CHECK(e.error_class() == "version-error");
    }
  }
  SUBCASE("unknown kind tag") {
    ArchiveSection s = encode_mean("m", random_vector(rng, 3));
    s.kind = SectionKind(200);
    save_archive(path, {s});
    try {
      load_archive(path);
      FAIL("expected an error");
    } catch (const Error &e) {
      CHECK(e.error_class() == "version-error");
    }
  }
  SUBCASE("bad magic") {
    std::string bad = bytes;
    bad[0] = 'X';
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bad.data(), std::streamsize(bad.size()));
    out.close();
    CHECK_THROWS_AS(load_archive(path), Error);
  }
  std::remove(path.c_str());
}

TEST_CASE("trial lists round trip and reject duplicates") {
  std::vector<TrialLine> trials = {{"spk000_utt00", "spk000_utt01", true},
                                   {"spk000_utt00", "spk001_utt00", false},
                                   {"spk002_utt01", "spk003_utt02", false}};
  std::string path = tmp_path("trials");
  save_trial_list(path, trials);
  auto back = load_trial_list(path);
  REQUIRE(back.size() == trials.size());
  for (std::size_t i = 0; i < trials.size(); ++i) {
    CHECK(back[i].enroll_id == trials[i].enroll_id);
    CHECK(back[i].test_id == trials[i].test_id);
    CHECK(back[i].target == trials[i].target);
  }
  trials.push_back(trials[0]);
  CHECK_THROWS_AS(save_trial_list(path, trials), Error);
  write_text_file(path, "a b target\na b target\n");
  CHECK_THROWS_AS(load_trial_list(path), Error);
  write_text_file(path, "a b maybe\n");
  CHECK_THROWS_AS(load_trial_list(path), Error);
  std::remove(path.c_str());
}

TEST_CASE("synthetic corpus is deterministic in the seed") {
  SyntheticCorpusSpec spec;
  spec.n_speakers = 4;
  spec.utterances_per_speaker = 2;
  spec.frames_per_utterance = 20;
  spec.feature_dim = 5;
  spec.seed = 77;
  SyntheticCorpus a = gen_synthetic_corpus(spec);
  SyntheticCorpus b = gen_synthetic_corpus(spec);
  REQUIRE(a.utterances.size() == b.utterances.size());
  for (std::size_t i = 0; i < a.utterances.size(); ++i) {
    CHECK(a.utterances[i].id == b.utterances[i].id);
    CHECK(a.utterances[i].speaker == b.utterances[i].speaker);
    CHECK(matrix_equal(a.utterances[i].features.values, b.utterances[i].features.values));
  }
  REQUIRE(a.trials.size() == b.trials.size());
  for (std::size_t i = 0; i < a.trials.size(); ++i) {
    CHECK(a.trials[i].enroll_id == b.trials[i].enroll_id);
    CHECK(a.trials[i].test_id == b.trials[i].test_id);
    CHECK(a.trials[i].target == b.trials[i].target);
  }
  spec.seed = 78;
  SyntheticCorpus c = gen_synthetic_corpus(spec);
  CHECK_FALSE(matrix_equal(a.utterances[0].features.values,
                           c.utterances[0].features.values));
}

TEST_CASE("corpus trials are balanced and label-consistent") {
  SyntheticCorpusSpec spec;
  spec.n_speakers = 5;
  spec.utterances_per_speaker = 3;
  spec.frames_per_utterance = 10;
  spec.feature_dim = 3;
  spec.seed = 9;
  SyntheticCorpus corpus = gen_synthetic_corpus(spec);
  std::size_t n_target = 0, n_nontarget = 0;
  auto speaker_of = [&](const std::string &id) {
    for (const auto &u : corpus.utterances)
      if (u.id == id) return u.speaker;
    FAIL("unknown utterance id ", id);
    return std::size_t(0);
  };
  for (const auto &t : corpus.trials) {
    bool same = speaker_of(t.enroll_id) == speaker_of(t.test_id);
    CHECK(same == t.target);
    (t.target ? n_target : n_nontarget) += 1;
  }
  CHECK(n_target > 0);
  CHECK(n_target == n_nontarget);
}

TEST_CASE("tiny within spread collapses each speaker toward a point") {
  SyntheticCorpusSpec spec;
  spec.n_speakers = 3;
  spec.utterances_per_speaker = 2;
  spec.frames_per_utterance = 8;
  spec.feature_dim = 4;
  spec.between_spread = 2.0;
  spec.within_spread = 1e-9;  // spreads must stay positive
  spec.seed = 21;
  SyntheticCorpus corpus = gen_synthetic_corpus(spec);
  CHECK_THROWS_AS(
      [&] {
        SyntheticCorpusSpec bad = spec;
        bad.within_spread = 0.0;
        return gen_synthetic_corpus(bad);
      }(),
      Error);
  for (const auto &u : corpus.utterances) {
    for (std::size_t t = 1; t < u.features.frames(); ++t)
      for (std::size_t r = 0; r < u.features.dim(); ++r)
        CHECK(std::abs(u.features.values(r, t) - u.features.values(r, 0)) <
              1e-6);
  }
  // Different speakers still differ.
  double gap = 0.0;
  for (std::size_t r = 0; r < 4; ++r)
    gap += std::abs(corpus.utterances[0].features.values(r, 0) -
                    corpus.utterances[2].features.values(r, 0));
  CHECK(gap > 1e-3);
}

TEST_CASE("waveform-mode corpus produces nonempty distinct signals") {
  SyntheticCorpusSpec spec;
  spec.n_speakers = 2;
  spec.utterances_per_speaker = 2;
  spec.waveform_mode = true;
  spec.utterance_seconds = 0.2;
  spec.seed = 5;
  SyntheticCorpus corpus = gen_synthetic_corpus(spec);
  REQUIRE(corpus.utterances.size() == 4);
  for (const auto &u : corpus.utterances) {
    CHECK(u.wav.sample_rate == spec.sample_rate);
    CHECK(u.wav.samples.size() ==
          std::size_t(spec.utterance_seconds * spec.sample_rate));
  }
  CHECK(corpus.utterances[0].wav.samples != corpus.utterances[2].wav.samples);
}
