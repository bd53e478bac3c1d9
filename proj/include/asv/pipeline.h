// asv/pipeline.h

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

#ifndef ASV_PIPELINE_H_
#define ASV_PIPELINE_H_

#include <memory>

#include "asv/features.h"
#include "asv/gmm.h"
#include "asv/ivector.h"
#include "asv/plda.h"
#include "asv/xvector.h"

namespace asv {

struct PreprocessConfig {
  bool apply_vad = true;
  bool apply_cmvn = true;
  double vad_margin_sigmas = 0.5;
};

// Raw features after the frozen preprocessing chain (VAD mask fixed, CMVN
// affine per dimension); cmvn_scale carries the per-dimension derivative of
// the normalization, needed to push gradients back to raw features.
struct PreparedFeatures {
  FeatureMatrix feat;
  Vector cmvn_scale;  // all ones when CMVN is off
};

// Immutable end-to-end scoring chain: features -> embedding -> centered,
// length-normalized embedding -> log likelihood ratio.
class Pipeline {
 public:
  virtual ~Pipeline() = default;

  virtual FeatureKind feature_kind() const = 0;
  virtual EmbeddingKind embedding_kind() const = 0;

  PreparedFeatures prepare(const FeatureMatrix &raw) const;
  virtual SpeakerEmbedding embed(const PreparedFeatures &pf) const = 0;

  double score_trial(const FeatureMatrix &enroll,
                     const FeatureMatrix &test) const;
  double score_prepared(const PreparedFeatures &enroll,
                        const PreparedFeatures &test) const;

  const PldaScorer &scorer() const { return *scorer_; }
  const Vector &center_mean() const { return center_mean_; }
  const PreprocessConfig &preprocess() const { return prep_; }

 protected:
  Pipeline(FeatureKind kind, Vector center_mean, PldaModel plda,
           PreprocessConfig prep);

  FeatureKind kind_;
  Vector center_mean_;
  PldaModel plda_;
  std::unique_ptr<PldaScorer> scorer_;
  PreprocessConfig prep_;
};

// GMM/i-vector front end with the exact derivative of the trial score with
// respect to the raw test features.
class IvectorPipeline : public Pipeline {
 public:
  IvectorPipeline(FeatureKind kind, GmmUbm ubm, TotalVariabilityModel tv,
                  Vector center_mean, PldaModel plda, PreprocessConfig prep);

  FeatureKind feature_kind() const override { return kind_; }
  EmbeddingKind embedding_kind() const override {
    return EmbeddingKind::kIvector;
  }
  SpeakerEmbedding embed(const PreparedFeatures &pf) const override;

  // dS/dX_j, shape of the raw test features; enrollment side and all
  // parameters held fixed, VAD-masked columns exactly zero, CMVN treated as
  // a frozen affine map.
  Matrix score_gradient(const FeatureMatrix &enroll,
                        const FeatureMatrix &test) const;

  const GmmUbm &ubm() const { return ubm_; }
  const TotalVariabilityModel &tv() const { return tv_; }

 private:
  GmmUbm ubm_;
  TotalVariabilityModel tv_;
  std::unique_ptr<GmmDensityCache> density_;
  std::unique_ptr<TvCache> tv_cache_;
};

// TDNN embedding front end (black-box transfer target only; no gradients).
class XvectorPipeline : public Pipeline {
 public:
  XvectorPipeline(FeatureKind kind, XvectorModel model, Matrix lda,
                  Vector center_mean, PldaModel plda, PreprocessConfig prep);

  FeatureKind feature_kind() const override { return kind_; }
  EmbeddingKind embedding_kind() const override {
    return EmbeddingKind::kXvector;
  }
  SpeakerEmbedding embed(const PreparedFeatures &pf) const override;

  const XvectorModel &model() const { return model_; }
  const Matrix &lda() const { return lda_; }

 private:
  XvectorModel model_;
  Matrix lda_;
};

}  // namespace asv

#endif  // ASV_PIPELINE_H_
