// src/attack.cc

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

#include "asv/attack.h"

#include <string>

#include "asv/error.h"
#include "asv/kernels.h"

namespace asv {

const char *setting_name(AttackSetting s) {
  switch (s) {
    case AttackSetting::kWhiteBox: return "white_box";
    case AttackSetting::kCrossFeature: return "cross_feature";
    case AttackSetting::kCrossModel: return "cross_model";
    case AttackSetting::kCrossFeatureModel: return "cross_feature_model";
  }
  throw ArgumentError("unknown attack setting");
}

const char *label_name(TrialLabel l) {
  return l == TrialLabel::kTarget ? "target" : "nontarget";
}

Perturbation fgsm_step(const Matrix &grad, TrialLabel label, double epsilon) {
  if (epsilon < 0.0) throw ArgumentError("epsilon must be >= 0");
  Perturbation p;
  p.k = label == TrialLabel::kTarget ? -1 : +1;
  p.delta = Matrix(grad.rows(), grad.cols());
  kernels::sign_scale(grad.data(), p.delta.data(), grad.size(),
                      double(p.k) * epsilon);
  return p;
}

FeatureMatrix attack_trial(const IvectorPipeline &source,
                           const FeatureMatrix &enroll,
                           const FeatureMatrix &test, TrialLabel label,
                           double epsilon) {
  Matrix grad = source.score_gradient(enroll, test);
  Perturbation p = fgsm_step(grad, label, epsilon);
  FeatureMatrix adv = test;
  for (std::size_t i = 0; i < adv.values.size(); ++i)
    adv.values.data()[i] += p.delta.data()[i];
  return adv;
}

FeatureMatrix transfer_cross_feature(const FeatureMatrix &adv_lpms,
                                     const PhaseMatrix &phase,
                                     const FeatureConfig &source_cfg,
                                     const FeatureConfig &target_cfg,
                                     int sample_rate) {
  if (adv_lpms.kind != FeatureKind::kLpms)
    throw ArgumentError("cross-feature transfer expects LPMS source features");
  if (target_cfg.kind != FeatureKind::kMfcc)
    throw ArgumentError("cross-feature transfer targets MFCC features");
  Waveform wav = invert_lpms(adv_lpms, phase, source_cfg, sample_rate);
  if (wav.samples.size() < std::size_t(target_cfg.window_samples(sample_rate)))
    throw ReceptiveFieldError(
        "inverted audio is shorter than one target analysis window (" +
        std::to_string(wav.samples.size()) + " < " +
        std::to_string(target_cfg.window_samples(sample_rate)) + " samples)");
  return extract_mfcc(wav, target_cfg);
}

std::vector<double> default_epsilons() {
  return {0.0, 0.3, 1.0, 5.0, 10.0, 20.0, 30.0, 50.0};
}

namespace {

void check_arrow(const IvectorPipeline &source, const Pipeline &target,
                 AttackSetting setting) {
  const bool src_lpms = source.feature_kind() == FeatureKind::kLpms;
  const bool tgt_mfcc = target.feature_kind() == FeatureKind::kMfcc;
  const bool tgt_xvec = target.embedding_kind() == EmbeddingKind::kXvector;
  bool ok = false;
  switch (setting) {
    case AttackSetting::kWhiteBox:
      ok = !tgt_xvec && target.feature_kind() == source.feature_kind();
      break;
    case AttackSetting::kCrossFeature:
      ok = src_lpms && tgt_mfcc && !tgt_xvec;
      break;
    case AttackSetting::kCrossModel:
      ok = !src_lpms && tgt_mfcc && tgt_xvec;
      break;
    case AttackSetting::kCrossFeatureModel:
      ok = src_lpms && tgt_mfcc && tgt_xvec;
      break;
  }
  if (!ok)
    throw ConfigError(
        "invalid source/target pair for setting " +
        std::string(setting_name(setting)) +
        "; valid arrows: white_box (MFCC-ivec or LPMS-ivec onto itself), "
        "cross_feature (LPMS-ivec -> MFCC-ivec), cross_model (MFCC-ivec -> "
        "MFCC-xvec), cross_feature_model (LPMS-ivec -> MFCC-xvec)");
}

}  // namespace

std::vector<CampaignRecord> run_campaign(
    const IvectorPipeline &source, const Pipeline &target,
    AttackSetting setting, const std::vector<CampaignTrial> &trials,
    const std::vector<double> &epsilons, const FeatureConfig &source_cfg,
    const FeatureConfig &target_cfg) {
  check_arrow(source, target, setting);
  const bool feature_hop = setting == AttackSetting::kCrossFeature ||
                           setting == AttackSetting::kCrossFeatureModel;
  const bool same_system = setting == AttackSetting::kWhiteBox;

  std::vector<CampaignRecord> records;
  records.reserve(trials.size() * epsilons.size());
  for (const CampaignTrial &trial : trials) {
    const FeatureMatrix &enroll_t =
        same_system ? trial.enroll_source : trial.enroll_target;
    // The gradient is computed once per trial; FGSM only rescales its sign.
    Matrix grad = source.score_gradient(trial.enroll_source,
                                        trial.test_source);
    // Clean baseline: for feature hops this is the unperturbed round trip.
    double clean;
    if (feature_hop) {
      FeatureMatrix base = transfer_cross_feature(
          trial.test_source, trial.test_phase, source_cfg, target_cfg);
      clean = target.score_trial(enroll_t, base);
    } else {
      clean = target.score_trial(enroll_t, trial.test_source);
    }

    for (double eps : epsilons) {
      Perturbation p = fgsm_step(grad, trial.label, eps);
      FeatureMatrix adv = trial.test_source;
      for (std::size_t i = 0; i < adv.values.size(); ++i)
        adv.values.data()[i] += p.delta.data()[i];
      double adv_score;
      if (feature_hop) {
        FeatureMatrix hopped = transfer_cross_feature(
            adv, trial.test_phase, source_cfg, target_cfg);
        adv_score = target.score_trial(enroll_t, hopped);
      } else {
        adv_score = target.score_trial(enroll_t, adv);
      }
      records.push_back(
          {trial.trial_id, eps, clean, adv_score, trial.label});
    }
  }
  return records;
}

}  // namespace asv
