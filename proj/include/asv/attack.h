// asv/attack.h

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

#ifndef ASV_ATTACK_H_
#define ASV_ATTACK_H_

#include <cstdint>
#include <string>
#include <vector>

#include "asv/features.h"
#include "asv/pipeline.h"

namespace asv {

// The four attack arrows: perturbations are always crafted on a GMM/i-vector
// source system; the target differs in feature kind, model kind, or both.
enum class AttackSetting : int32_t {
  kWhiteBox = 0,
  kCrossFeature = 1,       // LPMS i-vector -> MFCC i-vector
  kCrossModel = 2,         // MFCC i-vector -> MFCC x-vector
  kCrossFeatureModel = 3,  // LPMS i-vector -> MFCC x-vector
};

enum class TrialLabel : int32_t { kTarget = 0, kNontarget = 1 };

const char *setting_name(AttackSetting s);
const char *label_name(TrialLabel l);

// One-step sign perturbation: every entry in {-eps, 0, +eps}, zero exactly
// where the gradient is zero; k = -1 on target trials (push the score down),
// +1 on nontarget trials (push it up).
struct Perturbation {
  Matrix delta;
  int k = 0;
};

Perturbation fgsm_step(const Matrix &grad, TrialLabel label, double epsilon);

// Raw test features plus the sign perturbation of the trial score gradient.
FeatureMatrix attack_trial(const IvectorPipeline &source,
                           const FeatureMatrix &enroll,
                           const FeatureMatrix &test, TrialLabel label,
                           double epsilon);

// Cross-feature hop: adversarial LPMS -> waveform (stored clean phase) ->
// target features. Only MFCC targets are supported.
FeatureMatrix transfer_cross_feature(const FeatureMatrix &adv_lpms,
                                     const PhaseMatrix &phase,
                                     const FeatureConfig &source_cfg,
                                     const FeatureConfig &target_cfg,
                                     int sample_rate = 16000);

// One trial of a campaign: features for the source (attacked) system and,
// for cross settings, the enrollment features of the target system.
// test_phase is required for LPMS sources.
struct CampaignTrial {
  std::string trial_id;
  TrialLabel label = TrialLabel::kNontarget;
  FeatureMatrix enroll_source;
  FeatureMatrix test_source;
  PhaseMatrix test_phase;
  FeatureMatrix enroll_target;  // unused when the target is the source
};

struct CampaignRecord {
  std::string trial_id;
  double epsilon = 0.0;
  double clean_score = 0.0;  // score of the epsilon = 0 baseline
  double adv_score = 0.0;
  TrialLabel label = TrialLabel::kNontarget;
};

// Scores every trial at every epsilon; the epsilon = 0 rows reproduce the
// clean baseline bit-exactly (for feature-transfer settings the baseline is
// the unperturbed round trip through the waveform). Pass the same pipeline
// as source and target for the white-box arrows.
std::vector<CampaignRecord> run_campaign(
    const IvectorPipeline &source, const Pipeline &target,
    AttackSetting setting, const std::vector<CampaignTrial> &trials,
    const std::vector<double> &epsilons, const FeatureConfig &source_cfg,
    const FeatureConfig &target_cfg);

// Paper operating points.
std::vector<double> default_epsilons();

}  // namespace asv

#endif  // ASV_ATTACK_H_
