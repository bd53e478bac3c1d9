// asv/evaluation.h

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

#ifndef ASV_EVALUATION_H_
#define ASV_EVALUATION_H_

#include <string>
#include <vector>

#include "asv/attack.h"

namespace asv {

struct ScoredTrial {
  double score = 0.0;
  TrialLabel label = TrialLabel::kNontarget;
};

// Ties at the threshold count as acceptance (score >= t).
struct Rates {
  double far = 0.0;
  double frr = 0.0;
  bool far_defined = false;  // false when a label class is absent
  bool frr_defined = false;
};

Rates compute_rates(const std::vector<ScoredTrial> &trials, double threshold);

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
};

// Sweeps midpoints of the sorted distinct scores and interpolates linearly
// between the thresholds bracketing the FAR/FRR crossing.
EerResult compute_eer(const std::vector<ScoredTrial> &trials);

// One report row per epsilon: EER of the attacked scores, and FAR at the
// threshold fixed from the clean (epsilon = 0) EER operating point.
struct CampaignSummaryRow {
  std::string setting;
  double epsilon = 0.0;
  double eer = 0.0;
  double far_at_clean_threshold = 0.0;
  double clean_threshold = 0.0;
  std::size_t n_target = 0;
  std::size_t n_nontarget = 0;
};

std::vector<CampaignSummaryRow> summarize_campaign(
    const std::vector<CampaignRecord> &records, const std::string &setting);

// Aligned text table / CSV, one row per (setting, epsilon).
std::string report_text(const std::vector<CampaignSummaryRow> &rows);
std::string report_csv(const std::vector<CampaignSummaryRow> &rows);

}  // namespace asv

#endif  // ASV_EVALUATION_H_
