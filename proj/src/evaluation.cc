// src/evaluation.cc

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

#include "asv/evaluation.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "asv/error.h"

namespace asv {

Rates compute_rates(const std::vector<ScoredTrial> &trials, double threshold) {
  if (trials.empty()) throw EmptyInputError("no trials to evaluate");
  std::size_t n_tar = 0, n_non = 0, fa = 0, fr = 0;
  for (const auto &t : trials) {
    if (t.label == TrialLabel::kTarget) {
      ++n_tar;
      if (t.score < threshold) ++fr;
    } else {
      ++n_non;
      if (t.score >= threshold) ++fa;
    }
  }
  Rates r;
  r.far_defined = n_non > 0;
  r.frr_defined = n_tar > 0;
  if (r.far_defined) r.far = double(fa) / double(n_non);
  if (r.frr_defined) r.frr = double(fr) / double(n_tar);
  return r;
}

EerResult compute_eer(const std::vector<ScoredTrial> &trials) {
  Rates probe = compute_rates(trials, 0.0);
  if (!probe.far_defined || !probe.frr_defined)
    throw MetricError("EER needs both target and nontarget trials");

  std::set<double> distinct;
  for (const auto &t : trials) distinct.insert(t.score);
  std::vector<double> scores(distinct.begin(), distinct.end());

  // Candidate thresholds: below everything, the midpoints, above everything.
  std::vector<double> thresholds;
  thresholds.push_back(scores.front() - 1.0);
  for (std::size_t i = 0; i + 1 < scores.size(); ++i)
    thresholds.push_back(0.5 * (scores[i] + scores[i + 1]));
  thresholds.push_back(scores.back() + 1.0);

  // FAR is non-increasing and FRR non-decreasing in the threshold; find the
  // first point where FRR >= FAR and interpolate across the bracket.
  double prev_t = thresholds.front();
  Rates prev = compute_rates(trials, prev_t);
  for (double t : thresholds) {
    Rates cur = compute_rates(trials, t);
    if (cur.frr >= cur.far) {
      if (cur.frr == cur.far || t == prev_t)
        return {cur.frr, t};
      // Linear crossing between (prev_t, prev) and (t, cur).
      double num = prev.far - prev.frr;
      double den = (prev.far - prev.frr) - (cur.far - cur.frr);
      double alpha = den == 0.0 ? 0.0 : num / den;
      double eer = prev.frr + alpha * (cur.frr - prev.frr);
      double far_at = prev.far + alpha * (cur.far - prev.far);
      return {0.5 * (eer + far_at), prev_t + alpha * (t - prev_t)};
    }
    prev_t = t;
    prev = cur;
  }
  // FRR never reaches FAR: every threshold accepts everything.
  return {prev.far, prev_t};
}

std::vector<CampaignSummaryRow> summarize_campaign(
    const std::vector<CampaignRecord> &records, const std::string &setting) {
  if (records.empty()) throw EmptyInputError("empty campaign");

  std::map<double, std::vector<ScoredTrial>> by_eps;
  for (const auto &r : records)
    by_eps[r.epsilon].push_back({r.adv_score, r.label});
  if (by_eps.find(0.0) == by_eps.end())
    throw MetricError("campaign lacks the epsilon = 0 baseline column");

  EerResult clean = compute_eer(by_eps.at(0.0));

  std::vector<CampaignSummaryRow> rows;
  for (const auto &[eps, trials] : by_eps) {
    CampaignSummaryRow row;
    row.setting = setting;
    row.epsilon = eps;
    row.eer = compute_eer(trials).eer;
    row.clean_threshold = clean.threshold;
    row.far_at_clean_threshold = compute_rates(trials, clean.threshold).far;
    for (const auto &t : trials)
      (t.label == TrialLabel::kTarget ? row.n_target : row.n_nontarget)++;
    rows.push_back(row);
  }
  return rows;
}

std::string report_text(const std::vector<CampaignSummaryRow> &rows) {
  std::string out =
      "setting               epsilon     EER%   FAR%@clean-thr   trials\n";
  char buf[160];
  for (const auto &r : rows) {
    std::snprintf(buf, sizeof buf, "%-20s %8.3f %8.2f %16.2f %5zu/%zu\n",
                  r.setting.c_str(), r.epsilon, 100.0 * r.eer,
                  100.0 * r.far_at_clean_threshold, r.n_target,
                  r.n_nontarget);
    out += buf;
  }
  return out;
}

std::string report_csv(const std::vector<CampaignSummaryRow> &rows) {
  std::string out = "setting,epsilon,eer,far_at_clean_threshold,n_target,n_nontarget\n";
  char buf[160];
  for (const auto &r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g,%zu,%zu\n",
                  r.setting.c_str(), r.epsilon, r.eer,
                  r.far_at_clean_threshold, r.n_target, r.n_nontarget);
    out += buf;
  }
  return out;
}

}  // namespace asv
