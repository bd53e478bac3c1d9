// asv/archive.h

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

#ifndef ASV_ARCHIVE_H_
#define ASV_ARCHIVE_H_

#include <cstdint>
#include <string>
#include <vector>

#include "asv/features.h"
#include "asv/gmm.h"
#include "asv/ivector.h"
#include "asv/plda.h"
#include "asv/xvector.h"

namespace asv {

enum class SectionKind : uint32_t {
  kGmmUbm = 1,
  kTotalVariabilityModel = 2,
  kPldaModel = 3,
  kXvectorModel = 4,
  kLdaProjection = 5,
  kFeatureConfig = 6,
  kCenteringMean = 7,
  kFeatureMatrix = 8,
  kPhaseMatrix = 9,
};

// One named, typed little-endian float64 payload with a dimension header.
struct ArchiveSection {
  std::string name;
  SectionKind kind = SectionKind::kCenteringMean;
  std::vector<uint64_t> dims;
  std::vector<double> data;
};

// Whole-file atomic save (temp + rename). Round trips are bit exact.
void save_archive(const std::string &path,
                  const std::vector<ArchiveSection> &sections);
// Throws corrupt-archive on truncation, version error on unknown versions
// or section kinds.
std::vector<ArchiveSection> load_archive(const std::string &path);

const ArchiveSection &find_section(const std::vector<ArchiveSection> &sections,
                                   const std::string &name);
bool has_section(const std::vector<ArchiveSection> &sections,
                 const std::string &name);

// Flat float64 codecs, one section per object.
ArchiveSection encode_ubm(const std::string &name, const GmmUbm &m);
GmmUbm decode_ubm(const ArchiveSection &s);
ArchiveSection encode_tv(const std::string &name,
                         const TotalVariabilityModel &m);
TotalVariabilityModel decode_tv(const ArchiveSection &s);
ArchiveSection encode_plda(const std::string &name, const PldaModel &m);
PldaModel decode_plda(const ArchiveSection &s);
ArchiveSection encode_xvector(const std::string &name, const XvectorModel &m);
XvectorModel decode_xvector(const ArchiveSection &s);
ArchiveSection encode_lda(const std::string &name, const Matrix &m);
Matrix decode_lda(const ArchiveSection &s);
ArchiveSection encode_feature_config(const std::string &name,
                                     const FeatureConfig &c);
FeatureConfig decode_feature_config(const ArchiveSection &s);
ArchiveSection encode_mean(const std::string &name, const Vector &v);
Vector decode_mean(const ArchiveSection &s);
ArchiveSection encode_features(const std::string &name,
                               const FeatureMatrix &f);
FeatureMatrix decode_features(const ArchiveSection &s);
ArchiveSection encode_phase(const std::string &name, const PhaseMatrix &p);
PhaseMatrix decode_phase(const ArchiveSection &s);

// Trial list text format: "enroll_id test_id target|nontarget" per line.
struct TrialLine {
  std::string enroll_id;
  std::string test_id;
  bool target = false;
};

void save_trial_list(const std::string &path,
                     const std::vector<TrialLine> &trials);
std::vector<TrialLine> load_trial_list(const std::string &path);

// Atomic whole-file text write shared by reports and trial lists.
void write_text_file(const std::string &path, const std::string &content);

}  // namespace asv

#endif  // ASV_ARCHIVE_H_
