// src/archive.cc

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

#include "asv/archive.h"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "asv/error.h"

namespace asv {

namespace {

constexpr char kMagic[8] = {'A', 'S', 'V', 'A', 'R', 'C', 'H', '\0'};
constexpr uint32_t kVersion = 1;
constexpr uint32_t kMaxKind = uint32_t(SectionKind::kPhaseMatrix);

template <typename T>
void put(std::string *buf, T v) {
  char raw[sizeof(T)];
  std::memcpy(raw, &v, sizeof(T));
  buf->append(raw, sizeof(T));
}

template <typename T>
T take(const std::string &buf, std::size_t *pos, const std::string &path) {
  if (*pos + sizeof(T) > buf.size())
    throw CorruptArchiveError("truncated archive: " + path);
  T v;
  std::memcpy(&v, buf.data() + *pos, sizeof(T));
  *pos += sizeof(T);
  return v;
}

double bits_to_double(uint64_t u) {
  double d;
  std::memcpy(&d, &u, sizeof d);
  return d;
}

uint64_t double_to_bits(double d) {
  uint64_t u;
  std::memcpy(&u, &d, sizeof u);
  return u;
}

void push_matrix(std::vector<double> *out, const Matrix &m) {
  out->insert(out->end(), m.data(), m.data() + m.size());
}

// Cursor over a flat payload with bounds checking.
struct Reader {
  const std::vector<double> &data;
  std::size_t pos = 0;

  double next() {
    if (pos >= data.size())
      throw FormatError("section payload shorter than its header claims");
    return data[pos++];
  }
  std::size_t next_count() {
    double v = next();
    if (v < 0 || v != double(std::size_t(v)))
      throw FormatError("bad count field in section payload");
    return std::size_t(v);
  }
  Matrix next_matrix(std::size_t r, std::size_t c) {
    Matrix m(r, c);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = next();
    return m;
  }
  Vector next_vector(std::size_t n) {
    Vector v(n);
    for (auto &x : v) x = next();
    return v;
  }
};

void expect_kind(const ArchiveSection &s, SectionKind k) {
  if (s.kind != k)
    throw FormatError("section '" + s.name + "' has the wrong kind tag");
}

}  // namespace

void save_archive(const std::string &path,
                  const std::vector<ArchiveSection> &sections) {
  std::string buf;
  buf.append(kMagic, sizeof kMagic);
  put<uint32_t>(&buf, kVersion);
  put<uint32_t>(&buf, uint32_t(sections.size()));
  for (const auto &s : sections) {
    put<uint32_t>(&buf, uint32_t(s.name.size()));
    buf.append(s.name);
    put<uint32_t>(&buf, uint32_t(s.kind));
    put<uint32_t>(&buf, uint32_t(s.dims.size()));
    for (uint64_t d : s.dims) put<uint64_t>(&buf, d);
    put<uint64_t>(&buf, uint64_t(s.data.size()));
    for (double v : s.data) put<double>(&buf, v);
  }

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for write: " + tmp);
    out.write(buf.data(), std::streamsize(buf.size()));
    if (!out) throw IoError("short write: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw IoError("cannot rename into place: " + path);
}

std::vector<ArchiveSection> load_archive(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string buf = ss.str();

  std::size_t pos = 0;
  if (buf.size() < sizeof kMagic ||
      std::memcmp(buf.data(), kMagic, sizeof kMagic) != 0)
    throw CorruptArchiveError("bad magic: " + path);
  pos = sizeof kMagic;
  uint32_t version = take<uint32_t>(buf, &pos, path);
  if (version != kVersion)
    throw VersionError("archive version " + std::to_string(version) +
                       " unsupported; this build reads version " +
                       std::to_string(kVersion));
  uint32_t n = take<uint32_t>(buf, &pos, path);
  std::vector<ArchiveSection> sections;
  sections.reserve(n);
  for (uint32_t i = 0; i < n; ++i) {
    ArchiveSection s;
    uint32_t name_len = take<uint32_t>(buf, &pos, path);
    if (pos + name_len > buf.size())
      throw CorruptArchiveError("truncated archive: " + path);
    s.name.assign(buf.data() + pos, name_len);
    pos += name_len;
    uint32_t kind = take<uint32_t>(buf, &pos, path);
    if (kind == 0 || kind > kMaxKind)
      throw VersionError("unknown section kind " + std::to_string(kind) +
                         " in " + path + "; written by a newer version?");
    s.kind = SectionKind(kind);
    uint32_t ndims = take<uint32_t>(buf, &pos, path);
    for (uint32_t d = 0; d < ndims; ++d)
      s.dims.push_back(take<uint64_t>(buf, &pos, path));
    uint64_t count = take<uint64_t>(buf, &pos, path);
    s.data.resize(count);
    for (uint64_t d = 0; d < count; ++d)
      s.data[d] = take<double>(buf, &pos, path);
    sections.push_back(std::move(s));
  }
  if (pos != buf.size())
    throw CorruptArchiveError("trailing bytes after last section: " + path);
  return sections;
}

bool has_section(const std::vector<ArchiveSection> &sections,
                 const std::string &name) {
  for (const auto &s : sections)
    if (s.name == name) return true;
  return false;
}

const ArchiveSection &find_section(const std::vector<ArchiveSection> &sections,
                                   const std::string &name) {
  for (const auto &s : sections)
    if (s.name == name) return s;
  throw FormatError("archive has no section named '" + name + "'");
}

ArchiveSection encode_ubm(const std::string &name, const GmmUbm &m) {
  ArchiveSection s;
  s.name = name;
  s.kind = SectionKind::kGmmUbm;
  s.dims = {m.n_mix(), m.dim(), uint64_t(m.covariance_kind)};
  s.data.insert(s.data.end(), m.weights.begin(), m.weights.end());
  push_matrix(&s.data, m.means);
  for (const auto &cov : m.covariances) push_matrix(&s.data, cov);
  return s;
}

GmmUbm decode_ubm(const ArchiveSection &s) {
  expect_kind(s, SectionKind::kGmmUbm);
  if (s.dims.size() != 3) throw FormatError("UBM section needs 3 dims");
  const std::size_t n_mix = s.dims[0], dim = s.dims[1];
  GmmUbm m;
  m.covariance_kind = CovarianceKind(int32_t(s.dims[2]));
  Reader r{s.data};
  m.weights = r.next_vector(n_mix);
  m.means = r.next_matrix(n_mix, dim);
  for (std::size_t c = 0; c < n_mix; ++c)
    m.covariances.push_back(r.next_matrix(dim, dim));
  return m;
}

ArchiveSection encode_tv(const std::string &name,
                         const TotalVariabilityModel &m) {
  ArchiveSection s;
  s.name = name;
  s.kind = SectionKind::kTotalVariabilityModel;
  s.dims = {m.n_mix, m.dim, m.ivec_dim};
  s.data.push_back(bits_to_double(m.ubm_hash));
  push_matrix(&s.data, m.t_matrix);
  return s;
}

TotalVariabilityModel decode_tv(const ArchiveSection &s) {
  expect_kind(s, SectionKind::kTotalVariabilityModel);
  if (s.dims.size() != 3) throw FormatError("TV section needs 3 dims");
  TotalVariabilityModel m;
  m.n_mix = s.dims[0];
  m.dim = s.dims[1];
  m.ivec_dim = s.dims[2];
  Reader r{s.data};
  m.ubm_hash = double_to_bits(r.next());
  m.t_matrix = r.next_matrix(m.n_mix * m.dim, m.ivec_dim);
  return m;
}

ArchiveSection encode_plda(const std::string &name, const PldaModel &m) {
  ArchiveSection s;
  s.name = name;
  s.kind = SectionKind::kPldaModel;
  s.dims = {m.dim(), m.n_factors()};
  s.data.insert(s.data.end(), m.m.begin(), m.m.end());
  push_matrix(&s.data, m.phi);
  push_matrix(&s.data, m.sigma);
  return s;
}

PldaModel decode_plda(const ArchiveSection &s) {
  expect_kind(s, SectionKind::kPldaModel);
  if (s.dims.size() != 2) throw FormatError("PLDA section needs 2 dims");
  const std::size_t d = s.dims[0], q = s.dims[1];
  PldaModel m;
  Reader r{s.data};
  m.m = r.next_vector(d);
  m.phi = r.next_matrix(d, q);
  m.sigma = r.next_matrix(d, d);
  return m;
}

ArchiveSection encode_xvector(const std::string &name, const XvectorModel &m) {
  ArchiveSection s;
  s.name = name;
  s.kind = SectionKind::kXvectorModel;
  s.data.push_back(double(m.embedding_layer_index));
  s.data.push_back(double(m.frame_layers.size()));
  for (const auto &l : m.frame_layers) {
    s.data.push_back(double(l.context.size()));
    for (int c : l.context) s.data.push_back(double(c));
    s.data.push_back(double(l.weight.rows()));
    s.data.push_back(double(l.weight.cols()));
    push_matrix(&s.data, l.weight);
    s.data.insert(s.data.end(), l.bias.begin(), l.bias.end());
  }
  s.data.push_back(double(m.segment_weights.size()));
  for (std::size_t l = 0; l < m.segment_weights.size(); ++l) {
    s.data.push_back(double(m.segment_weights[l].rows()));
    s.data.push_back(double(m.segment_weights[l].cols()));
    push_matrix(&s.data, m.segment_weights[l]);
    s.data.insert(s.data.end(), m.segment_biases[l].begin(),
                  m.segment_biases[l].end());
  }
  s.data.push_back(double(m.softmax_weight.rows()));
  s.data.push_back(double(m.softmax_weight.cols()));
  push_matrix(&s.data, m.softmax_weight);
  s.data.insert(s.data.end(), m.softmax_bias.begin(), m.softmax_bias.end());
  s.dims = {uint64_t(s.data.size())};
  return s;
}

XvectorModel decode_xvector(const ArchiveSection &s) {
  expect_kind(s, SectionKind::kXvectorModel);
  XvectorModel m;
  Reader r{s.data};
  m.embedding_layer_index = r.next_count();
  std::size_t n_frame = r.next_count();
  for (std::size_t l = 0; l < n_frame; ++l) {
    XvectorLayer layer;
    std::size_t n_ctx = r.next_count();
    for (std::size_t c = 0; c < n_ctx; ++c)
      layer.context.push_back(int(r.next()));
    std::size_t rows = r.next_count(), cols = r.next_count();
    layer.weight = r.next_matrix(rows, cols);
    layer.bias = r.next_vector(rows);
    m.frame_layers.push_back(std::move(layer));
  }
  std::size_t n_seg = r.next_count();
  for (std::size_t l = 0; l < n_seg; ++l) {
    std::size_t rows = r.next_count(), cols = r.next_count();
    m.segment_weights.push_back(r.next_matrix(rows, cols));
    m.segment_biases.push_back(r.next_vector(rows));
  }
  std::size_t rows = r.next_count(), cols = r.next_count();
  m.softmax_weight = r.next_matrix(rows, cols);
  m.softmax_bias = r.next_vector(rows);
  return m;
}

ArchiveSection encode_lda(const std::string &name, const Matrix &m) {
  ArchiveSection s;
  s.name = name;
  s.kind = SectionKind::kLdaProjection;
  s.dims = {m.rows(), m.cols()};
  push_matrix(&s.data, m);
  return s;
}

Matrix decode_lda(const ArchiveSection &s) {
  expect_kind(s, SectionKind::kLdaProjection);
  if (s.dims.size() != 2) throw FormatError("LDA section needs 2 dims");
  Reader r{s.data};
  return r.next_matrix(s.dims[0], s.dims[1]);
}

ArchiveSection encode_feature_config(const std::string &name,
                                     const FeatureConfig &c) {
  ArchiveSection s;
  s.name = name;
  s.kind = SectionKind::kFeatureConfig;
  s.data = {double(int32_t(c.kind)), double(int32_t(c.window)),
            c.win_len_s,             c.hop_s,
            c.pre_emphasis,          double(c.n_mels),
            double(c.n_ceps),        double(c.n_fft),
            c.log_floor};
  s.dims = {uint64_t(s.data.size())};
  return s;
}

FeatureConfig decode_feature_config(const ArchiveSection &s) {
  expect_kind(s, SectionKind::kFeatureConfig);
  if (s.data.size() != 9) throw FormatError("bad feature-config payload");
  FeatureConfig c;
  c.kind = FeatureKind(int32_t(s.data[0]));
  c.window = WindowKind(int32_t(s.data[1]));
  c.win_len_s = s.data[2];
  c.hop_s = s.data[3];
  c.pre_emphasis = s.data[4];
  c.n_mels = int(s.data[5]);
  c.n_ceps = int(s.data[6]);
  c.n_fft = int(s.data[7]);
  c.log_floor = s.data[8];
  return c;
}

ArchiveSection encode_mean(const std::string &name, const Vector &v) {
  ArchiveSection s;
  s.name = name;
  s.kind = SectionKind::kCenteringMean;
  s.dims = {uint64_t(v.size())};
  s.data.assign(v.begin(), v.end());
  return s;
}

Vector decode_mean(const ArchiveSection &s) {
  expect_kind(s, SectionKind::kCenteringMean);
  if (s.dims.size() != 1 || s.dims[0] != s.data.size())
    throw FormatError("bad centering-mean payload");
  return Vector(s.data.begin(), s.data.end());
}

ArchiveSection encode_features(const std::string &name,
                               const FeatureMatrix &f) {
  ArchiveSection s;
  s.name = name;
  s.kind = SectionKind::kFeatureMatrix;
  s.dims = {f.dim(), f.frames()};
  s.data.push_back(double(int32_t(f.kind)));
  s.data.push_back(f.frame_hop_s);
  s.data.push_back(f.vad_mask.empty() ? 0.0 : 1.0);
  push_matrix(&s.data, f.values);
  for (uint8_t b : f.vad_mask) s.data.push_back(double(b));
  return s;
}

FeatureMatrix decode_features(const ArchiveSection &s) {
  expect_kind(s, SectionKind::kFeatureMatrix);
  if (s.dims.size() != 2) throw FormatError("feature section needs 2 dims");
  FeatureMatrix f;
  Reader r{s.data};
  f.kind = FeatureKind(int32_t(r.next()));
  f.frame_hop_s = r.next();
  bool has_mask = r.next() != 0.0;
  f.values = r.next_matrix(s.dims[0], s.dims[1]);
  if (has_mask)
    for (std::size_t t = 0; t < s.dims[1]; ++t)
      f.vad_mask.push_back(uint8_t(r.next()));
  return f;
}

ArchiveSection encode_phase(const std::string &name, const PhaseMatrix &p) {
  ArchiveSection s;
  s.name = name;
  s.kind = SectionKind::kPhaseMatrix;
  s.dims = {p.angles.rows(), p.angles.cols()};
  push_matrix(&s.data, p.angles);
  return s;
}

PhaseMatrix decode_phase(const ArchiveSection &s) {
  expect_kind(s, SectionKind::kPhaseMatrix);
  if (s.dims.size() != 2) throw FormatError("phase section needs 2 dims");
  Reader r{s.data};
  PhaseMatrix p;
  p.angles = r.next_matrix(s.dims[0], s.dims[1]);
  return p;
}

void write_text_file(const std::string &path, const std::string &content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for write: " + tmp);
    out << content;
    if (!out) throw IoError("short write: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw IoError("cannot rename into place: " + path);
}

void save_trial_list(const std::string &path,
                     const std::vector<TrialLine> &trials) {
  std::string out;
  std::set<std::string> seen;
  for (const auto &t : trials) {
    std::string line =
        t.enroll_id + " " + t.test_id + (t.target ? " target" : " nontarget");
    if (!seen.insert(line).second)
      throw FormatError("duplicate trial line: " + line);
    out += line + "\n";
  }
  write_text_file(path, out);
}

std::vector<TrialLine> load_trial_list(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  std::vector<TrialLine> trials;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (!seen.insert(line).second)
      throw FormatError("duplicate trial line " + std::to_string(lineno) +
                        " in " + path);
    std::istringstream ls(line);
    TrialLine t;
    std::string label;
    if (!(ls >> t.enroll_id >> t.test_id >> label) ||
        (label != "target" && label != "nontarget"))
      throw FormatError("bad trial line " + std::to_string(lineno) + " in " +
                        path);
    t.target = label == "target";
    trials.push_back(t);
  }
  return trials;
}

}  // namespace asv
