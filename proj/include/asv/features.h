// asv/features.h

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

#ifndef ASV_FEATURES_H_
#define ASV_FEATURES_H_

#include <complex>
#include <cstdint>
#include <utility>
#include <vector>

#include "asv/matrix.h"
#include "asv/wav.h"

namespace asv {

enum class FeatureKind : int32_t { kMfcc = 0, kLpms = 1 };
enum class WindowKind : int32_t { kHamming = 0, kBlackman = 1 };

struct FeatureConfig {
  FeatureKind kind = FeatureKind::kMfcc;
  WindowKind window = WindowKind::kHamming;
  double win_len_s = 0.025;
  double hop_s = 0.010;
  double pre_emphasis = 0.97;  // 0 disables
  int n_mels = 30;
  int n_ceps = 24;
  int n_fft = 0;  // 0 = next power of two >= window length
  double log_floor = 1e-10;

  // Hamming 25 ms / 10 ms, pre-emphasis 0.97, 24 cepstra.
  static FeatureConfig mfcc_default();
  // Blackman 8 ms / 4 ms, no pre-emphasis, n_fft 128 at 16 kHz.
  static FeatureConfig lpms_default();

  int window_samples(int sample_rate) const;
  int hop_samples(int sample_rate) const;
  int fft_size(int sample_rate) const;
};

// Per-utterance acoustic features, one column per frame.
struct FeatureMatrix {
  FeatureKind kind = FeatureKind::kMfcc;
  Matrix values;  // dim x frames
  double frame_hop_s = 0.010;
  std::vector<uint8_t> vad_mask;  // empty = no mask; else one flag per frame

  std::size_t dim() const { return values.rows(); }
  std::size_t frames() const { return values.cols(); }
  bool frame_kept(std::size_t t) const {
    return vad_mask.empty() || vad_mask[t] != 0;
  }
  std::size_t kept_frames() const;
};

// STFT phases aligned 1:1 with an LPMS FeatureMatrix.
struct PhaseMatrix {
  Matrix angles;  // dim x frames, radians
};

// 1 + floor((len - win) / hop); requires len >= win.
std::size_t frame_count(std::size_t len, std::size_t win, std::size_t hop);

std::vector<double> make_window(WindowKind kind, int length);

// In-place radix-2 complex FFT (power-of-two length); inverse includes the
// 1/n scale.
void fft(std::vector<std::complex<double>> *x, bool inverse);

FeatureMatrix extract_mfcc(const Waveform &w, const FeatureConfig &cfg);
std::pair<FeatureMatrix, PhaseMatrix> extract_lpms(const Waveform &w,
                                                   const FeatureConfig &cfg);
Waveform invert_lpms(const FeatureMatrix &lpms, const PhaseMatrix &phase,
                     const FeatureConfig &cfg, int sample_rate = 16000);

// Energy threshold VAD: frame kept iff its energy proxy exceeds
// mean - margin_sigmas * stddev; keeps everything if no frame passes.
std::vector<uint8_t> energy_vad(const FeatureMatrix &feat,
                                double margin_sigmas = 0.5);

// Per-dimension zero mean / unit variance over retained frames (variance
// floor 1e-10); a single frame gets mean-only normalization.
FeatureMatrix apply_cmvn(const FeatureMatrix &feat);

}  // namespace asv

#endif  // ASV_FEATURES_H_
