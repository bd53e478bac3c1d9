// src/features.cc

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

#include "asv/features.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "asv/error.h"
#include "asv/kernels.h"

namespace asv {

namespace {

constexpr double kPi = std::numbers::pi;

int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

double hz_to_mel(double hz) { return 1127.0 * std::log(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::exp(mel / 1127.0) - 1.0); }

// Triangular mel filterbank, n_mels x (n_fft/2 + 1), spanning 0..Nyquist.
Matrix mel_filterbank(int n_mels, int n_fft, int sample_rate) {
  int n_bins = n_fft / 2 + 1;
  double mel_lo = hz_to_mel(0.0);
  double mel_hi = hz_to_mel(sample_rate / 2.0);
  std::vector<double> centers(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i)
    centers[i] = mel_lo + (mel_hi - mel_lo) * i / (n_mels + 1);
  Matrix fb(n_mels, n_bins);
  for (int b = 0; b < n_bins; ++b) {
    double mel = hz_to_mel(double(b) * sample_rate / n_fft);
    for (int m = 0; m < n_mels; ++m) {
      double lo = centers[m], mid = centers[m + 1], hi = centers[m + 2];
      if (mel > lo && mel < hi)
        fb(m, b) = (mel <= mid) ? (mel - lo) / (mid - lo) : (hi - mel) / (hi - mid);
    }
  }
  return fb;
}

// Orthonormal DCT-II, n_ceps x n_mels.
Matrix dct_matrix(int n_ceps, int n_mels) {
  Matrix d(n_ceps, n_mels);
  for (int k = 0; k < n_ceps; ++k) {
    double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / n_mels);
    for (int n = 0; n < n_mels; ++n)
      d(k, n) = scale * std::cos(kPi * k * (2 * n + 1) / (2.0 * n_mels));
  }
  return d;
}

struct FrameSpec {
  int win, hop, nfft;
  std::size_t n_frames;
};

FrameSpec frame_spec(const Waveform &w, const FeatureConfig &cfg) {
  if (w.sample_rate <= 0) throw ArgumentError("sample rate must be positive");
  if (w.samples.empty()) throw EmptyInputError("empty waveform");
  FrameSpec s;
  s.win = cfg.window_samples(w.sample_rate);
  s.hop = cfg.hop_samples(w.sample_rate);
  if (s.hop > s.win) throw ArgumentError("hop exceeds window length");
  if (static_cast<int>(w.samples.size()) < s.win)
    throw EmptyInputError("waveform shorter than one window (" +
                          std::to_string(w.samples.size()) + " < " +
                          std::to_string(s.win) + " samples)");
  s.nfft = cfg.fft_size(w.sample_rate);
  s.n_frames = frame_count(w.samples.size(), s.win, s.hop);
  return s;
}

}  // namespace

FeatureConfig FeatureConfig::mfcc_default() { return FeatureConfig{}; }

FeatureConfig FeatureConfig::lpms_default() {
  FeatureConfig cfg;
  cfg.kind = FeatureKind::kLpms;
  cfg.window = WindowKind::kBlackman;
  cfg.win_len_s = 0.008;
  cfg.hop_s = 0.004;
  cfg.pre_emphasis = 0.0;
  return cfg;
}

int FeatureConfig::window_samples(int sample_rate) const {
  return static_cast<int>(std::lround(win_len_s * sample_rate));
}

int FeatureConfig::hop_samples(int sample_rate) const {
  return static_cast<int>(std::lround(hop_s * sample_rate));
}

int FeatureConfig::fft_size(int sample_rate) const {
  return n_fft > 0 ? n_fft : next_pow2(window_samples(sample_rate));
}

std::size_t FeatureMatrix::kept_frames() const {
  if (vad_mask.empty()) return frames();
  std::size_t n = 0;
  for (uint8_t m : vad_mask) n += (m != 0);
  return n;
}

std::size_t frame_count(std::size_t len, std::size_t win, std::size_t hop) {
  if (len < win) throw EmptyInputError("signal shorter than one window");
  return 1 + (len - win) / hop;
}

std::vector<double> make_window(WindowKind kind, int length) {
  std::vector<double> w(length);
  for (int n = 0; n < length; ++n) {
    double x = 2.0 * kPi * n / (length - 1);
    if (kind == WindowKind::kHamming)
      w[n] = 0.54 - 0.46 * std::cos(x);
    else
      w[n] = 0.42 - 0.5 * std::cos(x) + 0.08 * std::cos(2.0 * x);
  }
  return w;
}

void fft(std::vector<std::complex<double>> *data, bool inverse) {
  auto &x = *data;
  const std::size_t n = x.size();
  if (n == 0 || (n & (n - 1)) != 0)
    throw ArgumentError("FFT length must be a power of two");
  // bit reversal
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    double ang = 2.0 * kPi / double(len) * (inverse ? 1.0 : -1.0);
    std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        std::complex<double> u = x[i + k];
        std::complex<double> v = x[i + k + len / 2] * w;
        x[i + k] = u + v;
        x[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse)
    for (auto &c : x) c /= double(n);
}

FeatureMatrix extract_mfcc(const Waveform &w, const FeatureConfig &cfg) {
  if (cfg.kind != FeatureKind::kMfcc)
    throw ArgumentError("extract_mfcc requires an MFCC config");
  FrameSpec fs = frame_spec(w, cfg);

  std::vector<double> signal = w.samples;
  if (cfg.pre_emphasis > 0.0) {
    for (std::size_t i = signal.size(); i-- > 1;)
      signal[i] -= cfg.pre_emphasis * signal[i - 1];
    signal[0] -= cfg.pre_emphasis * signal[0];
  }

  std::vector<double> window = make_window(cfg.window, fs.win);
  Matrix fb = mel_filterbank(cfg.n_mels, fs.nfft, w.sample_rate);
  Matrix dct = dct_matrix(cfg.n_ceps, cfg.n_mels);

  FeatureMatrix out;
  out.kind = FeatureKind::kMfcc;
  out.values = Matrix(cfg.n_ceps, fs.n_frames);
  out.frame_hop_s = cfg.hop_s;

  std::vector<std::complex<double>> buf(fs.nfft);
  int n_bins = fs.nfft / 2 + 1;
  Vector power(n_bins), mels(cfg.n_mels);
  for (std::size_t t = 0; t < fs.n_frames; ++t) {
    std::size_t start = t * fs.hop;
    for (int n = 0; n < fs.nfft; ++n)
      buf[n] = (n < fs.win) ? signal[start + n] * window[n] : 0.0;
    fft(&buf, false);
    for (int b = 0; b < n_bins; ++b) power[b] = std::norm(buf[b]);
    for (int m = 0; m < cfg.n_mels; ++m) {
      double e = kernels::dot(fb.row_ptr(m), power.data(), n_bins);
      mels[m] = std::log(std::max(e, cfg.log_floor));
    }
    out.values.set_col(t, mat_vec(dct, mels));
  }
  return out;
}

std::pair<FeatureMatrix, PhaseMatrix> extract_lpms(const Waveform &w,
                                                   const FeatureConfig &cfg) {
  if (cfg.kind != FeatureKind::kLpms)
    throw ArgumentError("extract_lpms requires an LPMS config");
  FrameSpec fs = frame_spec(w, cfg);
  std::vector<double> window = make_window(cfg.window, fs.win);
  int n_bins = fs.nfft / 2 + 1;

  FeatureMatrix out;
  out.kind = FeatureKind::kLpms;
  out.values = Matrix(n_bins, fs.n_frames);
  out.frame_hop_s = cfg.hop_s;
  PhaseMatrix phase;
  phase.angles = Matrix(n_bins, fs.n_frames);

  std::vector<std::complex<double>> buf(fs.nfft);
  for (std::size_t t = 0; t < fs.n_frames; ++t) {
    std::size_t start = t * fs.hop;
    for (int n = 0; n < fs.nfft; ++n)
      buf[n] = (n < fs.win) ? w.samples[start + n] * window[n] : 0.0;
    fft(&buf, false);
    for (int b = 0; b < n_bins; ++b) {
      out.values(b, t) = std::log(std::norm(buf[b]) + cfg.log_floor);
      phase.angles(b, t) = std::arg(buf[b]);
    }
  }
  return {std::move(out), std::move(phase)};
}

Waveform invert_lpms(const FeatureMatrix &lpms, const PhaseMatrix &phase,
                     const FeatureConfig &cfg, int sample_rate) {
  if (lpms.kind != FeatureKind::kLpms)
    throw ArgumentError("invert_lpms requires LPMS features");
  if (!lpms.values.same_shape(phase.angles))
    throw ArgumentError("LPMS/phase shape mismatch");
  int win = cfg.window_samples(sample_rate);
  int hop = cfg.hop_samples(sample_rate);
  int nfft = cfg.fft_size(sample_rate);
  if (static_cast<int>(lpms.dim()) != nfft / 2 + 1)
    throw ArgumentError("LPMS dim does not match config fft size");

  std::vector<double> window = make_window(cfg.window, win);
  std::size_t n_frames = lpms.frames();
  std::size_t out_len = (n_frames - 1) * hop + win;
  std::vector<double> acc(out_len, 0.0), norm(out_len, 0.0);

  std::vector<std::complex<double>> buf(nfft);
  for (std::size_t t = 0; t < n_frames; ++t) {
    for (int b = 0; b <= nfft / 2; ++b) {
      double mag = std::exp(0.5 * lpms.values(b, t));
      buf[b] = std::polar(mag, phase.angles(b, t));
    }
    for (int b = nfft / 2 + 1; b < nfft; ++b) buf[b] = std::conj(buf[nfft - b]);
    fft(&buf, true);
    std::size_t start = t * hop;
    // weighted overlap-add; squared-window normalization below
    for (int n = 0; n < win; ++n) {
      acc[start + n] += window[n] * buf[n].real();
      norm[start + n] += window[n] * window[n];
    }
  }
  Waveform out;
  out.sample_rate = sample_rate;
  out.samples.resize(out_len);
  for (std::size_t i = 0; i < out_len; ++i)
    out.samples[i] = std::clamp(acc[i] / std::max(norm[i], 1e-8), -1.0, 1.0);
  return out;
}

std::vector<uint8_t> energy_vad(const FeatureMatrix &feat, double margin_sigmas) {
  const std::size_t n = feat.frames();
  Vector proxy(n);
  if (feat.kind == FeatureKind::kMfcc) {
    for (std::size_t t = 0; t < n; ++t) proxy[t] = feat.values(0, t);  // c0
  } else {
    for (std::size_t t = 0; t < n; ++t) {
      double s = 0.0;
      for (std::size_t d = 0; d < feat.dim(); ++d) s += feat.values(d, t);
      proxy[t] = s / double(feat.dim());
    }
  }
  double mean = 0.0;
  for (double p : proxy) mean += p;
  mean /= double(n);
  double var = 0.0;
  for (double p : proxy) var += (p - mean) * (p - mean);
  var /= double(n);
  double threshold = mean - margin_sigmas * std::sqrt(var);

  std::vector<uint8_t> mask(n, 0);
  std::size_t kept = 0;
  for (std::size_t t = 0; t < n; ++t)
    if (proxy[t] > threshold) {
      mask[t] = 1;
      ++kept;
    }
  if (kept == 0) std::fill(mask.begin(), mask.end(), 1);
  return mask;
}

FeatureMatrix apply_cmvn(const FeatureMatrix &feat) {
  const std::size_t n = feat.frames(), d = feat.dim();
  if (n == 0) throw EmptyInputError("CMVN of empty feature matrix");
  std::size_t kept = feat.kept_frames();
  FeatureMatrix out = feat;
  for (std::size_t r = 0; r < d; ++r) {
    double mean = 0.0;
    for (std::size_t t = 0; t < n; ++t)
      if (feat.frame_kept(t)) mean += feat.values(r, t);
    mean /= double(kept);
    double var = 0.0;
    for (std::size_t t = 0; t < n; ++t)
      if (feat.frame_kept(t)) {
        double c = feat.values(r, t) - mean;
        var += c * c;
      }
    var /= double(kept);
    double inv_std = (kept < 2) ? 1.0 : 1.0 / std::sqrt(std::max(var, 1e-10));
    for (std::size_t t = 0; t < n; ++t)
      out.values(r, t) = (feat.values(r, t) - mean) * inv_std;
  }
  return out;
}

}  // namespace asv
