// src/corpus.cc

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

#include "asv/corpus.h"

#include <cmath>
#include <cstdio>
#include <random>

#include "asv/error.h"

namespace asv {

namespace {

std::string utt_id(std::size_t spk, std::size_t utt) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "spk%03zu_utt%02zu", spk, utt);
  return buf;
}

// Two-pole resonator y[n] = x[n] + a1 y[n-1] + a2 y[n-2] at a
// speaker-specific center frequency; two of them in series plus a
// speaker-specific tilt give each speaker a stable spectral signature.
struct Resonator {
  double a1 = 0.0, a2 = 0.0, y1 = 0.0, y2 = 0.0;

  Resonator(double freq_hz, double bandwidth_hz, int sample_rate) {
    double r = std::exp(-M_PI * bandwidth_hz / sample_rate);
    a1 = 2.0 * r * std::cos(2.0 * M_PI * freq_hz / sample_rate);
    a2 = -r * r;
  }
  double step(double x) {
    double y = x + a1 * y1 + a2 * y2;
    y2 = y1;
    y1 = y;
    return y;
  }
};

Waveform speaker_noise(std::size_t n_samples, int sample_rate,
                       double f1, double f2, double bw, double tilt,
                       std::mt19937_64 *rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  Resonator r1(f1, bw, sample_rate), r2(f2, bw * 1.5, sample_rate);
  Waveform w;
  w.sample_rate = sample_rate;
  w.samples.resize(n_samples);
  double prev = 0.0;
  double peak = 0.0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    double x = d(*rng);
    double y = r2.step(r1.step(x));
    // One-pole tilt blends the resonant output with its own low-pass.
    prev = tilt * prev + (1.0 - tilt) * y;
    w.samples[i] = prev;
    peak = std::max(peak, std::abs(prev));
  }
  if (peak > 0.0)
    for (auto &s : w.samples) s *= 0.6 / peak;
  return w;
}

}  // namespace

SyntheticCorpus gen_synthetic_corpus(const SyntheticCorpusSpec &spec) {
  if (spec.n_speakers < 2)
    throw ArgumentError("synthetic corpus needs at least 2 speakers");
  if (spec.utterances_per_speaker < 2)
    throw ArgumentError("synthetic corpus needs >= 2 utterances per speaker");
  if (spec.between_spread <= 0.0 || spec.within_spread <= 0.0)
    throw ArgumentError("corpus spreads must be > 0");

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> d(0.0, 1.0);
  SyntheticCorpus corpus;

  for (std::size_t spk = 0; spk < spec.n_speakers; ++spk) {
    if (spec.waveform_mode) {
      // Speaker identity: two resonant frequencies, a bandwidth and a tilt.
      std::uniform_real_distribution<double> uf1(300.0, 1200.0);
      std::uniform_real_distribution<double> uf2(1400.0, 3400.0);
      std::uniform_real_distribution<double> ubw(60.0, 200.0);
      std::uniform_real_distribution<double> utl(0.0, 0.6);
      double f1 = uf1(rng), f2 = uf2(rng), bw = ubw(rng), tilt = utl(rng);
      // Session variability: jitter the resonances per utterance.
      const double jitter = 25.0 * spec.within_spread;
      std::size_t n_samples =
          std::size_t(spec.utterance_seconds * spec.sample_rate);
      for (std::size_t u = 0; u < spec.utterances_per_speaker; ++u) {
        Utterance utt;
        utt.id = utt_id(spk, u);
        utt.speaker = spk;
        utt.wav = speaker_noise(n_samples, spec.sample_rate,
                                f1 + jitter * d(rng), f2 + jitter * d(rng),
                                bw, tilt, &rng);
        corpus.utterances.push_back(std::move(utt));
      }
    } else {
      Vector mean(spec.feature_dim);
      for (auto &v : mean) v = spec.between_spread * d(rng);
      for (std::size_t u = 0; u < spec.utterances_per_speaker; ++u) {
        Utterance utt;
        utt.id = utt_id(spk, u);
        utt.speaker = spk;
        utt.features.values =
            Matrix(spec.feature_dim, spec.frames_per_utterance);
        for (std::size_t t = 0; t < spec.frames_per_utterance; ++t)
          for (std::size_t i = 0; i < spec.feature_dim; ++i)
            utt.features.values(i, t) = mean[i] + spec.within_spread * d(rng);
        corpus.utterances.push_back(std::move(utt));
      }
    }
  }

  // Balanced trial list: enroll on each speaker's first utterance; targets
  // are the speaker's remaining utterances, nontargets the next speaker's.
  const std::size_t per = spec.utterances_per_speaker;
  for (std::size_t spk = 0; spk < spec.n_speakers; ++spk) {
    std::size_t other = (spk + 1) % spec.n_speakers;
    for (std::size_t u = 1; u < per; ++u) {
      corpus.trials.push_back({utt_id(spk, 0), utt_id(spk, u), true});
      corpus.trials.push_back({utt_id(spk, 0), utt_id(other, u), false});
    }
  }
  return corpus;
}

}  // namespace asv
