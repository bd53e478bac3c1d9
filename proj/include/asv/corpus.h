// asv/corpus.h

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

#ifndef ASV_CORPUS_H_
#define ASV_CORPUS_H_

#include <cstdint>
#include <string>
#include <vector>

#include "asv/archive.h"
#include "asv/features.h"
#include "asv/wav.h"

namespace asv {

// Self-contained stand-in for a speech corpus. Feature mode draws Gaussian
// frames straight in feature space; waveform mode synthesizes per-speaker
// filtered noise so the full front end is exercised.
struct SyntheticCorpusSpec {
  std::size_t n_speakers = 24;
  std::size_t utterances_per_speaker = 4;
  std::size_t frames_per_utterance = 100;  // feature mode
  std::size_t feature_dim = 12;            // feature mode
  double between_spread = 3.0;
  double within_spread = 1.0;
  uint64_t seed = 0;
  bool waveform_mode = false;
  double utterance_seconds = 1.0;  // waveform mode
  int sample_rate = 16000;
};

struct Utterance {
  std::string id;
  std::size_t speaker = 0;
  FeatureMatrix features;  // feature mode only
  Waveform wav;            // waveform mode only
};

struct SyntheticCorpus {
  std::vector<Utterance> utterances;
  std::vector<TrialLine> trials;  // balanced target/nontarget
};

SyntheticCorpus gen_synthetic_corpus(const SyntheticCorpusSpec &spec);

}  // namespace asv

#endif  // ASV_CORPUS_H_
