// asv/wav.h

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

#ifndef ASV_WAV_H_
#define ASV_WAV_H_

#include <string>
#include <vector>

namespace asv {

struct Waveform {
  std::vector<double> samples;  // in [-1, 1]
  int sample_rate = 16000;
};

// RIFF PCM-16 reader; stereo is downmixed by averaging. Samples are scaled
// by 1/32768.
Waveform read_wav(const std::string &path);
// Writes mono PCM-16; samples clipped to [-1, 1] then scaled by 32767.
void write_wav(const std::string &path, const Waveform &w);

}  // namespace asv

#endif  // ASV_WAV_H_
