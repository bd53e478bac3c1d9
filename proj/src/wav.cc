// src/wav.cc

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

#include "asv/wav.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "asv/error.h"

namespace asv {

namespace {

uint32_t read_u32(std::istream &in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char *>(b), 4);
  return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 |
         uint32_t(b[3]) << 24;
}

uint16_t read_u16(std::istream &in) {
  unsigned char b[2];
  in.read(reinterpret_cast<char *>(b), 2);
  return uint16_t(b[0]) | uint16_t(b[1]) << 8;
}

void write_u32(std::ostream &out, uint32_t v) {
  char b[4] = {char(v & 0xff), char(v >> 8 & 0xff), char(v >> 16 & 0xff),
               char(v >> 24 & 0xff)};
  out.write(b, 4);
}

void write_u16(std::ostream &out, uint16_t v) {
  char b[2] = {char(v & 0xff), char(v >> 8 & 0xff)};
  out.write(b, 2);
}

}  // namespace

Waveform read_wav(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);

  char tag[4];
  in.read(tag, 4);
  if (!in || std::memcmp(tag, "RIFF", 4) != 0)
    throw FormatError("missing RIFF chunk in " + path);
  read_u32(in);  // riff size
  in.read(tag, 4);
  if (!in || std::memcmp(tag, "WAVE", 4) != 0)
    throw FormatError("missing WAVE form type in " + path);

  uint16_t audio_format = 0, channels = 0, bits = 0;
  uint32_t sample_rate = 0;
  bool have_fmt = false;
  std::vector<int16_t> raw;

  while (in.read(tag, 4)) {
    uint32_t chunk_size = read_u32(in);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      audio_format = read_u16(in);
      channels = read_u16(in);
      sample_rate = read_u32(in);
      read_u32(in);  // byte rate
      read_u16(in);  // block align
      bits = read_u16(in);
      if (chunk_size > 16) in.seekg(chunk_size - 16, std::ios::cur);
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      if (!have_fmt) throw FormatError("data chunk before fmt chunk in " + path);
      if (audio_format != 1)
        throw FormatError("fmt chunk: not PCM (format " +
                          std::to_string(audio_format) + ") in " + path);
      if (bits != 16)
        throw FormatError("fmt chunk: " + std::to_string(bits) +
                          "-bit samples unsupported (need 16) in " + path);
      if (channels == 0) throw FormatError("fmt chunk: zero channels in " + path);
      raw.resize(chunk_size / 2);
      in.read(reinterpret_cast<char *>(raw.data()), chunk_size / 2 * 2);
      if (!in) throw FormatError("truncated data chunk in " + path);
      break;
    } else {
      // skip unknown chunk (word-aligned)
      in.seekg(chunk_size + (chunk_size & 1), std::ios::cur);
    }
  }
  if (!have_fmt) throw FormatError("missing fmt chunk in " + path);
  if (raw.empty()) throw EmptyInputError("zero-length audio in " + path);

  Waveform w;
  w.sample_rate = static_cast<int>(sample_rate);
  std::size_t n = raw.size() / channels;
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) acc += raw[i * channels + c];
    w.samples[i] = acc / channels / 32768.0;
  }
  return w;
}

void write_wav(const std::string &path, const Waveform &w) {
  if (w.samples.empty()) throw EmptyInputError("refusing to write empty waveform");
  std::ofstream out(path + ".tmp", std::ios::binary);
  if (!out) throw IoError("cannot open " + path + ".tmp for writing");
  uint32_t data_size = static_cast<uint32_t>(w.samples.size() * 2);
  out.write("RIFF", 4);
  write_u32(out, 36 + data_size);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  write_u32(out, 16);
  write_u16(out, 1);  // PCM
  write_u16(out, 1);  // mono
  write_u32(out, static_cast<uint32_t>(w.sample_rate));
  write_u32(out, static_cast<uint32_t>(w.sample_rate) * 2);
  write_u16(out, 2);
  write_u16(out, 16);
  out.write("data", 4);
  write_u32(out, data_size);
  for (double s : w.samples) {
    double c = std::clamp(s, -1.0, 1.0);
    auto v = static_cast<int16_t>(std::lrint(c * 32767.0));
    write_u16(out, static_cast<uint16_t>(v));
  }
  out.close();
  if (!out) throw IoError("write failed for " + path);
  if (std::rename((path + ".tmp").c_str(), path.c_str()) != 0)
    throw IoError("rename failed for " + path);
}

}  // namespace asv
