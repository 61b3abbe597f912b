// signal/wav.hpp

// Copyright 2026 The affectkit authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef AFFECTKIT_WAV_HPP
#define AFFECTKIT_WAV_HPP

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "affectkit/error.hpp"

namespace affectkit {

struct Waveform {
  std::vector<double> samples;  // amplitude in [-1, 1]
  double sample_rate = 16000.0;
};

namespace wav_detail {

inline void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s += static_cast<char>((v >> (8 * i)) & 0xff);
}

inline void put_u16(std::string& s, std::uint16_t v) {
  for (int i = 0; i < 2; ++i) s += static_cast<char>((v >> (8 * i)) & 0xff);
}

inline std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace wav_detail

// Writes 16-bit signed little-endian PCM, mono.  Samples are clamped to
// [-1, 1] before quantization.
inline void write_wav(const std::string& path, const Waveform& w) {
  using namespace wav_detail;
  const std::uint32_t n = static_cast<std::uint32_t>(w.samples.size());
  const std::uint32_t data_bytes = n * 2;
  const std::uint32_t rate = static_cast<std::uint32_t>(std::llround(w.sample_rate));
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put_u32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, rate);
  put_u32(out, rate * 2);  // byte rate
  put_u16(out, 2);         // block align
  put_u16(out, 16);        // bits per sample
  out += "data";
  put_u32(out, data_bytes);
  for (double s : w.samples) {
    double c = s < -1.0 ? -1.0 : (s > 1.0 ? 1.0 : s);
    const std::int16_t q = static_cast<std::int16_t>(std::lrint(c * 32767.0));
    put_u16(out, static_cast<std::uint16_t>(q));
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("short write: " + path);
}

// Reads mono 16-bit PCM; anything else is a format error.
inline Waveform read_wav(const std::string& path) {
  using namespace wav_detail;
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw FormatError("not a RIFF/WAVE file: " + path);

  Waveform w;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::string id(reinterpret_cast<const char*>(bytes.data() + pos), 4);
    const std::uint32_t size = get_u32(bytes.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size())
      throw FormatError("truncated chunk '" + id + "' at byte " +
                        std::to_string(pos) + " in " + path);
    if (id == "fmt ") {
      if (size < 16) throw FormatError("short fmt chunk in " + path);
      const std::uint16_t format = get_u16(bytes.data() + body);
      const std::uint16_t channels = get_u16(bytes.data() + body + 2);
      const std::uint32_t rate = get_u32(bytes.data() + body + 4);
      const std::uint16_t bits = get_u16(bytes.data() + body + 14);
      if (format != 1 || bits != 16)
        throw FormatError("unsupported WAV encoding (need 16-bit PCM): " + path);
      if (channels != 1)
        throw FormatError("unsupported channel count " +
                          std::to_string(channels) + " (need mono): " + path);
      w.sample_rate = static_cast<double>(rate);
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw FormatError("data chunk before fmt in " + path);
      const std::size_t n = size / 2;
      w.samples.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const std::int16_t q = static_cast<std::int16_t>(
            get_u16(bytes.data() + body + 2 * i));
        w.samples[i] = static_cast<double>(q) / 32767.0;
      }
      return w;
    }
    pos = body + size + (size & 1);  // chunks are word-aligned
  }
  throw FormatError("no data chunk in " + path);
}

}  // namespace affectkit

#endif  // AFFECTKIT_WAV_HPP
