// swvae/wav.hpp

// Copyright 2026 the swvae authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABILITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef SWVAE_WAV_HPP_
#define SWVAE_WAV_HPP_

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "swvae/errors.hpp"

namespace swvae {

struct Waveform {
  std::vector<double> samples;
  double sample_rate = 16000.0;

  double duration_seconds() const {
    return sample_rate > 0.0 ? static_cast<double>(samples.size()) / sample_rate
                             : 0.0;
  }
};

enum class WavFormat { kPcm16, kFloat32 };

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& buf, std::uint32_t v) {
  buf.push_back(static_cast<std::uint8_t>(v & 0xFF));
  buf.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
  buf.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
  buf.push_back(static_cast<std::uint8_t>((v >> 24) & 0xFF));
}

inline void put_u16(std::vector<std::uint8_t>& buf, std::uint16_t v) {
  buf.push_back(static_cast<std::uint8_t>(v & 0xFF));
  buf.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
}

inline std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t get_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace detail

/// Write a mono RIFF/WAVE file (PCM16 clips to [-1, 1]; float32 does not).
inline void wav_write(const std::string& path, const Waveform& w,
                      WavFormat format = WavFormat::kFloat32) {
  const std::uint16_t bits = format == WavFormat::kPcm16 ? 16 : 32;
  const std::uint16_t audio_format = format == WavFormat::kPcm16 ? 1 : 3;
  const std::uint32_t n = static_cast<std::uint32_t>(w.samples.size());
  const std::uint32_t bytes_per_sample = bits / 8;
  const std::uint32_t data_bytes = n * bytes_per_sample;
  const std::uint32_t rate = static_cast<std::uint32_t>(w.sample_rate);

  std::vector<std::uint8_t> buf;
  buf.reserve(44 + data_bytes);
  const char* riff = "RIFF";
  buf.insert(buf.end(), riff, riff + 4);
  detail::put_u32(buf, 36 + data_bytes);
  const char* wave = "WAVEfmt ";
  buf.insert(buf.end(), wave, wave + 8);
  detail::put_u32(buf, 16);
  detail::put_u16(buf, audio_format);
  detail::put_u16(buf, 1);  // mono
  detail::put_u32(buf, rate);
  detail::put_u32(buf, rate * bytes_per_sample);
  detail::put_u16(buf, static_cast<std::uint16_t>(bytes_per_sample));
  detail::put_u16(buf, bits);
  const char* data = "data";
  buf.insert(buf.end(), data, data + 4);
  detail::put_u32(buf, data_bytes);

  if (format == WavFormat::kPcm16) {
    for (double s : w.samples) {
      double clipped = s < -1.0 ? -1.0 : (s > 1.0 ? 1.0 : s);
      auto q = static_cast<std::int16_t>(std::lrint(clipped * 32767.0));
      detail::put_u16(buf, static_cast<std::uint16_t>(q));
    }
  } else {
    for (double s : w.samples) {
      float f = static_cast<float>(s);
      std::uint32_t bitsf;
      std::memcpy(&bitsf, &f, 4);
      detail::put_u32(buf, bitsf);
    }
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("wav_write: cannot open " + path);
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
  if (!out) throw DataError("wav_write: write failed for " + path);
}

/// Read a mono RIFF/WAVE file (PCM16 or float32).
inline Waveform wav_read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("wav_read: cannot open " + path);
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
  if (buf.size() < 44 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0) {
    throw DataError("wav_read: not a RIFF/WAVE file: " + path);
  }

  std::size_t pos = 12;
  std::uint16_t audio_format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const std::uint8_t* data_ptr = nullptr;
  std::uint32_t data_bytes = 0;
  while (pos + 8 <= buf.size()) {
    const std::uint8_t* hdr = buf.data() + pos;
    const std::uint32_t chunk_size = detail::get_u32(hdr + 4);
    if (std::memcmp(hdr, "fmt ", 4) == 0 && chunk_size >= 16) {
      audio_format = detail::get_u16(hdr + 8);
      channels = detail::get_u16(hdr + 10);
      rate = detail::get_u32(hdr + 12);
      bits = detail::get_u16(hdr + 22);
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data_ptr = hdr + 8;
      data_bytes = chunk_size;
    }
    pos += 8 + chunk_size + (chunk_size & 1);
  }
  if (data_ptr == nullptr || rate == 0) {
    throw DataError("wav_read: missing fmt/data chunk in " + path);
  }
  if (channels != 1) throw DataError("wav_read: only mono supported: " + path);
  if (data_ptr + data_bytes > buf.data() + buf.size()) {
    throw DataError("wav_read: truncated data chunk in " + path);
  }

  Waveform w;
  w.sample_rate = static_cast<double>(rate);
  if (audio_format == 1 && bits == 16) {
    const std::size_t n = data_bytes / 2;
    w.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto q = static_cast<std::int16_t>(detail::get_u16(data_ptr + 2 * i));
      w.samples[i] = static_cast<double>(q) / 32767.0;
    }
  } else if (audio_format == 3 && bits == 32) {
    const std::size_t n = data_bytes / 4;
    w.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t bitsf = detail::get_u32(data_ptr + 4 * i);
      float f;
      std::memcpy(&f, &bitsf, 4);
      w.samples[i] = static_cast<double>(f);
    }
  } else {
    throw DataError("wav_read: unsupported format (need PCM16 or float32): " +
                    path);
  }
  return w;
}

}  // namespace swvae

#endif  // SWVAE_WAV_HPP_
