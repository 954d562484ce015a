// swvae/featio.hpp

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

#ifndef SWVAE_FEATIO_HPP_
#define SWVAE_FEATIO_HPP_

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "swvae/errors.hpp"
#include "swvae/signal.hpp"

namespace swvae {
namespace detail {

inline void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t read_u32(std::istream& is, const std::string& what) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw DataError("truncated " + what);
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void write_f32(std::ostream& os, float v) {
  std::uint32_t u;
  std::memcpy(&u, &v, 4);
  write_u32(os, u);
}

inline float read_f32(std::istream& is, const std::string& what) {
  const std::uint32_t u = read_u32(is, what);
  float v;
  std::memcpy(&v, &u, 4);
  return v;
}

inline void write_f64(std::ostream& os, double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, 8);
  write_u32(os, static_cast<std::uint32_t>(u & 0xffffffffull));
  write_u32(os, static_cast<std::uint32_t>(u >> 32));
}

inline double read_f64(std::istream& is, const std::string& what) {
  const std::uint64_t lo = read_u32(is, what);
  const std::uint64_t hi = read_u32(is, what);
  const std::uint64_t u = lo | (hi << 32);
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

inline void expect_magic(std::istream& is, const char* magic,
                         const std::string& what) {
  char got[4];
  is.read(got, 4);
  if (!is || std::memcmp(got, magic, 4) != 0) {
    throw DataError(what + ": bad magic, expected " + magic);
  }
}

}  // namespace detail

/// Visual embedding file: "SWVF", version, frames, dim, has_mask flag,
/// frames*dim float32 row-major, frames occlusion bytes. Little-endian.
inline void save_visual(const VisualSequence& vis, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open for writing: " + path);
  os.write("SWVF", 4);
  detail::write_u32(os, 1);
  detail::write_u32(os, static_cast<std::uint32_t>(vis.frames()));
  detail::write_u32(os, static_cast<std::uint32_t>(vis.dim()));
  detail::write_u32(os, 1);
  for (std::size_t t = 0; t < vis.frames(); ++t) {
    for (std::size_t d = 0; d < vis.dim(); ++d) {
      detail::write_f32(os, static_cast<float>(vis.values(t, d)));
    }
  }
  os.write(reinterpret_cast<const char*>(vis.occluded.data()),
           static_cast<std::streamsize>(vis.occluded.size()));
  if (!os) throw DataError("write failed: " + path);
}

inline VisualSequence load_visual(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open: " + path);
  detail::expect_magic(is, "SWVF", path);
  const std::uint32_t version = detail::read_u32(is, path);
  if (version != 1) throw DataError(path + ": unsupported version");
  const std::uint32_t frames = detail::read_u32(is, path);
  const std::uint32_t dim = detail::read_u32(is, path);
  const std::uint32_t has_mask = detail::read_u32(is, path);
  VisualSequence vis;
  vis.values = RealMatrix(frames, dim);
  for (std::uint32_t t = 0; t < frames; ++t) {
    for (std::uint32_t d = 0; d < dim; ++d) {
      vis.values(t, d) = detail::read_f32(is, path);
    }
  }
  vis.occluded.assign(frames, 0);
  if (has_mask) {
    is.read(reinterpret_cast<char*>(vis.occluded.data()), frames);
    if (!is) throw DataError("truncated " + path);
  }
  return vis;
}

/// Frame label file: "SWVL", version, frames, frames int32. Little-endian.
inline void save_labels(const std::vector<int>& labels,
                        const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open for writing: " + path);
  os.write("SWVL", 4);
  detail::write_u32(os, 1);
  detail::write_u32(os, static_cast<std::uint32_t>(labels.size()));
  for (int v : labels) {
    detail::write_u32(os, static_cast<std::uint32_t>(static_cast<std::int32_t>(v)));
  }
  if (!os) throw DataError("write failed: " + path);
}

inline std::vector<int> load_labels(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open: " + path);
  detail::expect_magic(is, "SWVL", path);
  const std::uint32_t version = detail::read_u32(is, path);
  if (version != 1) throw DataError(path + ": unsupported version");
  const std::uint32_t frames = detail::read_u32(is, path);
  std::vector<int> labels(frames);
  for (std::uint32_t t = 0; t < frames; ++t) {
    labels[t] = static_cast<std::int32_t>(detail::read_u32(is, path));
  }
  return labels;
}

}  // namespace swvae

#endif  // SWVAE_FEATIO_HPP_
