// swvae/manifest.hpp

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

// File manifest with CRC-32 checksums: every pipeline stage records what it
// wrote so later stages and reruns can verify and locate inputs by role
// rather than by parsing filenames.

#ifndef SWVAE_MANIFEST_HPP_
#define SWVAE_MANIFEST_HPP_

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "swvae/errors.hpp"

namespace swvae {

/// CRC-32 (IEEE 802.3, reflected polynomial 0xEDB88320) of a byte buffer.
inline std::uint32_t crc32(const unsigned char* data, std::size_t n) {
  static const std::array<std::uint32_t, 256> table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) {
        c = (c & 1u) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      }
      t[i] = c;
    }
    return t;
  }();
  std::uint32_t crc = 0xFFFFFFFFu;
  for (std::size_t i = 0; i < n; ++i) {
    crc = table[(crc ^ data[i]) & 0xFFu] ^ (crc >> 8);
  }
  return crc ^ 0xFFFFFFFFu;
}

struct FileDigest {
  std::uint32_t crc = 0;
  std::uint64_t bytes = 0;
};

inline FileDigest digest_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("digest: cannot open " + path);
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  FileDigest d;
  d.bytes = buf.size();
  d.crc = crc32(buf.data(), buf.size());
  return d;
}

inline std::string crc_hex(std::uint32_t crc) {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", crc);
  return buf;
}

struct ManifestEntry {
  std::string kind;     // clean | noise | mixture | visual | visual_occluded |
                        // labels | config | checkpoint | metadata | log |
                        // enhanced | diagnostics | report
  std::size_t utterance = 0;
  bool has_utterance = false;
  double snr_db = std::numeric_limits<double>::quiet_NaN();
  std::string visual;   // "clean" / "occluded" for enhancement outputs
  std::string path;     // relative to the manifest's directory
  std::string crc;      // CRC-32 hex
  std::uint64_t bytes = 0;

  bool has_snr() const { return !std::isnan(snr_db); }
};

inline nlohmann::json manifest_entry_to_json(const ManifestEntry& e) {
  nlohmann::json j;
  j["kind"] = e.kind;
  if (e.has_utterance) j["utterance"] = e.utterance;
  if (e.has_snr()) j["snr_db"] = e.snr_db;
  if (!e.visual.empty()) j["visual"] = e.visual;
  j["path"] = e.path;
  j["crc32"] = e.crc;
  j["bytes"] = e.bytes;
  return j;
}

inline ManifestEntry manifest_entry_from_json(const nlohmann::json& j) {
  ManifestEntry e;
  try {
    e.kind = j.at("kind").get<std::string>();
    e.path = j.at("path").get<std::string>();
    e.crc = j.at("crc32").get<std::string>();
    e.bytes = j.at("bytes").get<std::uint64_t>();
    if (j.contains("utterance")) {
      e.utterance = j.at("utterance").get<std::size_t>();
      e.has_utterance = true;
    }
    if (j.contains("snr_db")) e.snr_db = j.at("snr_db").get<double>();
    if (j.contains("visual")) e.visual = j.at("visual").get<std::string>();
  } catch (const nlohmann::json::exception& ex) {
    throw DataError(std::string("manifest: malformed entry: ") + ex.what());
  }
  return e;
}

/// Records `path` (relative to `dir`) in the entry and fills its digest from
/// the file on disk.
inline ManifestEntry make_entry(const std::string& dir, const std::string& rel,
                                const std::string& kind) {
  ManifestEntry e;
  e.kind = kind;
  e.path = rel;
  const FileDigest d = digest_file(dir + "/" + rel);
  e.crc = crc_hex(d.crc);
  e.bytes = d.bytes;
  return e;
}

inline void write_manifest(const std::string& dir,
                           const std::vector<ManifestEntry>& entries) {
  nlohmann::json j;
  j["entries"] = nlohmann::json::array();
  for (const ManifestEntry& e : entries) {
    j["entries"].push_back(manifest_entry_to_json(e));
  }
  std::ofstream out(dir + "/manifest.json", std::ios::binary);
  if (!out) throw DataError("manifest: cannot write in " + dir);
  out << j.dump(2) << "\n";
}

inline std::vector<ManifestEntry> read_manifest(const std::string& dir) {
  const std::string path = dir + "/manifest.json";
  std::ifstream in(path);
  if (!in) throw DataError("manifest: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("manifest: parse failure in " + path + ": " + e.what());
  }
  if (!j.contains("entries") || !j.at("entries").is_array()) {
    throw DataError("manifest: missing entries array in " + path);
  }
  std::vector<ManifestEntry> entries;
  for (const auto& item : j.at("entries")) {
    entries.push_back(manifest_entry_from_json(item));
  }
  return entries;
}

}  // namespace swvae

#endif  // SWVAE_MANIFEST_HPP_
