// Copyright 2026 The invlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// FVEC: "FVEC" | u16 version (=1) | u64 rows | u64 cols | u32 meta length |
// meta bytes (UTF-8 "key=value\n" lines) | rows*cols f32, row-major.
// All integers and floats little-endian.

#include <cmath>
#include <filesystem>
#include <sstream>
#include <string>

#include "invlab/core/binary_io.hpp"
#include "invlab/core/feature_matrix.hpp"

namespace invlab {

inline constexpr std::string_view kFvecMagic = "FVEC";
inline constexpr std::uint16_t kFvecVersion = 1;

inline std::string encode_metadata(const Metadata& meta) {
  std::string out;
  for (const auto& [key, value] : meta) {
    require(key.find_first_of("=\n") == std::string::npos && value.find('\n') == std::string::npos,
            ErrorCategory::validation, "metadata key/value may not contain '=' (key) or newlines");
    out += key + "=" + value + "\n";
  }
  return out;
}

inline Metadata decode_metadata(const std::string& text, const std::string& origin) {
  Metadata meta;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorCategory::format, "malformed metadata line in " + origin);
    meta[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return meta;
}

inline std::vector<char> encode_feature_matrix(const FeatureMatrix& m) {
  for (float v : m.values())
    require(std::isfinite(v), ErrorCategory::validation, "refusing to write non-finite feature value");
  binary::Writer w;
  w.bytes(kFvecMagic);
  w.uint<std::uint16_t>(kFvecVersion);
  w.uint<std::uint64_t>(m.rows());
  w.uint<std::uint64_t>(m.cols());
  const std::string meta = encode_metadata(m.meta());
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(meta.size()));
  w.bytes(meta);
  for (float v : m.values()) w.f32(v);
  return w.buffer();
}

inline void write_feature_matrix(const FeatureMatrix& m, const std::filesystem::path& path) {
  const auto bytes = encode_feature_matrix(m);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCategory::io, "cannot open for writing: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCategory::io, "write failed: " + path.string());
}

inline FeatureMatrix decode_feature_matrix(binary::Reader r) {
  const std::string origin = r.origin();
  if (r.remaining() < 4 || r.bytes(4) != kFvecMagic)
    fail(ErrorCategory::format, "bad FVEC magic in " + origin);
  const auto version = r.uint<std::uint16_t>();
  if (version != kFvecVersion)
    fail(ErrorCategory::format, "unsupported FVEC version " + std::to_string(version) + " in " + origin);
  const auto rows = r.uint<std::uint64_t>();
  const auto cols = r.uint<std::uint64_t>();
  const auto meta_len = r.uint<std::uint32_t>();
  Metadata meta = decode_metadata(r.bytes(meta_len), origin);
  if (rows == 0 || cols == 0) fail(ErrorCategory::format, "FVEC with zero rows/cols in " + origin);
  if (r.remaining() / 4 < rows * cols || rows * cols > (std::uint64_t{1} << 40))
    fail(ErrorCategory::corruption, "FVEC payload shorter than rows*cols in " + origin);
  if (r.remaining() != rows * cols * 4)
    fail(ErrorCategory::corruption, "FVEC payload has trailing bytes in " + origin);
  std::vector<float> values(rows * cols);
  for (float& v : values) {
    v = r.f32();
    if (!std::isfinite(v)) fail(ErrorCategory::validation, "NaN/Inf feature value in " + origin);
  }
  return FeatureMatrix(rows, cols, std::move(values), std::move(meta));
}

inline FeatureMatrix read_feature_matrix(const std::filesystem::path& path) {
  return decode_feature_matrix(binary::Reader::open(path));
}

}  // namespace invlab
