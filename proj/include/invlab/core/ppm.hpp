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

#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "invlab/core/error.hpp"
#include "invlab/core/image.hpp"

namespace invlab {

namespace detail {

inline void skip_ppm_space(const std::string& s, std::size_t& pos) {
  while (pos < s.size()) {
    if (s[pos] == '#') {
      while (pos < s.size() && s[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(s[pos]))) {
      ++pos;
    } else {
      break;
    }
  }
}

inline long read_ppm_int(const std::string& s, std::size_t& pos, const std::string& origin) {
  skip_ppm_space(s, pos);
  const std::size_t start = pos;
  while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
  if (start == pos || pos - start > 9) fail(ErrorCategory::format, "malformed PPM header in " + origin);
  return std::stol(s.substr(start, pos - start));
}

}  // namespace detail

/// Binary PPM (P6) with maxval <= 255. Values are divided by maxval.
inline Image decode_ppm(const std::string& bytes, const std::string& origin) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6')
    fail(ErrorCategory::format, "not a binary PPM (P6) file: " + origin);
  std::size_t pos = 2;
  const long width = detail::read_ppm_int(bytes, pos, origin);
  const long height = detail::read_ppm_int(bytes, pos, origin);
  const long maxval = detail::read_ppm_int(bytes, pos, origin);
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 255)
    fail(ErrorCategory::format, "unsupported PPM geometry or maxval in " + origin);
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos])))
    fail(ErrorCategory::format, "malformed PPM header in " + origin);
  ++pos;
  const std::size_t count = static_cast<std::size_t>(width) * height * 3;
  if (bytes.size() - pos < count) fail(ErrorCategory::corruption, "truncated PPM payload in " + origin);
  std::vector<float> data(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto v = static_cast<unsigned char>(bytes[pos + i]);
    if (v > maxval) fail(ErrorCategory::format, "PPM sample exceeds maxval in " + origin);
    data[i] = static_cast<float>(static_cast<double>(v) / static_cast<double>(maxval));
  }
  return Image(static_cast<int>(width), static_cast<int>(height), std::move(data));
}

inline Image read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCategory::io, "cannot read image file: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_ppm(bytes, path.string());
}

inline void write_ppm(const Image& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCategory::io, "cannot open for writing: " + path.string());
  out << "P6\n" << img.width() << " " << img.height() << "\n255\n";
  for (float v : img.data())
    out.put(static_cast<char>(static_cast<unsigned char>(std::lround(static_cast<double>(v) * 255.0))));
  if (!out) fail(ErrorCategory::io, "write failed: " + path.string());
}

}  // namespace invlab
