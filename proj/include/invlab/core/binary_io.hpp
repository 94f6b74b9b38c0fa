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

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include "invlab/core/error.hpp"

namespace invlab::binary {

/// Append-only little-endian byte sink.
class Writer {
 public:
  void bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }

  template <class UInt>
  void uint(UInt v) {
    for (std::size_t i = 0; i < sizeof(UInt); ++i)
      buf_.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xffu));
  }

  void f32(float v) { uint(std::bit_cast<std::uint32_t>(v)); }

  const std::vector<char>& buffer() const noexcept { return buf_; }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCategory::io, "cannot open for writing: " + path.string());
    out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    if (!out) fail(ErrorCategory::io, "write failed: " + path.string());
  }

 private:
  std::vector<char> buf_;
};

/// Bounds-checked little-endian byte source; over-reads raise corruption errors.
class Reader {
 public:
  Reader(std::vector<char> data, std::string origin)
      : data_(std::move(data)), origin_(std::move(origin)) {}

  static Reader open(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCategory::io, "cannot open for reading: " + path.string());
    std::vector<char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return Reader(std::move(data), path.string());
  }

  std::string bytes(std::size_t n) {
    need(n);
    std::string s(data_.data() + pos_, n);
    pos_ += n;
    return s;
  }

  template <class UInt>
  UInt uint() {
    need(sizeof(UInt));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(UInt); ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += sizeof(UInt);
    return static_cast<UInt>(v);
  }

  float f32() { return std::bit_cast<float>(uint<std::uint32_t>()); }

  std::size_t remaining() const noexcept { return data_.size() - pos_; }
  const std::string& origin() const noexcept { return origin_; }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n)
      fail(ErrorCategory::corruption, "truncated data in " + origin_);
  }

  std::vector<char> data_;
  std::string origin_;
  std::size_t pos_ = 0;
};

}  // namespace invlab::binary
