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

// ENCK checkpoint layout (little-endian):
//   "ENCK" | u16 version | u32 json length | json (config + meta) |
//   u32 block count | per block: u32 name length, name, u64 rows, u64 cols,
//   rows*cols f32 values in row-major order

#include <filesystem>

#include "json.hpp"
#include "invlab/core/binary_io.hpp"
#include "invlab/encoder/encoder.hpp"

namespace invlab {

inline constexpr std::string_view kCheckpointMagic = "ENCK";
inline constexpr std::uint16_t kCheckpointVersion = 1;

inline nlohmann::json encoder_config_to_json(const EncoderConfig& c) {
  return {{"input_size", c.input_size},
          {"channels", c.channels},
          {"kernel", c.kernel},
          {"stride", c.stride},
          {"nonlinearity", c.nonlinearity},
          {"coord_channels", c.coord_channels},
          {"head_dims", c.head_dims},
          {"mean", c.normalization.mean},
          {"std", c.normalization.std}};
}

/// Missing keys keep their defaults.
inline EncoderConfig encoder_config_from_json(const nlohmann::json& j) {
  try {
    EncoderConfig c;
    c.input_size = j.value("input_size", c.input_size);
    c.channels = j.value("channels", c.channels);
    c.kernel = j.value("kernel", c.kernel);
    c.stride = j.value("stride", c.stride);
    c.nonlinearity = j.value("nonlinearity", c.nonlinearity);
    c.coord_channels = j.value("coord_channels", c.coord_channels);
    c.head_dims = j.value("head_dims", c.head_dims);
    c.normalization.mean = j.value("mean", c.normalization.mean);
    c.normalization.std = j.value("std", c.normalization.std);
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::config, std::string("invalid encoder config: ") + e.what());
  }
}

inline std::vector<char> encode_checkpoint(const Encoder& enc) {
  binary::Writer w;
  w.bytes(kCheckpointMagic);
  w.uint<std::uint16_t>(kCheckpointVersion);
  const std::string json = nlohmann::json{{"config", encoder_config_to_json(enc.config())}, {"meta", enc.meta()}}.dump();
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(json.size()));
  w.bytes(json);
  const auto& p = enc.weights();
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(p.size()));
  for (std::size_t i = 0; i < p.size(); ++i) {
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(p.names[i].size()));
    w.bytes(p.names[i]);
    const auto& t = p.tensors[i];
    w.uint<std::uint64_t>(static_cast<std::uint64_t>(t.rows()));
    w.uint<std::uint64_t>(static_cast<std::uint64_t>(t.cols()));
    for (Eigen::Index r = 0; r < t.rows(); ++r)
      for (Eigen::Index c = 0; c < t.cols(); ++c) w.f32(t(r, c));
  }
  return w.buffer();
}

inline void write_checkpoint(const Encoder& enc, const std::filesystem::path& path) {
  binary::Writer w;
  const auto bytes = encode_checkpoint(enc);
  w.bytes(std::string_view(bytes.data(), bytes.size()));
  w.save(path);
}

inline Encoder decode_checkpoint(binary::Reader r) {
  require(r.bytes(4) == kCheckpointMagic, ErrorCategory::format, r.origin() + ": not an ENCK checkpoint");
  const auto version = r.uint<std::uint16_t>();
  require(version == kCheckpointVersion, ErrorCategory::format,
          r.origin() + ": unsupported checkpoint version " + std::to_string(version));
  const auto json_len = r.uint<std::uint32_t>();
  nlohmann::json head;
  try {
    head = nlohmann::json::parse(r.bytes(json_len));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::corruption, r.origin() + ": bad checkpoint header: " + e.what());
  }
  const auto cfg = encoder_config_from_json(head.at("config"));
  Metadata meta = head.value("meta", Metadata{});
  nn::Params<float> p;
  const auto blocks = r.uint<std::uint32_t>();
  for (std::uint32_t b = 0; b < blocks; ++b) {
    std::string name = r.bytes(r.uint<std::uint32_t>());
    const auto rows = r.uint<std::uint64_t>(), cols = r.uint<std::uint64_t>();
    require(rows * cols * 4 <= r.remaining(), ErrorCategory::corruption, r.origin() + ": truncated weight block");
    nn::Matrix<float> t(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < t.rows(); ++i)
      for (Eigen::Index j = 0; j < t.cols(); ++j) {
        t(i, j) = r.f32();
        require(std::isfinite(t(i, j)), ErrorCategory::corruption, r.origin() + ": non-finite weight in " + name);
      }
    p.add(std::move(name), std::move(t));
  }
  require(r.remaining() == 0, ErrorCategory::corruption, r.origin() + ": trailing bytes after checkpoint");
  return Encoder(cfg, std::move(p), std::move(meta));
}

inline Encoder read_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(binary::Reader::open(path)); }

}  // namespace invlab
