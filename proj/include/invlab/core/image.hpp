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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "invlab/core/error.hpp"

namespace invlab {

/// Owned RGB raster, row-major, interleaved channels, values in [0, 1].
///
/// Values are stored on the 2^-24 lattice. Every float in [0, 1] on that
/// lattice has an exactly representable complement 1 - v, which keeps
/// colour inversion an exact involution.
class Image {
 public:
  static constexpr int kChannels = 3;
  static constexpr double kLattice = 16777216.0;  // 2^24

  Image() = default;

  /// Uniform image filled with (r, g, b).
  Image(int width, int height, float r = 0.f, float g = 0.f, float b = 0.f)
      : width_(width), height_(height) {
    require(width > 0 && height > 0, ErrorCategory::validation,
            "image dimensions must be positive, got " + std::to_string(width) + "x" +
                std::to_string(height));
    data_.resize(static_cast<std::size_t>(width) * height * kChannels);
    const float rgb[3] = {snap(r), snap(g), snap(b)};
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] = rgb[i % 3];
    require(in_range(rgb[0]) && in_range(rgb[1]) && in_range(rgb[2]), ErrorCategory::validation,
            "image fill colour outside [0,1]");
  }

  /// Takes ownership of raw values; every value must be finite and in [0, 1].
  Image(int width, int height, std::vector<float> data)
      : width_(width), height_(height), data_(std::move(data)) {
    require(width > 0 && height > 0, ErrorCategory::validation, "image dimensions must be positive");
    require(data_.size() == static_cast<std::size_t>(width) * height * kChannels,
            ErrorCategory::validation,
            "image data length " + std::to_string(data_.size()) + " != width*height*3");
    for (float& v : data_) {
      require(in_range(v), ErrorCategory::validation, "image value outside [0,1] or not finite");
      v = snap(v);
    }
  }

  /// Clamps each value into [0, 1]; non-finite values are rejected.
  static Image from_unclamped(int width, int height, std::vector<double> const& values) {
    std::vector<float> data(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      require(std::isfinite(values[i]), ErrorCategory::validation, "non-finite pixel value");
      data[i] = static_cast<float>(std::clamp(values[i], 0.0, 1.0));
    }
    return Image(width, height, std::move(data));
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width_) * height_; }

  std::span<const float> data() const noexcept { return data_; }

  float at(int x, int y, int c) const noexcept {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * kChannels + c];
  }

  /// Edge-replicating accessor.
  float clamped_at(int x, int y, int c) const noexcept {
    return at(std::clamp(x, 0, width_ - 1), std::clamp(y, 0, height_ - 1), c);
  }

  /// Values widened to double; the usual working buffer for transforms.
  std::vector<double> to_double() const { return {data_.begin(), data_.end()}; }

  friend bool operator==(const Image& a, const Image& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ && a.data_ == b.data_;
  }

 private:
  static bool in_range(float v) noexcept { return std::isfinite(v) && v >= 0.f && v <= 1.f; }
  static float snap(float v) noexcept {
    return static_cast<float>(std::nearbyint(static_cast<double>(v) * kLattice) / kLattice);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<float> data_;
};

/// Largest absolute per-value difference; both images must share a shape.
inline double max_abs_diff(const Image& a, const Image& b) {
  require(a.width() == b.width() && a.height() == b.height(), ErrorCategory::validation,
          "image shapes differ");
  double worst = 0.0;
  auto da = a.data();
  auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i)
    worst = std::max(worst, std::abs(static_cast<double>(da[i]) - db[i]));
  return worst;
}

}  // namespace invlab
