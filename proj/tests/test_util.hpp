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

#include <atomic>
#include <cmath>
#include <filesystem>
#include <string>

#include <unistd.h>

#include "invlab/core/image.hpp"

namespace invlab::testing {

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("invlab_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

struct Point {
  double x = 0;
  double y = 0;
};

/// Centroid of pixels whose colour distance from the top-left (background)
/// pixel exceeds half the largest such distance in the image.
inline Point foreground_centroid(const Image& img) {
  auto dist = [&](int x, int y) {
    double d = 0;
    for (int c = 0; c < 3; ++c) d += std::abs(static_cast<double>(img.at(x, y, c)) - img.at(0, 0, c));
    return d;
  };
  double peak = 0;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) peak = std::max(peak, dist(x, y));
  double sx = 0, sy = 0, n = 0;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      if (dist(x, y) > 0.5 * peak) {
        sx += x;
        sy += y;
        n += 1;
      }
  return {sx / n, sy / n};
}

}  // namespace invlab::testing
