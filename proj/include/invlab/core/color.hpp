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
#include <array>
#include <cmath>

namespace invlab::color {

using Rgb = std::array<double, 3>;

/// ITU-R 601 luma weights (the grayscale convention of PIL/torchvision).
inline double luminance(double r, double g, double b) noexcept {
  if (r == g && g == b) return r;
  return 0.299 * r + 0.587 * g + 0.114 * b;
}

/// HSV with all components in [0, 1]; hue wraps at 1.
inline Rgb rgb_to_hsv(const Rgb& rgb) noexcept {
  const double r = rgb[0], g = rgb[1], b = rgb[2];
  const double maxc = std::max({r, g, b});
  const double minc = std::min({r, g, b});
  const double v = maxc;
  if (maxc == minc) return {0.0, 0.0, v};
  const double delta = maxc - minc;
  const double s = delta / maxc;
  double h;
  if (maxc == r) {
    h = (g - b) / delta;
  } else if (maxc == g) {
    h = 2.0 + (b - r) / delta;
  } else {
    h = 4.0 + (r - g) / delta;
  }
  h /= 6.0;
  h -= std::floor(h);
  return {h, s, v};
}

inline Rgb hsv_to_rgb(const Rgb& hsv) noexcept {
  const double h = hsv[0] - std::floor(hsv[0]);
  const double s = hsv[1];
  const double v = hsv[2];
  if (s <= 0.0) return {v, v, v};
  const double sector = h * 6.0;
  const int i = static_cast<int>(std::floor(sector)) % 6;
  const double f = sector - std::floor(sector);
  const double p = v * (1.0 - s);
  const double q = v * (1.0 - s * f);
  const double t = v * (1.0 - s * (1.0 - f));
  switch (i) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

}  // namespace invlab::color
