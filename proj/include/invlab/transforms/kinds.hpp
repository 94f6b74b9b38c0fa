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

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "invlab/core/error.hpp"

namespace invlab {

enum class TransformKind {
  resized_crop,
  h_flip,
  v_flip,
  scale,
  shear,
  rotation,
  translation,
  deform,
  grayscale,
  brightness,
  contrast,
  saturation,
  hue,
  blur,
  sharpness,
  equalize,
  posterize,
  invert,
};

inline constexpr std::size_t kTransformCount = 18;

inline constexpr std::array<TransformKind, kTransformCount> kAllTransforms = {
    TransformKind::resized_crop, TransformKind::h_flip,     TransformKind::v_flip,
    TransformKind::scale,        TransformKind::shear,      TransformKind::rotation,
    TransformKind::translation,  TransformKind::deform,     TransformKind::grayscale,
    TransformKind::brightness,   TransformKind::contrast,   TransformKind::saturation,
    TransformKind::hue,          TransformKind::blur,       TransformKind::sharpness,
    TransformKind::equalize,     TransformKind::posterize,  TransformKind::invert,
};

enum class TransformFamily { spatial, appearance };

inline constexpr std::string_view transform_name(TransformKind k) {
  constexpr std::array<std::string_view, kTransformCount> names = {
      "resized_crop", "h_flip",     "v_flip",     "scale", "shear", "rotation",
      "translation",  "deform",     "grayscale",  "brightness", "contrast", "saturation",
      "hue",          "blur",       "sharpness",  "equalize", "posterize", "invert"};
  return names[static_cast<std::size_t>(k)];
}

inline TransformKind parse_transform(std::string_view name) {
  for (auto k : kAllTransforms)
    if (transform_name(k) == name) return k;
  fail(ErrorCategory::config, "unknown transform kind: " + std::string(name));
}

/// Crop, flips, scale, shear, rotation, translation and deform move pixels;
/// the rest change values in place.
inline constexpr TransformFamily transform_family(TransformKind k) {
  return static_cast<std::size_t>(k) <= static_cast<std::size_t>(TransformKind::deform)
             ? TransformFamily::spatial
             : TransformFamily::appearance;
}

inline constexpr std::string_view family_name(TransformFamily f) {
  return f == TransformFamily::spatial ? "spatial" : "appearance";
}

/// Transform parameter. Component meaning per kind:
///   resized_crop: anchor x, anchor y (pixels on a 256-wide source), width and height fractions
///   shear: horizontal, vertical degrees;  translation: dx, dy pixels
///   scale/brightness/contrast/saturation/sharpness: factor;  rotation: degrees
///   deform: field sigma (256-wide units);  hue: rotation as a fraction of the circle
///   blur: sigma pixels;  posterize: bits kept
///   flips, grayscale, equalize, invert: no components
struct TransformParam {
  std::array<double, 4> values{};
  std::size_t size = 0;

  TransformParam() = default;
  TransformParam(std::initializer_list<double> v) : size(v.size()) {
    std::size_t i = 0;
    for (double x : v) values[i++] = x;
  }

  double operator[](std::size_t i) const noexcept { return values[i]; }

  friend bool operator==(const TransformParam& a, const TransformParam& b) {
    if (a.size != b.size) return false;
    for (std::size_t i = 0; i < a.size; ++i)
      if (a.values[i] != b.values[i]) return false;
    return true;
  }

  std::string to_string() const {
    std::string out;
    for (std::size_t i = 0; i < size; ++i) {
      if (i) out += ";";
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.6g", values[i]);
      out += buf;
    }
    return out;
  }
};

struct ParamRange {
  double lo;
  double hi;
};

/// Documented range for each parameter component.
inline std::vector<ParamRange> param_ranges(TransformKind k) {
  switch (k) {
    case TransformKind::resized_crop: return {{0, 64}, {0, 64}, {0.25, 0.75}, {0.25, 0.75}};
    case TransformKind::scale: return {{0.25, 2.0}};
    case TransformKind::shear: return {{-160, 160}, {-160, 160}};
    case TransformKind::rotation: return {{0, 360}};
    case TransformKind::translation: return {{-16, 16}, {-16, 16}};
    case TransformKind::deform: return {{10, 50}};
    case TransformKind::brightness:
    case TransformKind::contrast:
    case TransformKind::saturation: return {{0.25, 5.0}};
    case TransformKind::hue: return {{0.0, 1.0}};
    case TransformKind::blur: return {{1e-5, 20}};
    case TransformKind::sharpness: return {{1, 30}};
    case TransformKind::posterize: return {{1, 8}};
    default: return {};
  }
}

/// The neutral parameter of a kind, where one exists in its range.
inline TransformParam identity_param(TransformKind k) {
  switch (k) {
    case TransformKind::scale: return {1.0};
    case TransformKind::shear: return {0.0, 0.0};
    case TransformKind::rotation: return {0.0};
    case TransformKind::translation: return {0.0, 0.0};
    case TransformKind::brightness:
    case TransformKind::contrast:
    case TransformKind::saturation:
    case TransformKind::sharpness: return {1.0};
    case TransformKind::hue: return {0.0};
    case TransformKind::posterize: return {8.0};
    default: fail(ErrorCategory::parameter, "transform has no identity parameter: " + std::string(transform_name(k)));
  }
}

inline void check_param(TransformKind k, const TransformParam& p) {
  const auto ranges = param_ranges(k);
  require(p.size == ranges.size(), ErrorCategory::parameter,
          std::string(transform_name(k)) + " expects " + std::to_string(ranges.size()) + " parameter(s), got " +
              std::to_string(p.size));
  for (std::size_t i = 0; i < ranges.size(); ++i)
    require(p[i] >= ranges[i].lo && p[i] <= ranges[i].hi, ErrorCategory::parameter,
            std::string(transform_name(k)) + " parameter " + p.to_string() + " outside its range");
  if (k == TransformKind::posterize)
    require(p[0] == static_cast<int>(p[0]), ErrorCategory::parameter, "posterize bits must be an integer");
}

namespace detail {

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  for (std::size_t i = 0; i < n; ++i)
    out[i] = i + 1 == n ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

}  // namespace detail

/// Evaluation grid. Continuous scalar kinds get `points` evenly spaced
/// values over their range (inclusive). Two-component kinds (shear,
/// translation) use a sqrt(points) x sqrt(points) lattice and the crop uses a
/// points^(1/4) lattice over its four components, so all continuous kinds
/// have `points` entries when it is a perfect fourth power (256 by default).
/// posterize: bits 1..7; hue: 5 rotations k/5; one-shot kinds: one entry.
inline std::vector<TransformParam> sample_grid(TransformKind k, std::size_t points = 256) {
  require(points >= 1, ErrorCategory::parameter, "grid needs at least one point");
  const auto ranges = param_ranges(k);
  std::vector<TransformParam> grid;
  switch (k) {
    case TransformKind::h_flip:
    case TransformKind::v_flip:
    case TransformKind::grayscale:
    case TransformKind::equalize:
    case TransformKind::invert:
      grid.emplace_back();
      return grid;
    case TransformKind::posterize:
      for (int b = 1; b <= 7; ++b) grid.push_back({static_cast<double>(b)});
      return grid;
    case TransformKind::hue:
      for (int i = 0; i < 5; ++i) grid.push_back({i / 5.0});
      return grid;
    case TransformKind::shear:
    case TransformKind::translation: {
      const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(points))));
      const auto a = detail::linspace(ranges[0].lo, ranges[0].hi, std::max<std::size_t>(side, 1));
      const auto b = detail::linspace(ranges[1].lo, ranges[1].hi, std::max<std::size_t>(side, 1));
      for (double y : b)
        for (double x : a) grid.push_back({x, y});
      return grid;
    }
    case TransformKind::resized_crop: {
      const auto side = static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(points), 0.25)));
      const auto anchors = detail::linspace(0, 64, std::max<std::size_t>(side, 1));
      const auto fracs = detail::linspace(0.25, 0.75, std::max<std::size_t>(side, 1));
      for (double ay : anchors)
        for (double ax : anchors)
          for (double fh : fracs)
            for (double fw : fracs) grid.push_back({ax, ay, fw, fh});
      return grid;
    }
    default: {
      for (double v : detail::linspace(ranges[0].lo, ranges[0].hi, points)) grid.push_back({v});
      return grid;
    }
  }
}

}  // namespace invlab
