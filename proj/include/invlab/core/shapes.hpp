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
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "invlab/core/color.hpp"
#include "invlab/core/dataset.hpp"
#include "invlab/core/rng.hpp"

namespace invlab {

enum class ShapeKind { square, circle, triangle, cross, ring, bar, ell, dot };

inline constexpr std::array<std::string_view, 8> kShapeNames = {
    "square", "circle", "triangle", "cross", "ring", "bar", "ell", "dot"};

/// Regression factor columns produced by make_shapes_dataset, all in [0, 1].
inline const std::vector<std::string> kShapeFactorNames = {
    "position_x", "position_y", "rotation", "scale", "object_hue", "background_hue"};

struct ShapesConfig {
  int width = 64;
  int height = 64;
  int classes = 8;  // first `classes` entries of ShapeKind
  double min_scale = 0.10;  // shape half-extent as a fraction of the image width
  double max_scale = 0.20;
  double object_saturation = 0.85;
  double object_value = 0.95;
  double background_saturation = 0.35;
  double background_value = 0.45;
  int supersample = 3;

  // Fixed factors override the random draw. Positions are in pixels,
  // rotation in radians, scale as a fraction of width, hues in [0, 1).
  std::optional<int> fixed_class;
  std::optional<double> fixed_x;
  std::optional<double> fixed_y;
  std::optional<double> fixed_rotation;
  std::optional<double> fixed_scale;
  std::optional<double> fixed_object_hue;
  std::optional<double> fixed_background_hue;
};

namespace detail {

// Offset that moves the L's area centroid onto the origin.
// Arms: [-0.8,-0.3]x[-0.8,0.8] (area 0.8) and [-0.3,0.8]x[-0.8,-0.3] (area 0.55).
inline constexpr double kEllCentroid = (0.8 * -0.55 + 0.55 * 0.25) / 1.35;
inline constexpr double kEllCentroidV = (0.55 * -0.55) / 1.35;

/// Point-in-shape in unit shape coordinates; every shape has its area
/// centroid at the origin and fits inside radius 1.2.
inline bool inside_shape(ShapeKind kind, double u, double v) noexcept {
  switch (kind) {
    case ShapeKind::square:
      return std::abs(u) <= 0.8 && std::abs(v) <= 0.8;
    case ShapeKind::circle:
      return u * u + v * v <= 0.81;
    case ShapeKind::triangle: {
      // Equilateral, circumradius 1, inradius 0.5, one vertex pointing up (-v).
      constexpr double c = 0.8660254037844386;  // cos 30deg
      return v <= 0.5 && (c * u - 0.5 * v) <= 0.5 && (-c * u - 0.5 * v) <= 0.5;
    }
    case ShapeKind::cross:
      return (std::abs(u) <= 0.3 && std::abs(v) <= 0.9) || (std::abs(v) <= 0.3 && std::abs(u) <= 0.9);
    case ShapeKind::ring: {
      const double r2 = u * u + v * v;
      return r2 >= 0.55 * 0.55 && r2 <= 0.95 * 0.95;
    }
    case ShapeKind::bar:
      return std::abs(u) <= 0.95 && std::abs(v) <= 0.25;
    case ShapeKind::ell: {
      const double x = u + kEllCentroid;
      const double y = v + kEllCentroidV;
      const bool vertical = x >= -0.8 && x <= -0.3 && y >= -0.8 && y <= 0.8;
      const bool horizontal = x >= -0.3 && x <= 0.8 && y >= -0.8 && y <= -0.3;
      return vertical || horizontal;
    }
    case ShapeKind::dot: {
      const double du = std::abs(u) - 0.5;
      const double dv = std::abs(v) - 0.5;
      return du * du + dv * dv <= 0.09;
    }
  }
  return false;
}

}  // namespace detail

struct ShapeFactors {
  int shape = 0;
  double x = 0, y = 0, rotation = 0, scale = 0, object_hue = 0, background_hue = 0;
};

/// Renders one shape with `supersample`^2 coverage sampling per pixel.
inline Image render_shape(const ShapesConfig& cfg, const ShapeFactors& f) {
  const int w = cfg.width, h = cfg.height;
  const auto obj = color::hsv_to_rgb({f.object_hue, cfg.object_saturation, cfg.object_value});
  const auto bg = color::hsv_to_rgb({f.background_hue, cfg.background_saturation, cfg.background_value});
  const double half_extent = f.scale * w;
  const double cr = std::cos(f.rotation), sr = std::sin(f.rotation);
  const int ss = std::max(1, cfg.supersample);
  const auto kind = static_cast<ShapeKind>(f.shape);
  std::vector<double> px(static_cast<std::size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int hits = 0;
      for (int sy = 0; sy < ss; ++sy) {
        for (int sx = 0; sx < ss; ++sx) {
          const double dx = x + (sx + 0.5) / ss - 0.5 - f.x;
          const double dy = y + (sy + 0.5) / ss - 0.5 - f.y;
          // Inverse rotation into shape coordinates.
          const double u = (cr * dx + sr * dy) / half_extent;
          const double v = (-sr * dx + cr * dy) / half_extent;
          hits += detail::inside_shape(kind, u, v) ? 1 : 0;
        }
      }
      const double cover = static_cast<double>(hits) / (ss * ss);
      for (int c = 0; c < 3; ++c)
        px[(static_cast<std::size_t>(y) * w + x) * 3 + c] = cover * obj[c] + (1.0 - cover) * bg[c];
    }
  }
  return Image::from_unclamped(w, h, px);
}

/// Procedural shapes corpus: one shape per image with random class, centre,
/// rotation, scale, object hue and background hue. Labels are the shape
/// class; factors are the generating parameters normalised to [0, 1].
inline LabeledDataset make_shapes_dataset(std::size_t n, std::uint64_t seed, const ShapesConfig& cfg = {}) {
  require(n >= 1, ErrorCategory::config, "shapes dataset needs n >= 1");
  require(cfg.width > 0 && cfg.height > 0, ErrorCategory::config, "shapes image size must be positive");
  require(cfg.classes >= 1 && cfg.classes <= static_cast<int>(kShapeNames.size()),
          ErrorCategory::config, "shapes class count must be in [1, 8]");
  require(cfg.min_scale > 0 && cfg.max_scale >= cfg.min_scale, ErrorCategory::config,
          "shapes scale range invalid");

  SeededRng rng(seed);
  LabeledDataset ds;
  ds.labels.emplace();
  ds.factors = Eigen::MatrixXd(static_cast<Eigen::Index>(n), 6);
  ds.factor_names = kShapeFactorNames;
  constexpr double kBoundRadius = 1.2;
  const double scale_span = cfg.max_scale - cfg.min_scale;
  for (std::size_t i = 0; i < n; ++i) {
    ShapeFactors f;
    // Every factor is drawn even when fixed so the stream layout is stable.
    const int drawn_class = static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.classes)));
    const double drawn_scale = rng.uniform(cfg.min_scale, cfg.max_scale);
    const double u_x = rng.uniform();
    const double u_y = rng.uniform();
    const double drawn_rot = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double drawn_obj = rng.uniform();
    const double drawn_bg = rng.uniform();

    f.shape = cfg.fixed_class.value_or(drawn_class);
    f.scale = cfg.fixed_scale.value_or(drawn_scale);
    const double margin = kBoundRadius * f.scale * cfg.width + 1.0;
    const double lo_x = std::min(margin, cfg.width / 2.0), hi_x = std::max(cfg.width - 1.0 - margin, lo_x);
    const double lo_y = std::min(margin, cfg.height / 2.0), hi_y = std::max(cfg.height - 1.0 - margin, lo_y);
    f.x = cfg.fixed_x.value_or(lo_x + (hi_x - lo_x) * u_x);
    f.y = cfg.fixed_y.value_or(lo_y + (hi_y - lo_y) * u_y);
    f.rotation = cfg.fixed_rotation.value_or(drawn_rot);
    f.object_hue = cfg.fixed_object_hue.value_or(drawn_obj);
    f.background_hue = cfg.fixed_background_hue.value_or(drawn_bg);

    ds.images.push_back(render_shape(cfg, f));
    ds.labels->push_back(f.shape);
    const auto r = static_cast<Eigen::Index>(i);
    (*ds.factors)(r, 0) = f.x / cfg.width;
    (*ds.factors)(r, 1) = f.y / cfg.height;
    (*ds.factors)(r, 2) = f.rotation / (2.0 * std::numbers::pi);
    (*ds.factors)(r, 3) = scale_span > 0 ? (f.scale - cfg.min_scale) / scale_span : 0.0;
    (*ds.factors)(r, 4) = f.object_hue;
    (*ds.factors)(r, 5) = f.background_hue;
  }
  return ds;
}

}  // namespace invlab
