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
#include <optional>
#include <string>
#include <vector>

#include "invlab/transforms/ops.hpp"

namespace invlab {

struct ColorJitterParams {
  double brightness = 0.4;
  double contrast = 0.4;
  double saturation = 0.4;
  double hue = 0.1;
};

/// Samples brightness/contrast/saturation factors from [1-m, 1+m] and a hue
/// offset from [-hue, hue] turns, then applies the four adjustments in a
/// random order. A zero maximum disables that adjustment.
inline Image color_jitter(const Image& img, const ColorJitterParams& p, SeededRng& rng) {
  require(p.brightness >= 0 && p.brightness < 1 && p.contrast >= 0 && p.contrast < 1 && p.saturation >= 0 &&
              p.saturation < 1 && p.hue >= 0 && p.hue < 1,
          ErrorCategory::parameter, "color jitter maxima must lie in [0, 1)");
  std::vector<int> order = {0, 1, 2, 3};
  rng.shuffle(order);
  const double b = p.brightness > 0 ? rng.uniform(1 - p.brightness, 1 + p.brightness) : 1.0;
  const double c = p.contrast > 0 ? rng.uniform(1 - p.contrast, 1 + p.contrast) : 1.0;
  const double s = p.saturation > 0 ? rng.uniform(1 - p.saturation, 1 + p.saturation) : 1.0;
  const double h = p.hue > 0 ? rng.uniform(-p.hue, p.hue) : 0.0;
  Image out = img;
  for (int step : order) {
    switch (step) {
      case 0: if (b != 1.0) out = ops::brightness(out, b); break;
      case 1: out = ops::contrast(out, c); break;
      case 2: out = ops::saturation(out, s); break;
      default: out = ops::hue_shift(out, h); break;
    }
  }
  return out;
}

enum class StepKind {
  random_resized_crop,
  resize_center_crop,
  color_jitter,
  random_grayscale,
  gaussian_blur,
  random_horizontal_flip,
  normalize,
};

struct PolicyStep {
  StepKind kind = StepKind::normalize;
  double probability = 1.0;
  std::array<double, 2> scale = {0.2, 1.0};              // random_resized_crop area fraction
  std::array<double, 2> ratio = {3.0 / 4.0, 4.0 / 3.0};  // random_resized_crop aspect
  ColorJitterParams jitter;
  std::array<double, 2> sigma = {0.1, 2.0};  // gaussian_blur
  std::array<double, 3> mean = {0.485, 0.456, 0.406};
  std::array<double, 3> std = {0.229, 0.224, 0.225};
};

struct Normalization {
  std::array<double, 3> mean = {0.485, 0.456, 0.406};
  std::array<double, 3> std = {0.229, 0.224, 0.225};
  friend bool operator==(const Normalization&, const Normalization&) = default;
};

/// Ordered, probabilistic augmentation pipeline. `output_size` is the side
/// of the square crops; 0 keeps the input size. The normalize step does not
/// alter the image (images stay in [0, 1]); it records the constants the
/// encoder applies to its input.
struct AugmentationPolicy {
  std::string name;
  int output_size = 224;
  std::vector<PolicyStep> steps;

  std::optional<Normalization> normalization() const {
    for (const auto& s : steps)
      if (s.kind == StepKind::normalize) return Normalization{s.mean, s.std};
    return std::nullopt;
  }
};

namespace detail {

inline PolicyStep step(StepKind k, double p = 1.0) {
  PolicyStep s;
  s.kind = k;
  s.probability = p;
  return s;
}

/// Crop window selection of torchvision's RandomResizedCrop: ten attempts at
/// a random area/aspect, then a centre crop with clamped aspect.
inline std::array<int, 4> sample_crop_box(int width, int height, const PolicyStep& s, SeededRng& rng) {
  const double area = static_cast<double>(width) * height;
  const double log_lo = std::log(s.ratio[0]), log_hi = std::log(s.ratio[1]);
  for (int attempt = 0; attempt < 10; ++attempt) {
    const double target = area * rng.uniform(s.scale[0], s.scale[1]);
    const double aspect = std::exp(rng.uniform(log_lo, log_hi));
    const int w = static_cast<int>(std::lround(std::sqrt(target * aspect)));
    const int h = static_cast<int>(std::lround(std::sqrt(target / aspect)));
    if (w > 0 && h > 0 && w <= width && h <= height) {
      const int top = static_cast<int>(rng.between(0, height - h));
      const int left = static_cast<int>(rng.between(0, width - w));
      return {left, top, w, h};
    }
  }
  const double in_ratio = static_cast<double>(width) / height;
  int w = width, h = height;
  if (in_ratio < s.ratio[0]) {
    h = static_cast<int>(std::lround(w / s.ratio[0]));
  } else if (in_ratio > s.ratio[1]) {
    w = static_cast<int>(std::lround(h * s.ratio[1]));
  }
  return {(width - w) / 2, (height - h) / 2, w, h};
}

}  // namespace detail

inline AugmentationPolicy default_policy(int output_size = 224) {
  using detail::step;
  return {"Default",
          output_size,
          {step(StepKind::random_resized_crop), step(StepKind::color_jitter, 0.8),
           step(StepKind::random_grayscale, 0.2), step(StepKind::gaussian_blur, 0.5),
           step(StepKind::random_horizontal_flip, 0.5), step(StepKind::normalize)}};
}

inline AugmentationPolicy spatial_policy(int output_size = 224) {
  using detail::step;
  return {"Spatial",
          output_size,
          {step(StepKind::random_resized_crop), step(StepKind::random_horizontal_flip, 0.5),
           step(StepKind::normalize)}};
}

inline AugmentationPolicy appearance_policy(int output_size = 224) {
  using detail::step;
  return {"Appearance",
          output_size,
          {step(StepKind::resize_center_crop), step(StepKind::color_jitter, 0.8),
           step(StepKind::random_grayscale, 0.2), step(StepKind::gaussian_blur, 0.5), step(StepKind::normalize)}};
}

/// Supervised baseline: crop, horizontal flip and colour jitter.
inline AugmentationPolicy supervised_policy(int output_size = 224) {
  using detail::step;
  return {"Supervised",
          output_size,
          {step(StepKind::random_resized_crop), step(StepKind::random_horizontal_flip, 0.5),
           step(StepKind::color_jitter, 0.8), step(StepKind::normalize)}};
}

/// No augmentation at all; used by the Random baseline.
inline AugmentationPolicy identity_policy(int output_size = 224) {
  return {"None", output_size, {detail::step(StepKind::resize_center_crop), detail::step(StepKind::normalize)}};
}

inline AugmentationPolicy builtin_policy(const std::string& name, int output_size = 224) {
  if (name == "Default") return default_policy(output_size);
  if (name == "Spatial") return spatial_policy(output_size);
  if (name == "Appearance") return appearance_policy(output_size);
  if (name == "Supervised") return supervised_policy(output_size);
  if (name == "None") return identity_policy(output_size);
  fail(ErrorCategory::config, "unknown augmentation policy: " + name);
}

/// Runs the policy's steps in order; each step fires with its probability.
inline Image apply_policy(const Image& img, const AugmentationPolicy& policy, SeededRng& rng) {
  Image out = img;
  for (const auto& s : policy.steps) {
    if (s.kind == StepKind::normalize) continue;
    if (s.probability < 1.0 && !rng.bernoulli(s.probability)) continue;
    const int size = policy.output_size > 0 ? policy.output_size : out.width();
    switch (s.kind) {
      case StepKind::random_resized_crop: {
        const auto box = detail::sample_crop_box(out.width(), out.height(), s, rng);
        out = ops::crop_resize(out, box[0], box[1], box[2], box[3], size, size);
        break;
      }
      case StepKind::resize_center_crop: out = ops::resize_center_crop(out, size); break;
      case StepKind::color_jitter: out = color_jitter(out, s.jitter, rng); break;
      case StepKind::random_grayscale: out = ops::grayscale(out); break;
      case StepKind::gaussian_blur: out = ops::gaussian_blur(out, rng.uniform(s.sigma[0], s.sigma[1])); break;
      case StepKind::random_horizontal_flip: out = ops::flip_horizontal(out); break;
      case StepKind::normalize: break;
    }
  }
  return out;
}

}  // namespace invlab
