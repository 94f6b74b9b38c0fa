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

#include <cmath>
#include <numbers>

#include "invlab/transforms/kinds.hpp"
#include "invlab/transforms/ops.hpp"

namespace invlab {

/// Elastic-deform displacement magnitude in pixels on a 256-wide image;
/// scaled linearly with the actual width (as is the field sigma).
inline constexpr double kDeformAlpha256 = 34.0;

/// Applies one evaluation transform. The output always has the input's
/// size. `rng` is only consumed by deform.
inline Image apply_transform(const Image& img, TransformKind kind, const TransformParam& phi, SeededRng& rng) {
  check_param(kind, phi);
  const double w = img.width(), h = img.height();
  constexpr double deg = std::numbers::pi / 180.0;
  switch (kind) {
    case TransformKind::resized_crop: {
      const double sx = w / 256.0, sy = h / 256.0;
      return ops::crop_resize(img, phi[0] * sx, phi[1] * sy, phi[2] * w, phi[3] * h, img.width(), img.height());
    }
    case TransformKind::h_flip: return ops::flip_horizontal(img);
    case TransformKind::v_flip: return ops::flip_vertical(img);
    case TransformKind::scale: {
      if (phi[0] == 1.0) return img;
      const double inv = 1.0 / phi[0];
      return ops::warp_affine(img, {inv, 0, 0, inv, 0, 0});
    }
    case TransformKind::shear: {
      if (phi[0] == 0.0 && phi[1] == 0.0) return img;
      // Forward map: horizontal shear then vertical shear, [[1, a], [b, 1 + ab]]; det = 1.
      const double a = std::tan(phi[0] * deg), b = std::tan(phi[1] * deg);
      return ops::warp_affine(img, {1 + a * b, -a, -b, 1, 0, 0});
    }
    case TransformKind::rotation: {
      // Rotation about the image centre, clockwise on screen (y down).
      const double t = phi[0] * deg;
      const double c = std::cos(t), s = std::sin(t);
      return ops::warp_affine(img, {c, s, -s, c, 0, 0});
    }
    case TransformKind::translation:
      return ops::warp_affine(img, {1, 0, 0, 1, -phi[0], -phi[1]});
    case TransformKind::deform: {
      const double k = w / 256.0;
      return ops::elastic_deform(img, phi[0] * k, kDeformAlpha256 * k, rng);
    }
    case TransformKind::grayscale: return ops::grayscale(img);
    case TransformKind::brightness: return phi[0] == 1.0 ? img : ops::brightness(img, phi[0]);
    case TransformKind::contrast: return ops::contrast(img, phi[0]);
    case TransformKind::saturation: return ops::saturation(img, phi[0]);
    case TransformKind::hue: return ops::hue_shift(img, phi[0]);
    case TransformKind::blur: return ops::gaussian_blur(img, phi[0]);
    case TransformKind::sharpness: return ops::sharpness(img, phi[0]);
    case TransformKind::equalize: return ops::equalize(img);
    case TransformKind::posterize: return ops::posterize(img, static_cast<int>(phi[0]));
    case TransformKind::invert: return ops::invert(img);
  }
  return img;
}

}  // namespace invlab
