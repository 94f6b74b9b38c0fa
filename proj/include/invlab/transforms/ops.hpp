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

// Primitive image operations shared by the evaluation transforms and the
// training augmentation policies. Geometric resampling is bilinear with edge
// replication; all outputs are clamped to [0, 1].

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "invlab/core/color.hpp"
#include "invlab/core/image.hpp"
#include "invlab/core/rng.hpp"

namespace invlab::ops {

struct Affine2 {
  // src = m * (dst - centre) + centre + offset
  double m00 = 1, m01 = 0, m10 = 0, m11 = 1;
  double ox = 0, oy = 0;
};

inline void bilinear(const Image& img, double sx, double sy, double out[3]) noexcept {
  const int w = img.width(), h = img.height();
  sx = std::clamp(sx, 0.0, static_cast<double>(w - 1));
  sy = std::clamp(sy, 0.0, static_cast<double>(h - 1));
  const int x0 = static_cast<int>(std::floor(sx));
  const int y0 = static_cast<int>(std::floor(sy));
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double fx = sx - x0, fy = sy - y0;
  for (int c = 0; c < 3; ++c) {
    const double top = img.at(x0, y0, c) + (fx == 0.0 ? 0.0 : fx * (img.at(x1, y0, c) - img.at(x0, y0, c)));
    const double bot = img.at(x0, y1, c) + (fx == 0.0 ? 0.0 : fx * (img.at(x1, y1, c) - img.at(x0, y1, c)));
    out[c] = fy == 0.0 ? top : top + fy * (bot - top);
  }
}

template <class SourceOf>
Image resample(const Image& img, int out_w, int out_h, SourceOf&& source_of) {
  std::vector<double> px(static_cast<std::size_t>(out_w) * out_h * 3);
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      double sx, sy;
      source_of(x, y, sx, sy);
      bilinear(img, sx, sy, &px[(static_cast<std::size_t>(y) * out_w + x) * 3]);
    }
  }
  return Image::from_unclamped(out_w, out_h, px);
}

inline Image warp_affine(const Image& img, const Affine2& a) {
  const double cx = (img.width() - 1) / 2.0, cy = (img.height() - 1) / 2.0;
  return resample(img, img.width(), img.height(), [&](int x, int y, double& sx, double& sy) {
    const double dx = x - cx, dy = y - cy;
    sx = a.m00 * dx + a.m01 * dy + cx + a.ox;
    sy = a.m10 * dx + a.m11 * dy + cy + a.oy;
  });
}

/// Resamples the source rectangle (x0, y0, w, h) onto an out_w x out_h grid
/// using pixel-centre alignment; the full rectangle at the same size is an
/// exact copy.
inline Image crop_resize(const Image& img, double x0, double y0, double w, double h, int out_w, int out_h) {
  const double kx = w / out_w, ky = h / out_h;
  return resample(img, out_w, out_h, [&](int x, int y, double& sx, double& sy) {
    sx = x0 + (x + 0.5) * kx - 0.5;
    sy = y0 + (y + 0.5) * ky - 0.5;
  });
}

/// Shorter side to `size`, then the central size x size window.
inline Image resize_center_crop(const Image& img, int size) {
  if (img.width() == size && img.height() == size) return img;
  const double s = static_cast<double>(size) / std::min(img.width(), img.height());
  const double w = size / s, h = size / s;
  return crop_resize(img, (img.width() - w) / 2.0, (img.height() - h) / 2.0, w, h, size, size);
}

inline Image flip_horizontal(const Image& img) {
  std::vector<float> out(img.data().size());
  const int w = img.width(), h = img.height();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) out[(static_cast<std::size_t>(y) * w + x) * 3 + c] = img.at(w - 1 - x, y, c);
  return Image(w, h, std::move(out));
}

inline Image flip_vertical(const Image& img) {
  std::vector<float> out(img.data().size());
  const int w = img.width(), h = img.height();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) out[(static_cast<std::size_t>(y) * w + x) * 3 + c] = img.at(x, h - 1 - y, c);
  return Image(w, h, std::move(out));
}

inline std::vector<double> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

/// Separable convolution of a w x h x channels buffer, edge replication.
inline std::vector<double> convolve_separable(const std::vector<double>& src, int w, int h, int channels,
                                              const std::vector<double>& kernel) {
  const int radius = static_cast<int>(kernel.size() / 2);
  std::vector<double> tmp(src.size()), out(src.size());
  auto idx = [&](int x, int y, int c) { return (static_cast<std::size_t>(y) * w + x) * channels + c; };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c) {
        double acc = 0;
        for (int k = -radius; k <= radius; ++k)
          acc += kernel[static_cast<std::size_t>(k + radius)] * src[idx(std::clamp(x + k, 0, w - 1), y, c)];
        tmp[idx(x, y, c)] = acc;
      }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c) {
        double acc = 0;
        for (int k = -radius; k <= radius; ++k)
          acc += kernel[static_cast<std::size_t>(k + radius)] * tmp[idx(x, std::clamp(y + k, 0, h - 1), c)];
        out[idx(x, y, c)] = acc;
      }
  return out;
}

inline Image gaussian_blur(const Image& img, double sigma) {
  return Image::from_unclamped(img.width(), img.height(),
                               convolve_separable(img.to_double(), img.width(), img.height(), 3,
                                                  gaussian_kernel(sigma)));
}

/// Elastic deformation: a uniform(-1, 1) displacement field per axis,
/// Gaussian-smoothed with `sigma_px`, scaled by `alpha_px`, then applied with
/// bilinear resampling.
inline Image elastic_deform(const Image& img, double sigma_px, double alpha_px, SeededRng& rng) {
  const int w = img.width(), h = img.height();
  std::vector<double> field(static_cast<std::size_t>(w) * h * 2);
  for (double& v : field) v = rng.uniform(-1.0, 1.0);
  const auto smooth = convolve_separable(field, w, h, 2, gaussian_kernel(sigma_px));
  return resample(img, w, h, [&](int x, int y, double& sx, double& sy) {
    const std::size_t i = (static_cast<std::size_t>(y) * w + x) * 2;
    sx = x + alpha_px * smooth[i];
    sy = y + alpha_px * smooth[i + 1];
  });
}

template <class PixelFn>
Image map_pixels(const Image& img, PixelFn&& fn) {
  auto px = img.to_double();
  for (std::size_t i = 0; i < px.size(); i += 3) {
    color::Rgb rgb{px[i], px[i + 1], px[i + 2]};
    rgb = fn(rgb);
    px[i] = rgb[0];
    px[i + 1] = rgb[1];
    px[i + 2] = rgb[2];
  }
  return Image::from_unclamped(img.width(), img.height(), px);
}

inline Image grayscale(const Image& img) {
  return map_pixels(img, [](const color::Rgb& p) {
    const double l = color::luminance(p[0], p[1], p[2]);
    return color::Rgb{l, l, l};
  });
}

inline Image brightness(const Image& img, double factor) {
  return map_pixels(img, [&](const color::Rgb& p) {
    return color::Rgb{p[0] * factor, p[1] * factor, p[2] * factor};
  });
}

/// Blend toward the mean luminance of the whole image.
inline Image contrast(const Image& img, double factor) {
  if (factor == 1.0) return img;
  const auto px = img.to_double();
  double mean = 0;
  for (std::size_t i = 0; i < px.size(); i += 3) mean += color::luminance(px[i], px[i + 1], px[i + 2]);
  mean /= static_cast<double>(img.pixel_count());
  return map_pixels(img, [&](const color::Rgb& p) {
    return color::Rgb{mean + factor * (p[0] - mean), mean + factor * (p[1] - mean), mean + factor * (p[2] - mean)};
  });
}

/// Blend toward each pixel's own gray level.
inline Image saturation(const Image& img, double factor) {
  if (factor == 1.0) return img;
  return map_pixels(img, [&](const color::Rgb& p) {
    const double l = color::luminance(p[0], p[1], p[2]);
    return color::Rgb{l + factor * (p[0] - l), l + factor * (p[1] - l), l + factor * (p[2] - l)};
  });
}

/// Rotates hue by `shift` turns (any real; taken modulo 1).
inline Image hue_shift(const Image& img, double shift) {
  if (shift - std::floor(shift) == 0.0) return img;
  return map_pixels(img, [&](const color::Rgb& p) {
    auto hsv = color::rgb_to_hsv(p);
    hsv[0] += shift;
    return color::hsv_to_rgb(hsv);
  });
}

/// Blend against a 3x3 smoothed copy (centre weight 5, neighbours 1, /13);
/// border pixels of the smoothed copy keep their original value.
inline Image sharpness(const Image& img, double factor) {
  if (factor == 1.0) return img;
  const int w = img.width(), h = img.height();
  const auto src = img.to_double();
  auto degenerate = src;
  for (int y = 1; y + 1 < h; ++y)
    for (int x = 1; x + 1 < w; ++x)
      for (int c = 0; c < 3; ++c) {
        double acc = 0;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) acc += (dx == 0 && dy == 0 ? 5.0 : 1.0) * img.at(x + dx, y + dy, c);
        degenerate[(static_cast<std::size_t>(y) * w + x) * 3 + c] = acc / 13.0;
      }
  std::vector<double> out(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) out[i] = degenerate[i] + factor * (src[i] - degenerate[i]);
  return Image::from_unclamped(w, h, out);
}

inline int quantize8(float v) noexcept { return static_cast<int>(std::lround(static_cast<double>(v) * 255.0)); }

/// Per-channel histogram equalisation on 8-bit levels: level q maps to
/// round(255 * cdf(q) / N). The map depends only on the cumulative count, so
/// equalising an equalised image is the identity.
inline Image equalize(const Image& img) {
  const std::size_t n = img.pixel_count();
  const auto src = img.data();
  std::vector<double> out(src.size());
  for (int c = 0; c < 3; ++c) {
    std::array<std::size_t, 256> hist{};
    for (std::size_t i = 0; i < n; ++i) ++hist[static_cast<std::size_t>(quantize8(src[i * 3 + c]))];
    std::array<double, 256> lut{};
    std::size_t cdf = 0;
    for (std::size_t q = 0; q < 256; ++q) {
      cdf += hist[q];
      lut[q] = std::nearbyint(255.0 * static_cast<double>(cdf) / static_cast<double>(n)) / 255.0;
    }
    for (std::size_t i = 0; i < n; ++i) out[i * 3 + c] = lut[static_cast<std::size_t>(quantize8(src[i * 3 + c]))];
  }
  return Image::from_unclamped(img.width(), img.height(), out);
}

/// Keeps the top `bits` bits of each 8-bit level; 8 bits is the identity.
inline Image posterize(const Image& img, int bits) {
  if (bits >= 8) return img;
  const int mask = (0xff << (8 - bits)) & 0xff;
  std::vector<double> out(img.data().size());
  const auto src = img.data();
  for (std::size_t i = 0; i < src.size(); ++i) out[i] = (quantize8(src[i]) & mask) / 255.0;
  return Image::from_unclamped(img.width(), img.height(), out);
}

inline Image invert(const Image& img) {
  std::vector<float> out(img.data().begin(), img.data().end());
  for (float& v : out) v = 1.0f - v;
  return Image(img.width(), img.height(), std::move(out));
}

}  // namespace invlab::ops
