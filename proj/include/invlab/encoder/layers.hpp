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

// Differentiable building blocks. Feature maps are stored channel-major:
// a C x (H*W) matrix whose column y*W + x holds the pixel (x, y).

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "invlab/core/error.hpp"

namespace invlab::nn {

template <class T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

struct ConvShape {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 3;
  int stride = 1;
  int in_h = 0;
  int in_w = 0;

  int pad() const noexcept { return kernel / 2; }
  int out_h() const noexcept { return (in_h + 2 * pad() - kernel) / stride + 1; }
  int out_w() const noexcept { return (in_w + 2 * pad() - kernel) / stride + 1; }
  int patch() const noexcept { return in_channels * kernel * kernel; }
};

template <class T>
Matrix<T> im2col(const Matrix<T>& in, const ConvShape& s) {
  const int oh = s.out_h(), ow = s.out_w(), k = s.kernel, p = s.pad();
  Matrix<T> cols = Matrix<T>::Zero(s.patch(), static_cast<Eigen::Index>(oh) * ow);
  for (int c = 0; c < s.in_channels; ++c)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        const Eigen::Index row = (static_cast<Eigen::Index>(c) * k + ky) * k + kx;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * s.stride + ky - p;
          if (iy < 0 || iy >= s.in_h) continue;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * s.stride + kx - p;
            if (ix < 0 || ix >= s.in_w) continue;
            cols(row, static_cast<Eigen::Index>(oy) * ow + ox) = in(c, static_cast<Eigen::Index>(iy) * s.in_w + ix);
          }
        }
      }
  return cols;
}

/// Adjoint of im2col: scatters patch gradients back onto the input map.
template <class T>
Matrix<T> col2im(const Matrix<T>& cols, const ConvShape& s) {
  const int oh = s.out_h(), ow = s.out_w(), k = s.kernel, p = s.pad();
  Matrix<T> in = Matrix<T>::Zero(s.in_channels, static_cast<Eigen::Index>(s.in_h) * s.in_w);
  for (int c = 0; c < s.in_channels; ++c)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        const Eigen::Index row = (static_cast<Eigen::Index>(c) * k + ky) * k + kx;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * s.stride + ky - p;
          if (iy < 0 || iy >= s.in_h) continue;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * s.stride + kx - p;
            if (ix < 0 || ix >= s.in_w) continue;
            in(c, static_cast<Eigen::Index>(iy) * s.in_w + ix) += cols(row, static_cast<Eigen::Index>(oy) * ow + ox);
          }
        }
      }
  return in;
}

/// weight: out_channels x patch; bias: out_channels x 1. Zero padding of
/// kernel/2 on each side.
template <class T>
Matrix<T> conv_forward(const Matrix<T>& in, const Matrix<T>& weight, const Matrix<T>& bias, const ConvShape& s,
                       Matrix<T>* cols_cache = nullptr) {
  Matrix<T> cols = im2col(in, s);
  Matrix<T> out = weight * cols;
  out.colwise() += bias.col(0);
  if (cols_cache) *cols_cache = std::move(cols);
  return out;
}

template <class T>
struct ConvGrads {
  Matrix<T> input;
  Matrix<T> weight;
  Matrix<T> bias;
};

template <class T>
ConvGrads<T> conv_backward(const Matrix<T>& d_out, const Matrix<T>& cols, const Matrix<T>& weight,
                           const ConvShape& s, bool need_input = true) {
  ConvGrads<T> g;
  g.weight = d_out * cols.transpose();
  g.bias = d_out.rowwise().sum();
  if (need_input) g.input = col2im<T>(weight.transpose() * d_out, s);
  return g;
}

template <class T>
Matrix<T> relu(const Matrix<T>& x) {
  return x.cwiseMax(T(0));
}

/// Gradient through relu given its pre-activation input.
template <class T>
Matrix<T> relu_backward(const Matrix<T>& d_out, const Matrix<T>& pre) {
  return (pre.array() > T(0)).select(d_out, T(0));
}

template <class T>
Vector<T> global_avg_pool(const Matrix<T>& x) {
  return x.rowwise().mean();
}

template <class T>
Matrix<T> global_avg_pool_backward(const Vector<T>& d_out, Eigen::Index spatial) {
  return (d_out / static_cast<T>(spatial)).replicate(1, spatial);
}

/// y = W x + b with W: out x in and b: out x 1.
template <class T>
Vector<T> linear_forward(const Vector<T>& x, const Matrix<T>& weight, const Matrix<T>& bias) {
  return weight * x + bias.col(0);
}

template <class T>
struct LinearGrads {
  Vector<T> input;
  Matrix<T> weight;
  Matrix<T> bias;
};

template <class T>
LinearGrads<T> linear_backward(const Vector<T>& d_out, const Vector<T>& x, const Matrix<T>& weight) {
  return {weight.transpose() * d_out, d_out * x.transpose(), d_out};
}

template <class T>
Vector<T> l2_normalize(const Vector<T>& x) {
  const T n = x.norm();
  require(n > T(0) && std::isfinite(static_cast<double>(n)), ErrorCategory::numeric,
          "cannot L2-normalize a zero-norm vector");
  return x / n;
}

/// Gradient through x / ||x||: (g - u (u.g)) / ||x||.
template <class T>
Vector<T> l2_normalize_backward(const Vector<T>& d_out, const Vector<T>& x) {
  const T n = x.norm();
  const Vector<T> u = x / n;
  return (d_out - u * u.dot(d_out)) / n;
}

}  // namespace invlab::nn
