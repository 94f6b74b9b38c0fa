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

#include <cstdint>
#include <string>
#include <vector>

#include "invlab/core/image.hpp"
#include "invlab/core/rng.hpp"
#include "invlab/encoder/layers.hpp"
#include "invlab/transforms/ops.hpp"
#include "invlab/transforms/policy.hpp"

namespace invlab {

/// Conv backbone + optional MLP head. The embedding is the globally
/// average-pooled output of the last conv block; the head (projection for
/// contrastive training, classifier for supervised) is used only in training.
struct EncoderConfig {
  int input_size = 32;
  std::vector<int> channels = {16, 32, 64, 64};
  int kernel = 3;
  int stride = 2;
  std::string nonlinearity = "relu";
  // Appends normalized x and y coordinate planes to the RGB input.
  bool coord_channels = true;
  std::vector<int> head_dims = {64, 32};
  Normalization normalization;

  int embedding_dim() const { return channels.empty() ? 0 : channels.back(); }
  int input_channels() const { return 3 + (coord_channels ? 2 : 0); }

  void validate() const {
    require(input_size >= 1, ErrorCategory::config, "encoder input size must be positive");
    require(!channels.empty(), ErrorCategory::config, "encoder needs at least one conv block");
    for (int c : channels) require(c >= 1, ErrorCategory::config, "conv channel counts must be positive");
    require(embedding_dim() >= 2, ErrorCategory::config, "embedding dimension must be at least 2");
    require(kernel >= 1 && kernel % 2 == 1, ErrorCategory::config, "conv kernel size must be odd");
    require(stride >= 1, ErrorCategory::config, "conv stride must be positive");
    require(nonlinearity == "relu", ErrorCategory::config, "unsupported nonlinearity: " + nonlinearity);
    for (int d : head_dims) require(d >= 1, ErrorCategory::config, "head dimensions must be positive");
    for (double s : normalization.std) require(s > 0, ErrorCategory::config, "normalization std must be positive");
  }

  std::vector<nn::ConvShape> conv_shapes() const {
    std::vector<nn::ConvShape> shapes;
    int c = input_channels(), size = input_size;
    for (int out : channels) {
      nn::ConvShape s{c, out, kernel, stride, size, size};
      shapes.push_back(s);
      c = out;
      size = s.out_h();
      require(size >= 1, ErrorCategory::config, "conv stack reduces the input below one pixel");
    }
    return shapes;
  }
};

namespace nn {

/// Ordered named tensors. Conv weights are out x (in*k*k), linear weights
/// out x in, biases out x 1.
template <class T>
struct Params {
  std::vector<std::string> names;
  std::vector<Matrix<T>> tensors;

  std::size_t size() const noexcept { return tensors.size(); }
  void add(std::string name, Matrix<T> m) {
    names.push_back(std::move(name));
    tensors.push_back(std::move(m));
  }

  Params zeros_like() const {
    Params out;
    out.names = names;
    for (const auto& t : tensors) out.tensors.push_back(Matrix<T>::Zero(t.rows(), t.cols()));
    return out;
  }

  template <class U>
  Params<U> cast() const {
    Params<U> out;
    out.names = names;
    for (const auto& t : tensors) out.tensors.push_back(t.template cast<U>());
    return out;
  }

  Eigen::Index count() const {
    Eigen::Index n = 0;
    for (const auto& t : tensors) n += t.size();
    return n;
  }

  friend bool operator==(const Params& a, const Params& b) {
    if (a.names != b.names) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a.tensors[i].rows() != b.tensors[i].rows() || a.tensors[i].cols() != b.tensors[i].cols() ||
          a.tensors[i] != b.tensors[i])
        return false;
    return true;
  }
};

template <class T>
struct ForwardCache {
  std::vector<Matrix<T>> cols;  // im2col of each conv input
  std::vector<Matrix<T>> pre;   // pre-activation of each conv block
  Vector<T> pooled;
  std::vector<Vector<T>> head_in;
  std::vector<Vector<T>> head_pre;
};

template <class T>
struct ForwardResult {
  Vector<T> embedding;
  Vector<T> output;  // head output, or the embedding when there is no head
};

/// He-normal initialization (std sqrt(2 / fan_in)), zero biases.
template <class T>
Params<T> init_params(const EncoderConfig& cfg, const std::vector<int>& head_dims, SeededRng& rng) {
  Params<T> p;
  const auto shapes = cfg.conv_shapes();
  auto he = [&](Eigen::Index rows, Eigen::Index cols) {
    Matrix<T> m(rows, cols);
    const double sd = std::sqrt(2.0 / static_cast<double>(cols));
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = static_cast<T>(rng.normal(0.0, sd));
    return m;
  };
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    p.add("conv" + std::to_string(i) + ".weight", he(shapes[i].out_channels, shapes[i].patch()));
    p.add("conv" + std::to_string(i) + ".bias", Matrix<T>::Zero(shapes[i].out_channels, 1));
  }
  int in = cfg.embedding_dim();
  for (std::size_t j = 0; j < head_dims.size(); ++j) {
    p.add("head" + std::to_string(j) + ".weight", he(head_dims[j], in));
    p.add("head" + std::to_string(j) + ".bias", Matrix<T>::Zero(head_dims[j], 1));
    in = head_dims[j];
  }
  return p;
}

/// Number of head layers stored in a parameter set built for `cfg`.
template <class T>
std::size_t head_layers(const EncoderConfig& cfg, const Params<T>& p) {
  return (p.size() - 2 * cfg.channels.size()) / 2;
}

/// Runs the backbone (and head layers present in `p`) on a prepared input
/// map of input_channels x (input_size^2).
template <class T>
ForwardResult<T> forward(const EncoderConfig& cfg, const Params<T>& p, const Matrix<T>& input,
                         ForwardCache<T>* cache = nullptr) {
  const auto shapes = cfg.conv_shapes();
  Matrix<T> x = input;
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    Matrix<T> cols;
    Matrix<T> pre = conv_forward<T>(x, p.tensors[2 * i], p.tensors[2 * i + 1], shapes[i], cache ? &cols : nullptr);
    x = relu<T>(pre);
    if (cache) {
      cache->cols.push_back(std::move(cols));
      cache->pre.push_back(std::move(pre));
    }
  }
  ForwardResult<T> r;
  r.embedding = global_avg_pool<T>(x);
  if (cache) cache->pooled = r.embedding;
  Vector<T> h = r.embedding;
  const std::size_t layers = head_layers(cfg, p), base = 2 * shapes.size();
  for (std::size_t j = 0; j < layers; ++j) {
    if (cache) cache->head_in.push_back(h);
    Vector<T> pre = linear_forward<T>(h, p.tensors[base + 2 * j], p.tensors[base + 2 * j + 1]);
    if (cache) cache->head_pre.push_back(pre);
    h = j + 1 < layers ? Vector<T>(pre.cwiseMax(T(0))) : pre;
  }
  r.output = std::move(h);
  return r;
}

/// Accumulates d(loss)/d(params) into `grads` given d(loss)/d(output).
template <class T>
void backward(const EncoderConfig& cfg, const Params<T>& p, const ForwardCache<T>& cache, const Vector<T>& d_output,
              Params<T>& grads) {
  const auto shapes = cfg.conv_shapes();
  const std::size_t layers = head_layers(cfg, p), base = 2 * shapes.size();
  Vector<T> d = d_output;
  for (std::size_t j = layers; j-- > 0;) {
    if (j + 1 < layers) d = (cache.head_pre[j].array() > T(0)).select(d, T(0));
    const auto g = linear_backward<T>(d, cache.head_in[j], p.tensors[base + 2 * j]);
    grads.tensors[base + 2 * j] += g.weight;
    grads.tensors[base + 2 * j + 1] += g.bias;
    d = g.input;
  }
  const auto& last = shapes.back();
  Matrix<T> dx = global_avg_pool_backward<T>(d, static_cast<Eigen::Index>(last.out_h()) * last.out_w());
  for (std::size_t i = shapes.size(); i-- > 0;) {
    dx = relu_backward<T>(dx, cache.pre[i]);
    auto g = conv_backward<T>(dx, cache.cols[i], p.tensors[2 * i], shapes[i], i > 0);
    grads.tensors[2 * i] += g.weight;
    grads.tensors[2 * i + 1] += g.bias;
    dx = std::move(g.input);
  }
}

/// Resize/centre-crop to the input size, normalize, append coordinate planes.
template <class T>
Matrix<T> prepare_input(const EncoderConfig& cfg, const Image& img) {
  const Image sized = ops::resize_center_crop(img, cfg.input_size);
  const int n = cfg.input_size;
  Matrix<T> x(cfg.input_channels(), static_cast<Eigen::Index>(n) * n);
  const auto& norm = cfg.normalization;
  for (int y = 0; y < n; ++y)
    for (int px = 0; px < n; ++px) {
      const Eigen::Index col = static_cast<Eigen::Index>(y) * n + px;
      for (int c = 0; c < 3; ++c) x(c, col) = static_cast<T>((sized.at(px, y, c) - norm.mean[c]) / norm.std[c]);
      if (cfg.coord_channels) {
        x(3, col) = static_cast<T>(n > 1 ? 2.0 * px / (n - 1) - 1.0 : 0.0);
        x(4, col) = static_cast<T>(n > 1 ? 2.0 * y / (n - 1) - 1.0 : 0.0);
      }
    }
  return x;
}

}  // namespace nn
}  // namespace invlab
