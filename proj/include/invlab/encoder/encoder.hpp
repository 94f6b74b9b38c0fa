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
#include <span>
#include <thread>

#include "invlab/core/feature_matrix.hpp"
#include "invlab/encoder/network.hpp"

namespace invlab {

/// Frozen feature extractor: backbone weights plus provenance metadata.
class Encoder {
 public:
  Encoder() = default;
  Encoder(EncoderConfig config, nn::Params<float> weights, Metadata meta = {})
      : config_(std::move(config)), weights_(std::move(weights)), meta_(std::move(meta)) {
    config_.validate();
    require(weights_.size() == 2 * config_.channels.size(), ErrorCategory::validation,
            "encoder weights do not match the backbone layout");
    const auto shapes = config_.conv_shapes();
    for (std::size_t i = 0; i < shapes.size(); ++i) {
      require(weights_.tensors[2 * i].rows() == shapes[i].out_channels &&
                  weights_.tensors[2 * i].cols() == shapes[i].patch() &&
                  weights_.tensors[2 * i + 1].rows() == shapes[i].out_channels,
              ErrorCategory::validation, "encoder weight shape mismatch at " + weights_.names[2 * i]);
    }
  }

  const EncoderConfig& config() const noexcept { return config_; }
  const nn::Params<float>& weights() const noexcept { return weights_; }
  const Metadata& meta() const noexcept { return meta_; }
  Metadata& meta() noexcept { return meta_; }
  std::string name() const {
    const auto it = meta_.find("name");
    return it == meta_.end() ? "encoder" : it->second;
  }
  int dim() const { return config_.embedding_dim(); }

  Eigen::VectorXf embed_one(const Image& img) const {
    return nn::forward<float>(config_, weights_, nn::prepare_input<float>(config_, img)).embedding;
  }

  /// Row i is the pooled embedding of images[i]. Work is split across
  /// `threads` workers; each row depends on its image alone.
  FeatureMatrix embed(std::span<const Image> images, unsigned threads = 1) const {
    require(!images.empty(), ErrorCategory::validation, "nothing to embed");
    const std::size_t n = images.size(), d = static_cast<std::size_t>(dim());
    std::vector<float> values(n * d);
    auto work = [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        const Eigen::VectorXf e = embed_one(images[i]);
        std::copy(e.data(), e.data() + d, values.begin() + static_cast<std::ptrdiff_t>(i * d));
      }
    };
    const std::size_t workers = std::clamp<std::size_t>(threads, 1, n);
    if (workers == 1) {
      work(0, n);
    } else {
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, n * w / workers, n * (w + 1) / workers);
    }
    Metadata meta = {{"encoder", name()}};
    return FeatureMatrix(n, d, std::move(values), std::move(meta));
  }

 private:
  EncoderConfig config_;
  nn::Params<float> weights_;
  Metadata meta_;
};

/// Untrained baseline: He-normal weights drawn from `seed`.
inline Encoder random_encoder(const EncoderConfig& cfg, std::uint64_t seed, const std::string& name = "Random") {
  cfg.validate();
  SeededRng rng(seed);
  return Encoder(cfg, nn::init_params<float>(cfg, {}, rng),
                 {{"name", name}, {"policy", "None"}, {"seed", std::to_string(seed)}, {"steps", "0"}});
}

}  // namespace invlab
