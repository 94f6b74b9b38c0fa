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

#include <deque>
#include <numeric>

#include "invlab/core/dataset.hpp"
#include "invlab/encoder/encoder.hpp"
#include "invlab/encoder/info_nce.hpp"

namespace invlab {

struct ContrastiveConfig {
  AugmentationPolicy policy = default_policy();
  double temperature = 0.2;
  std::size_t queue_size = 1024;
  double momentum = 0.99;  // key encoder EMA coefficient
  int epochs = 1;
  std::size_t batch_size = 32;
  double learning_rate = 0.01;
  double sgd_momentum = 0.9;
  std::uint64_t seed = 0;

  void validate() const {
    require(temperature > 0, ErrorCategory::config, "temperature must be positive");
    require(queue_size >= 1, ErrorCategory::config, "queue size must be at least 1");
    require(momentum >= 0 && momentum <= 1, ErrorCategory::config, "key momentum must be in [0, 1]");
    require(epochs >= 0, ErrorCategory::config, "epochs must be non-negative");
    require(batch_size >= 1, ErrorCategory::config, "batch size must be positive");
    require(learning_rate >= 0, ErrorCategory::config, "learning rate must be non-negative");
    require(sgd_momentum >= 0 && sgd_momentum < 1, ErrorCategory::config, "SGD momentum must be in [0, 1)");
  }
};

struct SupervisedConfig {
  AugmentationPolicy policy = supervised_policy();
  int epochs = 1;
  std::size_t batch_size = 32;
  double learning_rate = 0.05;
  double sgd_momentum = 0.9;
  std::uint64_t seed = 0;
};

namespace nn {

/// SGD with heavy-ball momentum: v = mu v + g; w -= lr v.
template <class T>
class Sgd {
 public:
  Sgd(const Params<T>& like, double lr, double momentum)
      : velocity_(like.zeros_like()), lr_(static_cast<T>(lr)), mu_(static_cast<T>(momentum)) {}

  void step(Params<T>& p, const Params<T>& grads) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      velocity_.tensors[i] = mu_ * velocity_.tensors[i] + grads.tensors[i];
      p.tensors[i] -= lr_ * velocity_.tensors[i];
    }
  }

 private:
  Params<T> velocity_;
  T lr_;
  T mu_;
};

/// Fixed-capacity FIFO of key vectors; index 0 is the oldest entry.
class NegativeQueue {
 public:
  explicit NegativeQueue(std::size_t capacity) : capacity_(capacity) {}

  void push(Eigen::VectorXf key) {
    if (keys_.size() == capacity_) keys_.pop_front();
    keys_.push_back(std::move(key));
  }
  std::size_t size() const noexcept { return keys_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  const Eigen::VectorXf& at(std::size_t i) const { return keys_.at(i); }

  Matrix<float> as_matrix(Eigen::Index dim) const {
    Matrix<float> m(static_cast<Eigen::Index>(keys_.size()), dim);
    for (std::size_t i = 0; i < keys_.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = keys_[i].transpose();
    return m;
  }

 private:
  std::size_t capacity_;
  std::deque<Eigen::VectorXf> keys_;
};

inline std::vector<std::size_t> epoch_order(std::size_t n, const SeededRng& root, int epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  SeededRng rng = root.derive(0xE90C000000000000ULL + static_cast<std::uint64_t>(epoch));
  rng.shuffle(order);
  return order;
}

inline SeededRng view_rng(const SeededRng& root, std::size_t step, std::size_t slot) {
  return root.derive((static_cast<std::uint64_t>(step) << 24) | slot);
}

}  // namespace nn

/// Momentum-contrast training loop. Each step draws a batch, makes two
/// augmented views per image, embeds view 1 with the query network and
/// view 2 with the key network, scores each query against its key and the
/// queued negatives, updates the query by SGD, moves the key network toward
/// the query and enqueues the new keys.
class ContrastiveTrainer {
 public:
  ContrastiveTrainer(const LabeledDataset& data, EncoderConfig ec, ContrastiveConfig cc)
      : data_(data), ec_(std::move(ec)), cc_(std::move(cc)), root_(cc_.seed), queue_(cc_.queue_size) {
    require(data_.size() >= 1, ErrorCategory::validation, "training dataset is empty");
    ec_.validate();
    cc_.validate();
    require(!ec_.head_dims.empty(), ErrorCategory::config, "contrastive training needs a projection head");
    cc_.policy.output_size = ec_.input_size;
    SeededRng init = root_.derive(0x1417);
    query_ = nn::init_params<float>(ec_, ec_.head_dims, init);
    key_ = query_;
    sgd_.emplace(query_, cc_.learning_rate, cc_.sgd_momentum);
  }

  std::size_t steps_per_epoch() const { return (data_.size() + cc_.batch_size - 1) / cc_.batch_size; }
  std::size_t total_steps() const { return steps_per_epoch() * static_cast<std::size_t>(cc_.epochs); }
  std::size_t steps_done() const noexcept { return step_; }

  const nn::Params<float>& query() const noexcept { return query_; }
  const nn::Params<float>& key() const noexcept { return key_; }
  const nn::NegativeQueue& queue() const noexcept { return queue_; }

  /// One optimisation step; returns the mean loss over the batch.
  double step() {
    const std::size_t spe = steps_per_epoch();
    const int epoch = static_cast<int>(step_ / spe);
    if (order_epoch_ != epoch) {
      order_ = nn::epoch_order(data_.size(), root_, epoch);
      order_epoch_ = epoch;
    }
    const std::size_t begin = (step_ % spe) * cc_.batch_size;
    const std::size_t end = std::min(begin + cc_.batch_size, data_.size());
    const Eigen::Index dim = ec_.head_dims.back();

    const nn::Matrix<float> negatives = queue_.as_matrix(dim);
    auto grads = query_.zeros_like();
    std::vector<Eigen::VectorXf> keys;
    double loss = 0;
    for (std::size_t b = begin; b < end; ++b) {
      const Image& img = data_.images[order_[b]];
      SeededRng rng = nn::view_rng(root_, step_, b - begin);
      const Image v1 = apply_policy(img, cc_.policy, rng);
      const Image v2 = apply_policy(img, cc_.policy, rng);
      nn::ForwardCache<float> cache;
      const auto q = nn::forward<float>(ec_, query_, nn::prepare_input<float>(ec_, v1), &cache).output;
      const Eigen::VectorXf k = nn::forward<float>(ec_, key_, nn::prepare_input<float>(ec_, v2)).output;
      if (!q.allFinite() || !k.allFinite())
        fail(ErrorCategory::training, "non-finite embedding at step " + std::to_string(step_));
      nn::InfoNceResult<float> r;
      try {
        r = nn::info_nce_loss<float>(q, k, negatives, static_cast<float>(cc_.temperature));
      } catch (const Error& e) {
        fail(ErrorCategory::training, "training diverged at step " + std::to_string(step_) + ": " + e.what());
      }
      loss += r.loss;
      nn::backward<float>(ec_, query_, cache, r.grad_anchor, grads);
      keys.push_back(nn::l2_normalize<float>(k));
    }
    const double n = static_cast<double>(end - begin);
    loss /= n;
    if (!std::isfinite(loss))
      fail(ErrorCategory::training, "non-finite contrastive loss at step " + std::to_string(step_));
    for (auto& g : grads.tensors) g /= static_cast<float>(n);
    sgd_->step(query_, grads);
    const float m = static_cast<float>(cc_.momentum);
    if (m < 1.0f)
      for (std::size_t i = 0; i < key_.size(); ++i) key_.tensors[i] = m * key_.tensors[i] + (1 - m) * query_.tensors[i];
    for (auto& k : keys) queue_.push(std::move(k));
    ++step_;
    return loss;
  }

  /// Mean InfoNCE loss of the current networks on fixed view pairs, using
  /// the other pairs' keys as negatives. Does not touch the training state.
  double probe_loss(std::span<const Image> view1, std::span<const Image> view2) const {
    require(view1.size() == view2.size() && view1.size() >= 2, ErrorCategory::validation,
            "probe needs at least two paired views");
    const Eigen::Index n = static_cast<Eigen::Index>(view1.size()), dim = ec_.head_dims.back();
    nn::Matrix<float> keys(n, dim);
    for (Eigen::Index i = 0; i < n; ++i)
      keys.row(i) = nn::forward<float>(ec_, key_, nn::prepare_input<float>(ec_, view2[i])).output.transpose();
    double loss = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto q = nn::forward<float>(ec_, query_, nn::prepare_input<float>(ec_, view1[i])).output;
      nn::Matrix<float> neg(n - 1, dim);
      for (Eigen::Index j = 0, r = 0; j < n; ++j)
        if (j != i) neg.row(r++) = keys.row(j);
      loss += nn::info_nce_loss<float>(q, keys.row(i).transpose(), neg, static_cast<float>(cc_.temperature)).loss;
    }
    return loss / static_cast<double>(n);
  }

  /// Query backbone with the projection head stripped.
  Encoder encoder(const std::string& name) const {
    nn::Params<float> backbone;
    for (std::size_t i = 0; i < 2 * ec_.channels.size(); ++i) backbone.add(query_.names[i], query_.tensors[i]);
    EncoderConfig cfg = ec_;
    return Encoder(cfg, std::move(backbone),
                   {{"name", name},
                    {"policy", cc_.policy.name},
                    {"seed", std::to_string(cc_.seed)},
                    {"epochs", std::to_string(cc_.epochs)},
                    {"steps", std::to_string(step_)}});
  }

 private:
  const LabeledDataset& data_;
  EncoderConfig ec_;
  ContrastiveConfig cc_;
  SeededRng root_;
  nn::Params<float> query_;
  nn::Params<float> key_;
  std::optional<nn::Sgd<float>> sgd_;
  nn::NegativeQueue queue_;
  std::vector<std::size_t> order_;
  int order_epoch_ = -1;
  std::size_t step_ = 0;
};

inline Encoder train_contrastive(const LabeledDataset& data, const EncoderConfig& ec, const ContrastiveConfig& cc,
                                 const std::string& name = "") {
  ContrastiveTrainer trainer(data, ec, cc);
  for (std::size_t s = trainer.total_steps(); s > 0; --s) trainer.step();
  return trainer.encoder(name.empty() ? cc.policy.name : name);
}

namespace nn {

/// Softmax cross-entropy of logits against `label`; returns the loss and
/// writes d(loss)/d(logits) into `grad`.
template <class T>
T cross_entropy(const Vector<T>& logits, int label, Vector<T>& grad) {
  const T top = logits.maxCoeff();
  const Vector<T> e = (logits.array() - top).exp().matrix();
  const T z = e.sum();
  grad = e / z;
  grad(label) -= T(1);
  return -(logits(label) - top - std::log(z));
}

}  // namespace nn

/// Trains backbone + linear classifier with softmax cross-entropy on
/// augmented views; returns the backbone. The final accuracy on the
/// unaugmented training images is stored in meta["train_accuracy"].
inline Encoder train_supervised(const LabeledDataset& data, EncoderConfig ec, SupervisedConfig sc,
                                const std::string& name = "Supervised") {
  require(data.size() >= 1, ErrorCategory::validation, "training dataset is empty");
  require(data.labels.has_value(), ErrorCategory::validation, "supervised training needs class labels");
  data.validate();
  ec.validate();
  require(sc.epochs >= 0 && sc.batch_size >= 1 && sc.learning_rate >= 0, ErrorCategory::config,
          "invalid supervised training settings");
  const int classes = data.class_count();
  require(classes >= 2, ErrorCategory::validation, "supervised training needs at least two classes");
  sc.policy.output_size = ec.input_size;

  const SeededRng root(sc.seed);
  SeededRng init = root.derive(0x1417);
  auto params = nn::init_params<float>(ec, {classes}, init);
  nn::Sgd<float> sgd(params, sc.learning_rate, sc.sgd_momentum);
  const std::size_t spe = (data.size() + sc.batch_size - 1) / sc.batch_size;
  std::size_t step = 0;
  for (int epoch = 0; epoch < sc.epochs; ++epoch) {
    const auto order = nn::epoch_order(data.size(), root, epoch);
    for (std::size_t s = 0; s < spe; ++s, ++step) {
      const std::size_t begin = s * sc.batch_size, end = std::min(begin + sc.batch_size, data.size());
      auto grads = params.zeros_like();
      double loss = 0;
      for (std::size_t b = begin; b < end; ++b) {
        SeededRng rng = nn::view_rng(root, step, b - begin);
        const Image view = apply_policy(data.images[order[b]], sc.policy, rng);
        nn::ForwardCache<float> cache;
        const auto out = nn::forward<float>(ec, params, nn::prepare_input<float>(ec, view), &cache).output;
        Eigen::VectorXf d;
        loss += nn::cross_entropy<float>(out, (*data.labels)[order[b]], d);
        nn::backward<float>(ec, params, cache, d, grads);
      }
      if (!std::isfinite(loss))
        fail(ErrorCategory::training, "non-finite supervised loss at step " + std::to_string(step));
      for (auto& g : grads.tensors) g /= static_cast<float>(end - begin);
      sgd.step(params, grads);
    }
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto out = nn::forward<float>(ec, params, nn::prepare_input<float>(ec, data.images[i])).output;
    Eigen::Index arg;
    out.maxCoeff(&arg);
    correct += static_cast<int>(arg) == (*data.labels)[i];
  }
  nn::Params<float> backbone;
  for (std::size_t i = 0; i < 2 * ec.channels.size(); ++i) backbone.add(params.names[i], params.tensors[i]);
  char acc[32];
  std::snprintf(acc, sizeof acc, "%.6f", static_cast<double>(correct) / static_cast<double>(data.size()));
  return Encoder(ec, std::move(backbone),
                 {{"name", name},
                  {"policy", sc.policy.name},
                  {"seed", std::to_string(sc.seed)},
                  {"epochs", std::to_string(sc.epochs)},
                  {"steps", std::to_string(step)},
                  {"train_accuracy", acc}});
}

}  // namespace invlab
