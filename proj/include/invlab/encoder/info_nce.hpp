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

#include "invlab/encoder/layers.hpp"

namespace invlab::nn {

template <class T>
struct InfoNceResult {
  T loss{};
  Vector<T> grad_anchor;
  Vector<T> grad_positive;
  Matrix<T> grad_negatives;  // one row per negative
};

/// -log(exp(a.p/tau) / (exp(a.p/tau) + sum_k exp(a.n_k/tau))) on L2-normalized
/// inputs. `negatives` holds one vector per row and may be empty.
template <class T>
InfoNceResult<T> info_nce_loss(const Vector<T>& anchor, const Vector<T>& positive, const Matrix<T>& negatives,
                               T temperature) {
  require(temperature > T(0), ErrorCategory::parameter, "InfoNCE temperature must be positive");
  require(anchor.size() == positive.size() && (negatives.rows() == 0 || negatives.cols() == anchor.size()),
          ErrorCategory::parameter, "InfoNCE input dimensions differ");
  const Vector<T> ua = l2_normalize(anchor), up = l2_normalize(positive);
  const Eigen::Index k = negatives.rows();
  Matrix<T> un(k, anchor.size());
  for (Eigen::Index i = 0; i < k; ++i) un.row(i) = l2_normalize<T>(negatives.row(i).transpose()).transpose();

  Vector<T> logits(k + 1);
  logits(0) = ua.dot(up) / temperature;
  if (k > 0) logits.tail(k) = un * ua / temperature;
  const T top = logits.maxCoeff();
  const Vector<T> e = (logits.array() - top).exp().matrix();
  const T z = e.sum();
  const Vector<T> prob = e / z;

  InfoNceResult<T> r;
  r.loss = -(logits(0) - top - std::log(z));
  // d loss / d logits = prob - onehot(0)
  Vector<T> d_logits = prob;
  d_logits(0) -= T(1);
  Vector<T> d_ua = d_logits(0) * up / temperature;
  if (k > 0) d_ua += un.transpose() * d_logits.tail(k) / temperature;
  const Vector<T> d_up = d_logits(0) * ua / temperature;
  r.grad_anchor = l2_normalize_backward<T>(d_ua, anchor);
  r.grad_positive = l2_normalize_backward<T>(d_up, positive);
  r.grad_negatives.resize(k, anchor.size());
  for (Eigen::Index i = 0; i < k; ++i) {
    const Vector<T> d_un = d_logits(i + 1) * ua / temperature;
    r.grad_negatives.row(i) = l2_normalize_backward<T>(d_un, negatives.row(i).transpose()).transpose();
  }
  return r;
}

}  // namespace invlab::nn
