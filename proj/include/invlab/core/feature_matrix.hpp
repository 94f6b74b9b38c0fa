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
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "invlab/core/error.hpp"

namespace invlab {

using Metadata = std::map<std::string, std::string>;

/// N x D embedding matrix (row i = example i), stored as 32-bit floats.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;

  FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<float> values, Metadata meta = {})
      : rows_(rows), cols_(cols), values_(std::move(values)), meta_(std::move(meta)) {
    require(rows_ >= 1 && cols_ >= 1, ErrorCategory::validation,
            "feature matrix needs at least one row and one column");
    require(values_.size() == rows_ * cols_, ErrorCategory::validation,
            "feature matrix value count " + std::to_string(values_.size()) + " != rows*cols");
    for (float v : values_)
      require(std::isfinite(v), ErrorCategory::validation, "feature matrix contains NaN/Inf");
  }

  static FeatureMatrix from_eigen(const Eigen::MatrixXd& m, Metadata meta = {}) {
    std::vector<float> values(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c)
        values[static_cast<std::size_t>(r * m.cols() + c)] = static_cast<float>(m(r, c));
    return FeatureMatrix(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()),
                         std::move(values), std::move(meta));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::span<const float> values() const noexcept { return values_; }
  std::span<const float> row(std::size_t i) const noexcept {
    return std::span<const float>(values_).subspan(i * cols_, cols_);
  }
  float operator()(std::size_t r, std::size_t c) const noexcept { return values_[r * cols_ + c]; }

  const Metadata& meta() const noexcept { return meta_; }
  Metadata& meta() noexcept { return meta_; }

  /// Widened copy for 64-bit metric computation.
  Eigen::MatrixXd to_eigen() const {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_));
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c)
        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = values_[r * cols_ + c];
    return m;
  }

  Eigen::VectorXd row_vector(std::size_t i) const {
    Eigen::VectorXd v(static_cast<Eigen::Index>(cols_));
    for (std::size_t c = 0; c < cols_; ++c) v(static_cast<Eigen::Index>(c)) = values_[i * cols_ + c];
    return v;
  }

  /// Rows selected by index, in the given order.
  FeatureMatrix select_rows(std::span<const std::size_t> index) const {
    std::vector<float> out;
    out.reserve(index.size() * cols_);
    for (std::size_t i : index) {
      auto r = row(i);
      out.insert(out.end(), r.begin(), r.end());
    }
    return FeatureMatrix(index.size(), cols_, std::move(out), meta_);
  }

  friend bool operator==(const FeatureMatrix& a, const FeatureMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.values_ == b.values_ && a.meta_ == b.meta_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> values_;
  Metadata meta_;
};

}  // namespace invlab
