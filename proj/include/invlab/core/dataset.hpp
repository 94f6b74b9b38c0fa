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
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "invlab/core/error.hpp"
#include "invlab/core/image.hpp"

namespace invlab {

/// Images plus optional class labels, regression targets and group ids.
/// All present per-image columns have the same length as `images`.
struct LabeledDataset {
  std::vector<Image> images;
  std::optional<std::vector<int>> labels;  // classification targets in [0, K)
  std::optional<Eigen::MatrixXd> factors;  // regression targets, one row per image
  std::vector<std::string> factor_names;
  std::optional<std::vector<int>> group_ids;

  std::size_t size() const noexcept { return images.size(); }

  int class_count() const {
    if (!labels || labels->empty()) return 0;
    return *std::max_element(labels->begin(), labels->end()) + 1;
  }

  void validate() const {
    const std::size_t n = images.size();
    require(n >= 1, ErrorCategory::validation, "dataset is empty");
    if (labels) {
      require(labels->size() == n, ErrorCategory::validation, "label count != image count");
      std::set<int> seen(labels->begin(), labels->end());
      require(*seen.begin() == 0 && *seen.rbegin() == static_cast<int>(seen.size()) - 1,
              ErrorCategory::validation, "class labels must span a contiguous set 0..K-1");
    }
    if (factors) {
      require(static_cast<std::size_t>(factors->rows()) == n, ErrorCategory::validation,
              "factor rows != image count");
      require(factor_names.size() == static_cast<std::size_t>(factors->cols()),
              ErrorCategory::validation, "factor names do not match factor columns");
    }
    if (group_ids)
      require(group_ids->size() == n, ErrorCategory::validation, "group id count != image count");
  }

  /// Subset in the given order; all columns follow.
  LabeledDataset subset(const std::vector<std::size_t>& index) const {
    LabeledDataset out;
    out.factor_names = factor_names;
    out.images.reserve(index.size());
    for (std::size_t i : index) out.images.push_back(images[i]);
    if (labels) {
      out.labels.emplace();
      for (std::size_t i : index) out.labels->push_back((*labels)[i]);
    }
    if (factors) {
      Eigen::MatrixXd f(static_cast<Eigen::Index>(index.size()), factors->cols());
      for (std::size_t k = 0; k < index.size(); ++k)
        f.row(static_cast<Eigen::Index>(k)) = factors->row(static_cast<Eigen::Index>(index[k]));
      out.factors = std::move(f);
    }
    if (group_ids) {
      out.group_ids.emplace();
      for (std::size_t i : index) out.group_ids->push_back((*group_ids)[i]);
    }
    return out;
  }

  /// First n examples.
  LabeledDataset head(std::size_t n) const {
    std::vector<std::size_t> index(std::min(n, size()));
    for (std::size_t i = 0; i < index.size(); ++i) index[i] = i;
    return subset(index);
  }
};

}  // namespace invlab
