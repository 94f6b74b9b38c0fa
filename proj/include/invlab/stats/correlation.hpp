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
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "invlab/core/error.hpp"

namespace invlab {

/// 1-based ranks with ties given the average of the ranks they span.
inline std::vector<double> mid_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n, mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  require(saa > 0 && sbb > 0, ErrorCategory::undefined, "correlation is undefined for a constant profile");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

/// Spearman's rho: Pearson correlation of mid-ranks.
inline double spearman_rank_corr(const std::vector<double>& a, const std::vector<double>& b) {
  require(a.size() == b.size(), ErrorCategory::validation, "rank correlation inputs differ in length");
  require(a.size() >= 2, ErrorCategory::validation, "rank correlation needs at least two values");
  for (std::size_t i = 0; i < a.size(); ++i)
    require(std::isfinite(a[i]) && std::isfinite(b[i]), ErrorCategory::validation,
            "rank correlation inputs must be finite");
  return pearson(mid_ranks(a), mid_ranks(b));
}

struct NamedProfile {
  std::string name;
  std::vector<double> values;  // one entry per model, in a shared model order
};

struct CorrelationMatrix {
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  Eigen::MatrixXd rho;
};

/// rho(rows[i], cols[j]). Pairs involving a constant profile are NaN when
/// `nan_for_constant` is set, and an error otherwise.
inline CorrelationMatrix cross_correlation(const std::vector<NamedProfile>& rows, const std::vector<NamedProfile>& cols,
                                           bool nan_for_constant = false) {
  require(!rows.empty() && !cols.empty(), ErrorCategory::validation, "no profiles to correlate");
  CorrelationMatrix m;
  m.rho.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (const auto& r : rows) m.row_labels.push_back(r.name);
  for (const auto& c : cols) m.col_labels.push_back(c.name);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) {
      double rho;
      try {
        rho = spearman_rank_corr(rows[i].values, cols[j].values);
      } catch (const Error& e) {
        if (!nan_for_constant || e.category() != ErrorCategory::undefined) throw;
        rho = std::nan("");
      }
      m.rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rho;
    }
  return m;
}

/// Symmetric matrix of rank correlations among profiles, unit diagonal.
inline CorrelationMatrix correlation_matrix(const std::vector<NamedProfile>& profiles, bool nan_for_constant = false) {
  require(!profiles.empty(), ErrorCategory::validation, "no profiles to correlate");
  for (const auto& p : profiles)
    require(p.values.size() == profiles.front().values.size(), ErrorCategory::validation,
            "profile " + p.name + " does not cover the shared model set");
  auto m = cross_correlation(profiles, profiles, nan_for_constant);
  for (Eigen::Index i = 0; i < m.rho.rows(); ++i)
    for (Eigen::Index j = 0; j < i; ++j) m.rho(i, j) = m.rho(j, i);
  return m;
}

}  // namespace invlab
