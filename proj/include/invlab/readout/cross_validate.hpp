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
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "invlab/core/error.hpp"
#include "invlab/core/feature_matrix.hpp"
#include "invlab/core/rng.hpp"
#include "invlab/readout/linear.hpp"

namespace invlab {

enum class TaskKind { classification, regression };
enum class ReadoutMetric { accuracy, mean_per_class_accuracy, r2 };

/// `count` values spaced evenly in log10 between 10^lo and 10^hi inclusive.
inline std::vector<double> log_grid(double lo_exponent, double hi_exponent, std::size_t count) {
  require(count >= 1, ErrorCategory::parameter, "grid needs at least one value");
  require(hi_exponent >= lo_exponent, ErrorCategory::parameter, "grid bounds are reversed");
  std::vector<double> g(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double t = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
    g[i] = std::pow(10.0, lo_exponent + t * (hi_exponent - lo_exponent));
  }
  return g;
}

inline constexpr std::size_t kDefaultGridSize = 45;

/// Regularization grid for features fused from `sources` encoders: the base
/// range [1e-6, 1e5] moves up one decade for two sources and two decades for
/// three or more, since concatenation scales XᵀX.
inline std::vector<double> default_grid(std::size_t sources = 1) {
  const double shift = sources <= 1 ? 0.0 : (sources == 2 ? 1.0 : 2.0);
  return log_grid(-6.0 + shift, 5.0 + shift, kDefaultGridSize);
}

struct ReadoutConfig {
  TaskKind task = TaskKind::classification;
  std::vector<double> grid = default_grid();
  int folds = 5;
  bool stratified = true;
  ReadoutMetric metric = ReadoutMetric::accuracy;
  std::uint64_t seed = 0;
  bool standardize = true;
  int max_iterations = 300;  // logistic regression, per fit

  void validate() const {
    require(!grid.empty(), ErrorCategory::config, "readout grid is empty");
    for (double l : grid) require(l >= 0 && std::isfinite(l), ErrorCategory::config, "readout grid values must be >= 0");
    require(folds >= 2, ErrorCategory::config, "readout needs at least 2 folds");
    require((task == TaskKind::regression) == (metric == ReadoutMetric::r2), ErrorCategory::config,
            "R^2 is the regression metric; classification uses an accuracy metric");
    require(max_iterations >= 1, ErrorCategory::config, "max_iterations must be >= 1");
  }
};

/// Targets for one readout task: class labels or a regression matrix.
struct ReadoutTargets {
  std::optional<std::vector<int>> labels;
  std::optional<Eigen::MatrixXd> values;

  static ReadoutTargets classes(std::vector<int> l) { return {std::move(l), std::nullopt}; }
  static ReadoutTargets regression(Eigen::MatrixXd y) { return {std::nullopt, std::move(y)}; }

  std::size_t size() const {
    return labels ? labels->size() : static_cast<std::size_t>(values ? values->rows() : 0);
  }
};

struct ReadoutResult {
  std::vector<double> grid;
  std::vector<double> mean;          // per grid value, over folds
  std::vector<double> std;           // population standard deviation over folds
  Eigen::MatrixXd fold_scores;       // grid x folds
  std::vector<int> folds;            // fold id per example
  std::size_t selected = 0;
  double selected_lambda = 0;
  double score = 0;
  double score_std = 0;
  std::size_t unconverged_fits = 0;  // logistic fits that hit the iteration cap
};

/// Fold id in [0, K) per example. Stratified assignment shuffles each class
/// and deals its members round-robin, continuing the rotation across
/// classes so fold sizes differ by at most one.
inline std::vector<int> assign_folds(std::size_t n, int k, std::uint64_t seed, const std::vector<int>* labels) {
  require(k >= 2, ErrorCategory::parameter, "fold count must be >= 2");
  require(n >= static_cast<std::size_t>(k), ErrorCategory::stratification,
          "only " + std::to_string(n) + " examples for " + std::to_string(k) + " folds");
  SeededRng rng = SeededRng(seed).derive(0xF01D);
  std::vector<int> fold(n, 0);
  std::vector<std::vector<std::size_t>> groups;
  if (labels) {
    require(labels->size() == n, ErrorCategory::alignment, "label count does not match example count");
    const int classes = *std::max_element(labels->begin(), labels->end()) + 1;
    groups.resize(static_cast<std::size_t>(classes));
    for (std::size_t i = 0; i < n; ++i) groups[static_cast<std::size_t>((*labels)[i])].push_back(i);
    for (std::size_t c = 0; c < groups.size(); ++c)
      require(groups[c].empty() || groups[c].size() >= static_cast<std::size_t>(k), ErrorCategory::stratification,
              "class " + std::to_string(c) + " has " + std::to_string(groups[c].size()) + " members, fewer than " +
                  std::to_string(k) + " folds");
  } else {
    groups.emplace_back(n);
    for (std::size_t i = 0; i < n; ++i) groups[0][i] = i;
  }
  std::size_t next = 0;
  for (auto& g : groups) {
    rng.shuffle(g);
    for (std::size_t i : g) fold[i] = static_cast<int>(next++ % static_cast<std::size_t>(k));
  }
  return fold;
}

namespace detail {

inline std::vector<std::size_t> fold_rows(const std::vector<int>& folds, int k, bool in_fold) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < folds.size(); ++i)
    if ((folds[i] == k) == in_fold) out.push_back(i);
  return out;
}

inline Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, const std::vector<std::size_t>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(idx[i]));
  return out;
}

inline std::vector<int> take(const std::vector<int>& v, const std::vector<std::size_t>& idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(v[i]);
  return out;
}

inline double classification_score(ReadoutMetric metric, const std::vector<int>& truth, const std::vector<int>& pred) {
  return metric == ReadoutMetric::mean_per_class_accuracy ? mean_per_class_accuracy(truth, pred)
                                                          : accuracy(truth, pred);
}

}  // namespace detail

/// Scores of every grid value on every fold for a given fold assignment.
/// Logistic fits run from the largest λ down, each warm-started from the
/// previous solution. Returns a grid x folds matrix.
inline Eigen::MatrixXd readout_fold_scores(const Eigen::MatrixXd& x, const ReadoutTargets& y,
                                           const std::vector<int>& folds, const ReadoutConfig& cfg,
                                           std::size_t* unconverged = nullptr) {
  cfg.validate();
  require(static_cast<std::size_t>(x.rows()) == y.size() && folds.size() == y.size(), ErrorCategory::alignment,
          "features, targets and folds differ in row count");
  require((cfg.task == TaskKind::classification) == y.labels.has_value(), ErrorCategory::config,
          "readout targets do not match the task kind");
  const int k = cfg.folds;
  const auto g = static_cast<Eigen::Index>(cfg.grid.size());
  Eigen::MatrixXd scores(g, k);
  std::vector<std::size_t> order(cfg.grid.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return cfg.grid[a] > cfg.grid[b]; });
  const int classes = y.labels ? *std::max_element(y.labels->begin(), y.labels->end()) + 1 : 0;

  for (int f = 0; f < k; ++f) {
    const auto tr = detail::fold_rows(folds, f, false), te = detail::fold_rows(folds, f, true);
    require(!tr.empty() && !te.empty(), ErrorCategory::stratification, "fold " + std::to_string(f) + " is empty");
    Eigen::MatrixXd xtr = detail::take_rows(x, tr), xte = detail::take_rows(x, te);
    if (cfg.standardize) {
      const auto s = Standardizer::fit(xtr);
      xtr = s.apply(xtr);
      xte = s.apply(xte);
    }
    if (cfg.task == TaskKind::regression) {
      const Eigen::MatrixXd ytr = detail::take_rows(*y.values, tr), yte = detail::take_rows(*y.values, te);
      const Eigen::RowVectorXd xm = xtr.colwise().mean(), ym = ytr.colwise().mean();
      const RidgePath path(xtr.rowwise() - xm, ytr.rowwise() - ym);
      for (Eigen::Index j = 0; j < g; ++j) {
        RidgeModel m;
        m.weights = path.weights(cfg.grid[static_cast<std::size_t>(j)]);
        m.intercept = ym - xm * m.weights;
        scores(j, f) = r2_score(yte, m.predict(xte));
      }
    } else {
      const auto ltr = detail::take(*y.labels, tr), lte = detail::take(*y.labels, te);
      std::optional<LogRegModel> prev;
      for (std::size_t j : order) {
        auto m = logreg_fit(xtr, ltr, cfg.grid[j], classes, prev ? &*prev : nullptr,
                            LogRegOptions{cfg.max_iterations, 1e-6});
        if (unconverged && !m.converged) ++*unconverged;
        scores(static_cast<Eigen::Index>(j), f) = detail::classification_score(cfg.metric, lte, m.predict(xte));
        prev = std::move(m);
      }
    }
  }
  return scores;
}

/// Collapses a fold-score matrix into per-λ mean/std and the selection.
/// The highest mean wins; ties go to the smaller λ.
inline ReadoutResult summarize_fold_scores(const std::vector<double>& grid, const Eigen::MatrixXd& scores,
                                           std::vector<int> folds) {
  ReadoutResult r;
  r.grid = grid;
  r.fold_scores = scores;
  r.folds = std::move(folds);
  for (Eigen::Index j = 0; j < scores.rows(); ++j) {
    const double m = scores.row(j).mean();
    r.mean.push_back(m);
    r.std.push_back(std::sqrt((scores.row(j).array() - m).square().mean()));
  }
  for (std::size_t j = 1; j < grid.size(); ++j) {
    const bool better = r.mean[j] > r.mean[r.selected];
    const bool tie_smaller = r.mean[j] == r.mean[r.selected] && grid[j] < grid[r.selected];
    if (better || tie_smaller) r.selected = j;
  }
  r.selected_lambda = grid[r.selected];
  r.score = r.mean[r.selected];
  r.score_std = r.std[r.selected];
  return r;
}

/// K-fold cross-validated linear readout over the configured λ grid.
inline ReadoutResult cross_validate(const Eigen::MatrixXd& x, const ReadoutTargets& y, const ReadoutConfig& cfg) {
  cfg.validate();
  require(static_cast<std::size_t>(x.rows()) == y.size(), ErrorCategory::alignment,
          "features and targets differ in row count");
  if (y.labels) {
    std::vector<bool> seen;
    for (int l : *y.labels) {
      require(l >= 0, ErrorCategory::validation, "class labels must be non-negative");
      if (static_cast<std::size_t>(l) >= seen.size()) seen.resize(static_cast<std::size_t>(l) + 1, false);
      seen[static_cast<std::size_t>(l)] = true;
    }
    require(std::count(seen.begin(), seen.end(), true) >= 2, ErrorCategory::validation,
            "classification readout needs at least two classes");
  }
  const bool strat = cfg.stratified && y.labels.has_value();
  auto folds = assign_folds(y.size(), cfg.folds, cfg.seed, strat ? &*y.labels : nullptr);
  std::size_t unconverged = 0;
  const auto scores = readout_fold_scores(x, y, folds, cfg, &unconverged);
  auto r = summarize_fold_scores(cfg.grid, scores, std::move(folds));
  r.unconverged_fits = unconverged;
  return r;
}

inline ReadoutResult cross_validate(const FeatureMatrix& x, const ReadoutTargets& y, const ReadoutConfig& cfg) {
  return cross_validate(x.to_eigen(), y, cfg);
}

}  // namespace invlab
