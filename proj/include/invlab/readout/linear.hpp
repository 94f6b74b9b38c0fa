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
#include <map>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "invlab/core/error.hpp"
#include "invlab/readout/lbfgs.hpp"

namespace invlab {

/// Per-column z-scoring. Columns with zero spread keep unit scale.
struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd& x) {
    Standardizer s;
    s.mean = x.colwise().mean();
    const Eigen::MatrixXd c = x.rowwise() - s.mean;
    s.scale = (c.colwise().squaredNorm() / static_cast<double>(std::max<Eigen::Index>(x.rows(), 1))).cwiseSqrt();
    for (Eigen::Index j = 0; j < s.scale.size(); ++j)
      if (!(s.scale(j) > 1e-12)) s.scale(j) = 1.0;
    return s;
  }

  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const {
    return (x.rowwise() - mean).array().rowwise() / scale.array();
  }
};

struct RidgeModel {
  Eigen::MatrixXd weights;    // d x k
  Eigen::RowVectorXd intercept;  // 1 x k (zero without intercept)

  Eigen::MatrixXd predict(const Eigen::MatrixXd& x) const {
    return (x * weights).rowwise() + intercept;
  }
};

/// W = (XᵀX + λI)⁻¹ XᵀY by Cholesky. With `fit_intercept` X and Y are
/// centered first and the intercept restores the means.
inline RidgeModel ridge_fit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double lambda,
                            bool fit_intercept = true) {
  require(x.rows() == y.rows() && x.rows() >= 1, ErrorCategory::alignment, "ridge inputs differ in row count");
  require(lambda >= 0 && std::isfinite(lambda), ErrorCategory::parameter, "ridge lambda must be >= 0");
  Eigen::RowVectorXd xm = Eigen::RowVectorXd::Zero(x.cols()), ym = Eigen::RowVectorXd::Zero(y.cols());
  if (fit_intercept) {
    xm = x.colwise().mean();
    ym = y.colwise().mean();
  }
  const Eigen::MatrixXd xc = x.rowwise() - xm, yc = y.rowwise() - ym;
  Eigen::MatrixXd a = xc.transpose() * xc;
  a.diagonal().array() += lambda;
  const Eigen::LLT<Eigen::MatrixXd> llt(a);
  bool ok = llt.info() == Eigen::Success;
  if (ok) {
    const Eigen::MatrixXd l = llt.matrixL();
    ok = l.diagonal().minCoeff() > 1e-7 * std::sqrt(std::max(a.diagonal().maxCoeff(), 1e-300));
  }
  if (!ok) fail(ErrorCategory::numeric, "ridge system is singular; use lambda > 0");
  RidgeModel m;
  m.weights = llt.solve(xc.transpose() * yc);
  m.intercept = ym - xm * m.weights;
  return m;
}

/// Ridge solutions for many λ from one eigendecomposition of XᵀX (inputs
/// already centered).
class RidgePath {
 public:
  RidgePath(const Eigen::MatrixXd& xc, const Eigen::MatrixXd& yc) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(xc.transpose() * xc);
    vectors_ = es.eigenvectors();
    values_ = es.eigenvalues().cwiseMax(0.0);
    proj_ = vectors_.transpose() * (xc.transpose() * yc);
  }

  Eigen::MatrixXd weights(double lambda) const {
    const Eigen::VectorXd inv = (values_.array() + lambda).inverse();
    return vectors_ * (inv.asDiagonal() * proj_);
  }

 private:
  Eigen::MatrixXd vectors_;
  Eigen::VectorXd values_;
  Eigen::MatrixXd proj_;
};

struct LogRegModel {
  Eigen::MatrixXd weights;       // d x C
  Eigen::RowVectorXd intercept;  // 1 x C
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0;

  Eigen::MatrixXd logits(const Eigen::MatrixXd& x) const { return (x * weights).rowwise() + intercept; }

  std::vector<int> predict(const Eigen::MatrixXd& x) const {
    const Eigen::MatrixXd z = logits(x);
    std::vector<int> out(static_cast<std::size_t>(z.rows()));
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      Eigen::Index arg;
      z.row(i).maxCoeff(&arg);
      out[static_cast<std::size_t>(i)] = static_cast<int>(arg);
    }
    return out;
  }

  /// Row-wise softmax probabilities.
  Eigen::MatrixXd probabilities(const Eigen::MatrixXd& x) const {
    Eigen::MatrixXd z = logits(x);
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      z.row(i).array() -= z.row(i).maxCoeff();
      z.row(i) = z.row(i).array().exp().matrix();
      z.row(i) /= z.row(i).sum();
    }
    return z;
  }
};

namespace detail {

/// Summed multinomial cross-entropy plus (λ/2)‖W‖²; parameters are W
/// (column-major d x C) followed by the C intercepts.
inline double logreg_objective(const Eigen::MatrixXd& x, const Eigen::MatrixXd& onehot, double lambda,
                               const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
  const Eigen::Index d = x.cols(), c = onehot.cols();
  const Eigen::Map<const Eigen::MatrixXd> w(theta.data(), d, c);
  const Eigen::Map<const Eigen::RowVectorXd> b(theta.data() + d * c, c);
  Eigen::MatrixXd z = (x * w).rowwise() + b;
  z.colwise() -= z.rowwise().maxCoeff();
  // Each one-hot row sums to 1, so the shift cancels between the terms.
  double f = -z.cwiseProduct(onehot).sum();
  z = z.array().exp().matrix();
  const Eigen::VectorXd s = z.rowwise().sum();
  f += s.array().log().sum() + 0.5 * lambda * w.squaredNorm();
  z.array().colwise() /= s.array();
  const Eigen::MatrixXd diff = z - onehot;
  grad.resize(theta.size());
  Eigen::Map<Eigen::MatrixXd>(grad.data(), d, c) = x.transpose() * diff + lambda * w;
  Eigen::Map<Eigen::RowVectorXd>(grad.data() + d * c, c) = diff.colwise().sum();
  return f;
}

}  // namespace detail

struct LogRegOptions {
  int max_iterations = 500;
  double gradient_tolerance = 1e-6;
};

/// Multinomial logistic regression with an unpenalized intercept.
/// Non-convergence is reported through the model's flag, not thrown.
inline LogRegModel logreg_fit(const Eigen::MatrixXd& x, const std::vector<int>& labels, double lambda,
                              int classes = 0, const LogRegModel* warm_start = nullptr,
                              const LogRegOptions& options = {}) {
  require(static_cast<std::size_t>(x.rows()) == labels.size() && x.rows() >= 1, ErrorCategory::alignment,
          "logistic regression inputs differ in row count");
  require(lambda >= 0 && std::isfinite(lambda), ErrorCategory::parameter, "lambda must be >= 0");
  int max_label = 0;
  for (int l : labels) {
    require(l >= 0, ErrorCategory::validation, "class labels must be non-negative");
    max_label = std::max(max_label, l);
  }
  if (classes <= 0) classes = max_label + 1;
  require(classes >= 2 && max_label < classes, ErrorCategory::validation,
          "logistic regression needs at least two classes");
  const Eigen::Index d = x.cols(), c = classes;
  Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(x.rows(), c);
  for (std::size_t i = 0; i < labels.size(); ++i) onehot(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d * c + c);
  if (warm_start && warm_start->weights.rows() == d && warm_start->weights.cols() == c) {
    Eigen::Map<Eigen::MatrixXd>(theta.data(), d, c) = warm_start->weights;
    Eigen::Map<Eigen::RowVectorXd>(theta.data() + d * c, c) = warm_start->intercept;
  }
  const auto r = lbfgs_minimize(
      [&](const Eigen::VectorXd& t, Eigen::VectorXd& g) { return detail::logreg_objective(x, onehot, lambda, t, g); },
      theta, LbfgsOptions{options.max_iterations, options.gradient_tolerance, 10});
  LogRegModel m;
  m.weights = Eigen::Map<const Eigen::MatrixXd>(r.x.data(), d, c);
  m.intercept = Eigen::Map<const Eigen::RowVectorXd>(r.x.data() + d * c, c);
  m.converged = r.converged;
  m.iterations = r.iterations;
  m.gradient_norm = r.gradient_norm;
  return m;
}

/// Mean over output columns of 1 − SS_res/SS_tot, with SS_tot taken about
/// the mean of `truth` itself.
inline double r2_score(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& pred) {
  require(truth.rows() == pred.rows() && truth.cols() == pred.cols() && truth.rows() >= 1, ErrorCategory::alignment,
          "R^2 inputs differ in shape");
  double total = 0;
  for (Eigen::Index j = 0; j < truth.cols(); ++j) {
    const double mean = truth.col(j).mean();
    const double ss_tot = (truth.col(j).array() - mean).square().sum();
    require(ss_tot > 0, ErrorCategory::undefined, "R^2 is undefined for a constant target");
    total += 1.0 - (truth.col(j) - pred.col(j)).squaredNorm() / ss_tot;
  }
  return total / static_cast<double>(truth.cols());
}

inline double accuracy(const std::vector<int>& truth, const std::vector<int>& pred) {
  require(truth.size() == pred.size() && !truth.empty(), ErrorCategory::alignment, "accuracy inputs differ in length");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += truth[i] == pred[i];
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

/// Average of per-class recall over the classes present in `truth`.
inline double mean_per_class_accuracy(const std::vector<int>& truth, const std::vector<int>& pred) {
  require(truth.size() == pred.size() && !truth.empty(), ErrorCategory::alignment, "accuracy inputs differ in length");
  std::map<int, std::pair<std::size_t, std::size_t>> per;  // class -> (hits, count)
  for (std::size_t i = 0; i < truth.size(); ++i) {
    auto& p = per[truth[i]];
    p.first += truth[i] == pred[i];
    ++p.second;
  }
  double total = 0;
  for (const auto& [cls, p] : per) total += static_cast<double>(p.first) / static_cast<double>(p.second);
  return total / static_cast<double>(per.size());
}

}  // namespace invlab
