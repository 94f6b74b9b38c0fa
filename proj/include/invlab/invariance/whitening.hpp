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
#include <optional>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "invlab/core/feature_matrix.hpp"

namespace invlab {

/// Standardizing map for a feature space with mean f̄ and covariance Σ.
/// G is lower-triangular with positive diagonal and G Gᵀ = Σ⁻¹, so that
/// ‖Gᵀ v‖² = vᵀ Σ⁻¹ v.
struct WhiteningTransform {
  Eigen::VectorXd mean;
  Eigen::MatrixXd G;
  double epsilon = 0;

  Eigen::Index dim() const noexcept { return mean.size(); }

  /// Gᵀ v.
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const { return G.transpose().triangularView<Eigen::Upper>() * v; }

  /// z = Gᵀ (f̄ − f).
  Eigen::VectorXd standardize(const Eigen::VectorXd& f) const { return apply(mean - f); }

  /// Builds the transform from a covariance; `epsilon` is added to the
  /// diagonal first.
  static WhiteningTransform from_covariance(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                                            double epsilon) {
    require(cov.rows() == cov.cols() && cov.rows() == mean.size() && mean.size() >= 1, ErrorCategory::validation,
            "covariance shape does not match the mean");
    require(epsilon >= 0 && std::isfinite(epsilon), ErrorCategory::parameter, "ridge epsilon must be >= 0");
    const Eigen::Index d = cov.rows();
    const Eigen::MatrixXd sigma = cov + epsilon * Eigen::MatrixXd::Identity(d, d);
    const Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    const double scale = std::max(sigma.diagonal().cwiseAbs().maxCoeff(), 1e-300);
    bool ok = llt.info() == Eigen::Success;
    if (ok) {
      const Eigen::MatrixXd L = llt.matrixL();
      // Pivot ratios below ~1e-7 mean Σ is singular to working precision.
      ok = L.diagonal().minCoeff() > 1e-7 * std::sqrt(scale);
    }
    if (!ok)
      fail(ErrorCategory::numeric,
           "feature covariance is numerically singular; use a positive ridge epsilon (e.g. 1e-6 * trace / D)");
    // Σ⁻¹ from the Cholesky factor of Σ, then its own Cholesky factor.
    Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(d, d));
    inv = 0.5 * (inv + inv.transpose());
    const Eigen::LLT<Eigen::MatrixXd> inv_llt(inv);
    require(inv_llt.info() == Eigen::Success, ErrorCategory::numeric,
            "inverse covariance is not positive definite; use a larger ridge epsilon");
    WhiteningTransform w;
    w.mean = mean;
    w.G = inv_llt.matrixL();
    w.epsilon = epsilon;
    return w;
  }
};

inline Eigen::VectorXd column_means(const Eigen::MatrixXd& x) { return x.colwise().mean().transpose(); }

/// Unbiased (n − 1) sample covariance of the rows of `x`.
inline Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& x) {
  require(x.rows() >= 2, ErrorCategory::validation, "covariance needs at least two rows");
  const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
  return centered.transpose() * centered / static_cast<double>(x.rows() - 1);
}

inline double default_epsilon(const Eigen::MatrixXd& cov) {
  return 1e-6 * cov.trace() / static_cast<double>(cov.rows());
}

/// Mean and covariance from reference embeddings. Without an explicit
/// epsilon the ridge is 1e-6 * trace(Σ) / D.
inline WhiteningTransform fit_whitening(const Eigen::MatrixXd& ref, std::optional<double> epsilon = std::nullopt) {
  require(ref.rows() >= 2, ErrorCategory::validation, "whitening needs at least two reference rows");
  const Eigen::MatrixXd cov = sample_covariance(ref);
  return WhiteningTransform::from_covariance(column_means(ref), cov, epsilon.value_or(default_epsilon(cov)));
}

inline WhiteningTransform fit_whitening(const FeatureMatrix& ref, std::optional<double> epsilon = std::nullopt) {
  return fit_whitening(ref.to_eigen(), epsilon);
}

/// ‖Gᵀ(fx − ftx)‖, the Mahalanobis distance under the whitening covariance.
inline double mahalanobis_variance(const WhiteningTransform& w, const Eigen::VectorXd& fx, const Eigen::VectorXd& ftx) {
  require(fx.size() == w.dim() && ftx.size() == w.dim(), ErrorCategory::validation,
          "feature dimension does not match the whitening transform");
  return w.apply(fx - ftx).norm();
}

inline double cosine_of_standardized(const Eigen::VectorXd& z, const Eigen::VectorXd& zt) {
  const double zz = z.squaredNorm(), tt = zt.squaredNorm();
  require(zz > 0 && tt > 0, ErrorCategory::undefined,
          "standardized feature has zero norm; cosine similarity is undefined");
  return std::clamp(z.dot(zt) / std::sqrt(zz * tt), -1.0, 1.0);
}

/// Cosine similarity between z = Gᵀ(f̄ − fx) and z_t = Gᵀ(f̄ − ftx).
inline double cosine_invariance(const WhiteningTransform& w, const Eigen::VectorXd& fx, const Eigen::VectorXd& ftx) {
  require(fx.size() == w.dim() && ftx.size() == w.dim(), ErrorCategory::validation,
          "feature dimension does not match the whitening transform");
  return cosine_of_standardized(w.standardize(fx), w.standardize(ftx));
}

}  // namespace invlab
