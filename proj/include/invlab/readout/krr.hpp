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
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "invlab/core/csv.hpp"
#include "invlab/core/error.hpp"
#include "invlab/core/feature_matrix.hpp"
#include "invlab/core/rng.hpp"
#include "invlab/readout/linear.hpp"

namespace invlab {

/// k(a, b) = exp(-γ‖a − b‖²) between the rows of `a` and `b`.
inline Eigen::MatrixXd rbf_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double gamma) {
  require(a.cols() == b.cols(), ErrorCategory::alignment, "kernel inputs differ in dimension");
  require(gamma >= 0 && std::isfinite(gamma), ErrorCategory::parameter, "RBF gamma must be >= 0");
  const Eigen::VectorXd na = a.rowwise().squaredNorm(), nb = b.rowwise().squaredNorm();
  Eigen::MatrixXd d2 = -2.0 * a * b.transpose();
  d2.colwise() += na;
  d2.rowwise() += nb.transpose();
  return (-gamma * d2.cwiseMax(0.0)).array().exp().matrix();
}

namespace detail {

/// Solves (K + αI)C = Y for every column of Y at once.
inline Eigen::MatrixXd krr_solve(const Eigen::MatrixXd& k, const Eigen::MatrixXd& y, double alpha) {
  Eigen::MatrixXd a = k;
  a.diagonal().array() += alpha;
  const Eigen::LLT<Eigen::MatrixXd> llt(a);
  require(llt.info() == Eigen::Success, ErrorCategory::numeric, "kernel system is not positive definite");
  return llt.solve(y);
}

}  // namespace detail

struct KrrPrediction {
  Eigen::MatrixXd predictions;  // test rows x target columns
  double r2 = std::numeric_limits<double>::quiet_NaN();  // set when test targets are given
};

/// Kernel ridge regression with an RBF kernel, no internal scaling.
inline KrrPrediction krr_fit_predict(const Eigen::MatrixXd& xtr, const Eigen::MatrixXd& ytr, const Eigen::MatrixXd& xte,
                                     double alpha, double gamma, const Eigen::MatrixXd* yte = nullptr) {
  require(xtr.rows() == ytr.rows() && xtr.rows() >= 1, ErrorCategory::alignment,
          "training features and targets differ in row count");
  require(alpha > 0 && std::isfinite(alpha), ErrorCategory::parameter, "KRR alpha must be > 0");
  const Eigen::MatrixXd c = detail::krr_solve(rbf_kernel(xtr, xtr, gamma), ytr, alpha);
  KrrPrediction p;
  p.predictions = rbf_kernel(xte, xtr, gamma) * c;
  if (yte) p.r2 = r2_score(*yte, p.predictions);
  return p;
}

struct KrrConfig {
  std::vector<double> alphas = {1e-4, 1e-3, 1e-2, 1e-1, 1e0};
  std::vector<double> gammas = {1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1e0, 1e1, 1e2};
  std::size_t train_count = 2048;
  std::size_t test_count = 4096;
  double validation_fraction = 0.2;  // of the training rows, for the grid search
  bool standardize_inputs = true;
  bool standardize_targets = true;
  std::uint64_t seed = 0;

  void validate() const {
    require(!alphas.empty() && !gammas.empty(), ErrorCategory::config, "KRR grids must be non-empty");
    for (double a : alphas) require(a > 0, ErrorCategory::config, "KRR alphas must be > 0");
    for (double g : gammas) require(g >= 0, ErrorCategory::config, "KRR gammas must be >= 0");
    require(train_count >= 5 && test_count >= 2, ErrorCategory::config, "KRR sample counts too small");
    require(validation_fraction > 0 && validation_fraction < 1, ErrorCategory::config,
            "validation fraction must lie in (0, 1)");
  }
};

struct FactorScore {
  std::string factor;
  double r2 = 0;             // on the test split
  double validation_r2 = 0;  // at the selected point
  double alpha = 0;
  double gamma = 0;
};

/// Per-factor grid search over (α, γ) on a validation split of the
/// training rows, then a refit on all training rows scored on the test rows.
inline std::vector<FactorScore> krr_factor_scores(Eigen::MatrixXd xtr, Eigen::MatrixXd ytr, Eigen::MatrixXd xte,
                                                  Eigen::MatrixXd yte, const std::vector<std::string>& names,
                                                  const KrrConfig& kc) {
  kc.validate();
  require(xtr.rows() == ytr.rows() && xte.rows() == yte.rows() && ytr.cols() == yte.cols() &&
              xtr.cols() == xte.cols(),
          ErrorCategory::alignment, "KRR train/test blocks do not line up");
  require(names.size() == static_cast<std::size_t>(ytr.cols()), ErrorCategory::alignment,
          "factor names do not match target columns");
  for (Eigen::Index j = 0; j < ytr.cols(); ++j) {
    const bool const_tr = (ytr.col(j).array() == ytr(0, j)).all();
    const bool const_te = (yte.col(j).array() == yte(0, j)).all();
    require(!const_tr && !const_te, ErrorCategory::undefined,
            "factor " + names[static_cast<std::size_t>(j)] + " is constant; R^2 is undefined");
  }
  if (kc.standardize_inputs) {
    const auto s = Standardizer::fit(xtr);
    xtr = s.apply(xtr);
    xte = s.apply(xte);
  }
  if (kc.standardize_targets) {
    const auto s = Standardizer::fit(ytr);
    ytr = s.apply(ytr);
    yte = s.apply(yte);
  }

  // Seeded permutation picks the validation rows.
  std::vector<std::size_t> perm(static_cast<std::size_t>(xtr.rows()));
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  SeededRng(kc.seed).derive(0x4B22).shuffle(perm);
  const auto n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(kc.validation_fraction * static_cast<double>(perm.size()))));
  require(n_val < perm.size(), ErrorCategory::config, "validation split leaves no training rows");
  Eigen::MatrixXd xv(static_cast<Eigen::Index>(n_val), xtr.cols()), yv(static_cast<Eigen::Index>(n_val), ytr.cols());
  Eigen::MatrixXd xf(static_cast<Eigen::Index>(perm.size() - n_val), xtr.cols()),
      yf(static_cast<Eigen::Index>(perm.size() - n_val), ytr.cols());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    const auto src = static_cast<Eigen::Index>(perm[i]);
    if (i < n_val) {
      xv.row(static_cast<Eigen::Index>(i)) = xtr.row(src);
      yv.row(static_cast<Eigen::Index>(i)) = ytr.row(src);
    } else {
      xf.row(static_cast<Eigen::Index>(i - n_val)) = xtr.row(src);
      yf.row(static_cast<Eigen::Index>(i - n_val)) = ytr.row(src);
    }
  }

  const auto factors = static_cast<std::size_t>(ytr.cols());
  std::vector<FactorScore> out(factors);
  for (std::size_t j = 0; j < factors; ++j) {
    out[j].factor = names[j];
    out[j].validation_r2 = -std::numeric_limits<double>::infinity();
  }
  for (double gamma : kc.gammas) {
    const Eigen::MatrixXd k = rbf_kernel(xf, xf, gamma), kv = rbf_kernel(xv, xf, gamma);
    for (double alpha : kc.alphas) {
      const Eigen::MatrixXd pred = kv * detail::krr_solve(k, yf, alpha);
      for (std::size_t j = 0; j < factors; ++j) {
        const auto c = static_cast<Eigen::Index>(j);
        double r2;
        try {
          r2 = r2_score(yv.col(c), pred.col(c));
        } catch (const Error& e) {
          if (e.category() != ErrorCategory::undefined) throw;
          fail(ErrorCategory::undefined, "factor " + names[j] + " is constant on the validation split");
        }
        if (r2 > out[j].validation_r2) {
          out[j].validation_r2 = r2;
          out[j].alpha = alpha;
          out[j].gamma = gamma;
        }
      }
    }
  }
  for (std::size_t j = 0; j < factors; ++j) {
    const auto c = static_cast<Eigen::Index>(j);
    const Eigen::MatrixXd y_col = ytr.col(c), t_col = yte.col(c);
    out[j].r2 = krr_fit_predict(xtr, y_col, xte, out[j].alpha, out[j].gamma, &t_col).r2;
  }
  return out;
}

struct NamedFeatures {
  std::string model;
  Eigen::MatrixXd features;  // one row per example, shared example order
};

struct LatentRow {
  std::string model;
  std::vector<FactorScore> scores;
};

/// Latent-factor regression for every model: the first `train_count` rows
/// train, the next `test_count` rows test.
inline std::vector<LatentRow> latent_prediction_suite(const std::vector<NamedFeatures>& models,
                                                      const Eigen::MatrixXd& factors,
                                                      const std::vector<std::string>& names, const KrrConfig& kc) {
  kc.validate();
  const auto need = static_cast<Eigen::Index>(kc.train_count + kc.test_count);
  require(factors.rows() >= need, ErrorCategory::config,
          "latent suite needs " + std::to_string(need) + " examples, have " + std::to_string(factors.rows()));
  const auto tr = static_cast<Eigen::Index>(kc.train_count), te = static_cast<Eigen::Index>(kc.test_count);
  std::vector<LatentRow> rows;
  for (const auto& m : models) {
    require(m.features.rows() == factors.rows(), ErrorCategory::alignment,
            "features of " + m.model + " do not cover the factor rows");
    rows.push_back({m.model, krr_factor_scores(m.features.topRows(tr), factors.topRows(tr),
                                               m.features.middleRows(tr, te), factors.middleRows(tr, te), names, kc)});
  }
  return rows;
}

/// Long form: model, factor, r2, validation_r2, alpha, gamma.
inline CsvTable latent_scores_csv(const std::vector<LatentRow>& rows) {
  CsvTable t;
  t.header = {"model", "factor", "r2", "validation_r2", "alpha", "gamma"};
  for (const auto& r : rows)
    for (const auto& s : r.scores)
      t.add({r.model, s.factor, format_double(s.r2), format_double(s.validation_r2), format_double(s.alpha),
             format_double(s.gamma)});
  return t;
}

/// Wide form: one row per model, one R^2 column per factor.
inline CsvTable latent_table_csv(const std::vector<LatentRow>& rows) {
  CsvTable t;
  t.header = {"model"};
  if (!rows.empty())
    for (const auto& s : rows.front().scores) t.header.push_back(s.factor);
  for (const auto& r : rows) {
    std::vector<std::string> cells = {r.model};
    for (const auto& s : r.scores) cells.push_back(format_fixed(s.r2));
    t.add(cells);
  }
  return t;
}

}  // namespace invlab
