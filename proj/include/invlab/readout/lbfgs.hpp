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
#include <deque>

#include <Eigen/Dense>

namespace invlab {

struct LbfgsOptions {
  int max_iterations = 500;
  double gradient_tolerance = 1e-6;  // on the Euclidean norm of the gradient
  int history = 10;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double value = 0;
  double gradient_norm = 0;
  int iterations = 0;
  bool converged = false;
};

/// Limited-memory BFGS with a backtracking Armijo line search. `fg(x, g)`
/// returns f(x) and writes its gradient into g.
template <class Objective>
LbfgsResult lbfgs_minimize(Objective&& fg, Eigen::VectorXd x, const LbfgsOptions& opt = {}) {
  Eigen::VectorXd g(x.size());
  double f = fg(x, g);
  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;
  LbfgsResult r;
  int it = 0;
  for (; it < opt.max_iterations && g.norm() > opt.gradient_tolerance; ++it) {
    // Two-loop recursion for d = -H g.
    Eigen::VectorXd q = g;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t k = s_hist.size(); k-- > 0;) {
      alpha[k] = rho_hist[k] * s_hist[k].dot(q);
      q -= alpha[k] * y_hist[k];
    }
    double gamma = 1.0;
    if (!s_hist.empty()) gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    else gamma = 1.0 / std::max(1.0, g.norm());
    Eigen::VectorXd d = -gamma * q;
    for (std::size_t k = 0; k < s_hist.size(); ++k) {
      const double beta = rho_hist[k] * y_hist[k].dot(d);
      d -= (alpha[k] + beta) * s_hist[k];
    }
    double slope = g.dot(d);
    if (slope >= 0) {  // not a descent direction; restart from steepest descent
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      d = -g / std::max(1.0, g.norm());
      slope = g.dot(d);
    }
    double step = 1.0;
    Eigen::VectorXd x_new, g_new(x.size());
    double f_new = f;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = x + step * d;
      f_new = fg(x_new, g_new);
      if (!std::isfinite(f_new)) {
        step *= 0.5;
        continue;
      }
      // Near the optimum the decrease can fall below the rounding error of
      // f; an approximate Wolfe test on the gradient then stands in.
      const bool armijo = f_new <= f + 1e-4 * step * slope;
      const bool approx = f_new <= f + 1e-12 * std::abs(f) && std::abs(g_new.dot(d)) <= 0.9 * std::abs(slope);
      if (armijo || approx) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    Eigen::VectorXd s = x_new - x, y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > opt.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    x = std::move(x_new);
    g = g_new;
    f = f_new;
  }
  r.x = std::move(x);
  r.value = f;
  r.gradient_norm = g.norm();
  r.iterations = it;
  r.converged = r.gradient_norm <= opt.gradient_tolerance;
  return r;
}

}  // namespace invlab
