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
#include <numeric>
#include <string>
#include <vector>

#include "invlab/core/error.hpp"

namespace invlab {

/// Deviation t at which P(S_n - E[S_n] >= t) <= delta for the mean of n
/// independent variables each confined to an interval of `range_width`.
inline double hoeffding_threshold(std::size_t n, double delta, double range_width = 1.0) {
  require(n >= 1, ErrorCategory::parameter, "Hoeffding threshold needs n >= 1");
  require(delta > 0 && delta < 1, ErrorCategory::parameter, "delta must lie in (0, 1)");
  require(range_width > 0 && std::isfinite(range_width), ErrorCategory::parameter, "range width must be positive");
  return range_width * std::sqrt(std::log(1.0 / delta) / (2.0 * static_cast<double>(n)));
}

struct TestResult {
  double mean = 0;       // S_n
  double threshold = 0;  // t
  bool reject = false;   // S_n > t
  std::size_t n = 0;
  double delta = 0;  // after Bonferroni division
  double range_width = 0;
};

/// Range of a difference of two cosine similarities.
inline constexpr double kCosineDifferenceWidth = 4.0;

/// One-sided test of H0: E[a_i - b_i] <= 0 on paired cosine similarities.
/// The per-test level is delta / m_tests.
inline TestResult test_mean_difference(const std::vector<double>& a, const std::vector<double>& b, double delta,
                                       std::size_t m_tests) {
  require(a.size() == b.size(), ErrorCategory::protocol,
          "paired samples differ in length: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  require(!a.empty(), ErrorCategory::protocol, "no samples to test");
  require(m_tests >= 1, ErrorCategory::parameter, "number of simultaneous tests must be >= 1");
  constexpr double slack = 1e-12;
  double sum = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    require(std::abs(a[i]) <= 1 + slack && std::abs(b[i]) <= 1 + slack, ErrorCategory::validation,
            "similarity sample outside [-1, 1] at index " + std::to_string(i));
    sum += a[i] - b[i];
  }
  TestResult r;
  r.n = a.size();
  r.mean = sum / static_cast<double>(r.n);
  r.delta = delta / static_cast<double>(m_tests);
  r.range_width = kCosineDifferenceWidth;
  r.threshold = hoeffding_threshold(r.n, r.delta, r.range_width);
  r.reject = r.mean > r.threshold;
  return r;
}

}  // namespace invlab
