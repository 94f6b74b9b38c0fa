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

#include <string>
#include <vector>

#include "invlab/core/error.hpp"
#include "invlab/core/feature_matrix.hpp"

namespace invlab {

/// Column-wise concatenation of row-aligned feature matrices. The result's
/// meta lists the source encoders in order ("sources", comma-free, joined
/// by '+') and names the fused encoder the same way.
inline FeatureMatrix fuse(const std::vector<FeatureMatrix>& parts) {
  require(!parts.empty(), ErrorCategory::validation, "nothing to fuse");
  const std::size_t n = parts.front().rows();
  std::size_t d = 0;
  std::string sources;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    require(parts[p].rows() == n, ErrorCategory::alignment,
            "fuse input " + std::to_string(p) + " has " + std::to_string(parts[p].rows()) + " rows, expected " +
                std::to_string(n));
    d += parts[p].cols();
    const auto it = parts[p].meta().find("encoder");
    if (p) sources += '+';
    sources += it == parts[p].meta().end() ? "part" + std::to_string(p) : it->second;
  }
  std::vector<float> values;
  values.reserve(n * d);
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& part : parts) {
      const auto r = part.row(i);
      values.insert(values.end(), r.begin(), r.end());
    }
  Metadata meta = parts.size() == 1 ? parts.front().meta() : Metadata{};
  meta["encoder"] = sources;
  meta["sources"] = sources;
  return FeatureMatrix(n, d, std::move(values), std::move(meta));
}

/// Number of '+'-joined sources in a fused encoder name.
inline std::size_t source_count(const std::string& name) {
  std::size_t k = 1;
  for (char c : name) k += c == '+';
  return k;
}

}  // namespace invlab
