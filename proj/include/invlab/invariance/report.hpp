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

#include "invlab/core/csv.hpp"
#include "invlab/invariance/protocols.hpp"

namespace invlab {

namespace detail {

template <class Key>
void push_unique(std::vector<Key>& v, const Key& k) {
  if (std::find(v.begin(), v.end(), k) == v.end()) v.push_back(k);
}

}  // namespace detail

/// encoder, transform, metric, value with metrics cosine, mahalanobis,
/// alignment and n.
inline CsvTable invariance_summary_csv(const std::vector<InvarianceEntry>& entries) {
  CsvTable t{{"encoder", "transform", "metric", "value"}, {}};
  for (const auto& e : entries) {
    t.add({e.encoder, e.transform, "cosine", format_double(e.mean_cosine)});
    t.add({e.encoder, e.transform, "mahalanobis", format_double(e.mean_distance)});
    t.add({e.encoder, e.transform, "alignment", format_double(e.alignment)});
    t.add({e.encoder, e.transform, "n", std::to_string(e.samples())});
  }
  return t;
}

/// Long form of every per-sample value.
inline CsvTable invariance_samples_csv(const std::vector<InvarianceEntry>& entries) {
  CsvTable t{{"encoder", "transform", "metric", "index", "value"}, {}};
  for (const auto& e : entries) {
    for (std::size_t i = 0; i < e.cosine.size(); ++i)
      t.add({e.encoder, e.transform, "cosine", std::to_string(i), format_double(e.cosine[i])});
    for (std::size_t i = 0; i < e.distance.size(); ++i)
      t.add({e.encoder, e.transform, "mahalanobis", std::to_string(i), format_double(e.distance[i])});
  }
  return t;
}

/// Rebuilds entries (sample lists and their means) from the long-form CSV.
/// Alignment is not part of the sample file and is left at zero.
inline std::vector<InvarianceEntry> entries_from_samples_csv(const CsvTable& t, const std::string& origin) {
  const auto ce = t.column("encoder"), ct = t.column("transform"), cm = t.column("metric"), ci = t.column("index"),
             cv = t.column("value");
  std::vector<InvarianceEntry> entries;
  auto find = [&](const std::string& enc, const std::string& tr) -> InvarianceEntry& {
    for (auto& e : entries)
      if (e.encoder == enc && e.transform == tr) return e;
    entries.push_back({});
    entries.back().encoder = enc;
    entries.back().transform = tr;
    return entries.back();
  };
  for (const auto& r : t.rows) {
    auto& e = find(r[ce], r[ct]);
    auto& list = r[cm] == "cosine" ? e.cosine : r[cm] == "mahalanobis" ? e.distance : e.cosine;
    require(r[cm] == "cosine" || r[cm] == "mahalanobis", ErrorCategory::format, origin + ": unknown metric " + r[cm]);
    require(r[ci] == std::to_string(list.size()), ErrorCategory::format,
            origin + ": sample indices out of order for " + r[ce] + "/" + r[ct]);
    list.push_back(parse_double(r[cv], origin));
  }
  for (auto& e : entries) {
    e.mean_cosine = detail::mean_of(e.cosine);
    e.mean_distance = detail::mean_of(e.distance);
  }
  return entries;
}

/// Wide table: one row per encoder, one column per transform.
inline CsvTable invariance_table_csv(const std::vector<InvarianceEntry>& entries, const std::string& metric) {
  require(metric == "cosine" || metric == "mahalanobis" || metric == "alignment", ErrorCategory::parameter,
          "unknown invariance metric: " + metric);
  std::vector<std::string> encoders, transforms;
  for (const auto& e : entries) {
    detail::push_unique(encoders, e.encoder);
    detail::push_unique(transforms, e.transform);
  }
  CsvTable t;
  t.header.push_back("model");
  t.header.insert(t.header.end(), transforms.begin(), transforms.end());
  for (const auto& enc : encoders) {
    std::vector<std::string> row = {enc};
    for (const auto& tr : transforms) {
      std::string cell = "nan";
      for (const auto& e : entries)
        if (e.encoder == enc && e.transform == tr)
          cell = format_fixed(metric == "cosine" ? e.mean_cosine : metric == "mahalanobis" ? e.mean_distance : e.alignment);
      row.push_back(cell);
    }
    t.add(std::move(row));
  }
  return t;
}

}  // namespace invlab
