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
#include <string>
#include <vector>

#include "invlab/core/csv.hpp"
#include "invlab/readout/cross_validate.hpp"

namespace invlab {

struct ReadoutRow {
  std::string model;
  std::string task;
  ReadoutResult result;
};

/// model, task, lambda, score, std: the selected point per (model, task).
inline CsvTable readout_summary_csv(const std::vector<ReadoutRow>& rows) {
  CsvTable t{{"model", "task", "lambda", "score", "std"}, {}};
  for (const auto& r : rows)
    t.add({r.model, r.task, format_double(r.result.selected_lambda), format_double(r.result.score),
           format_double(r.result.score_std)});
  return t;
}

/// Every grid point: model, task, index, lambda, mean, std.
inline CsvTable readout_grid_csv(const std::vector<ReadoutRow>& rows) {
  CsvTable t{{"model", "task", "index", "lambda", "mean", "std"}, {}};
  for (const auto& r : rows)
    for (std::size_t j = 0; j < r.result.grid.size(); ++j)
      t.add({r.model, r.task, std::to_string(j), format_double(r.result.grid[j]), format_double(r.result.mean[j]),
             format_double(r.result.std[j])});
  return t;
}

/// Fold id per example: model, task, index, fold.
inline CsvTable readout_folds_csv(const std::vector<ReadoutRow>& rows) {
  CsvTable t{{"model", "task", "index", "fold"}, {}};
  for (const auto& r : rows)
    for (std::size_t i = 0; i < r.result.folds.size(); ++i)
      t.add({r.model, r.task, std::to_string(i), std::to_string(r.result.folds[i])});
  return t;
}

/// Wide table from the summary CSV: rows = models, columns = tasks, cells
/// "mean ± std" in fixed notation.
inline CsvTable readout_table_csv(const CsvTable& summary) {
  const auto cm = summary.column("model"), ct = summary.column("task"), cs = summary.column("score"),
             cd = summary.column("std");
  std::vector<std::string> models, tasks;
  auto push = [](std::vector<std::string>& v, const std::string& s) {
    if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
  };
  for (const auto& r : summary.rows) {
    push(models, r[cm]);
    push(tasks, r[ct]);
  }
  CsvTable t;
  t.header = {"model"};
  t.header.insert(t.header.end(), tasks.begin(), tasks.end());
  for (const auto& m : models) {
    std::vector<std::string> cells(tasks.size() + 1, "");
    cells[0] = m;
    for (const auto& r : summary.rows)
      if (r[cm] == m) {
        const auto j = static_cast<std::size_t>(std::find(tasks.begin(), tasks.end(), r[ct]) - tasks.begin());
        cells[j + 1] = format_fixed(parse_double(r[cs], "summary")) + " ± " + format_fixed(parse_double(r[cd], "summary"));
      }
    t.add(cells);
  }
  return t;
}

}  // namespace invlab
