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

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "invlab/core/csv.hpp"
#include "invlab/core/fvec.hpp"
#include "invlab/core/image_dir.hpp"
#include "invlab/core/shapes.hpp"
#include "invlab/encoder/checkpoint.hpp"
#include "invlab/encoder/encoder.hpp"
#include "invlab/encoder/train.hpp"
#include "invlab/invariance/protocols.hpp"
#include "invlab/invariance/report.hpp"
#include "invlab/invariance/whitening.hpp"
#include "invlab/pipeline/config.hpp"
#include "invlab/pipeline/manifest.hpp"
#include "invlab/readout/cross_validate.hpp"
#include "invlab/readout/fuse.hpp"
#include "invlab/readout/krr.hpp"
#include "invlab/readout/report.hpp"
#include "invlab/stats/correlation.hpp"
#include "invlab/stats/hypothesis.hpp"

namespace invlab::pipeline {

namespace fs = std::filesystem;

/// State shared by the commands of one invocation. Cross-command state only
/// travels through files in `out`.
class RunContext {
 public:
  RunContext(ExperimentConfig cfg, std::vector<fs::path> feature_files = {}, std::ostream* log = nullptr)
      : cfg_(std::move(cfg)), out_(cfg_.output), log_(log) {
    for (const auto& p : feature_files) {
      auto m = read_feature_matrix(p);
      const auto enc = m.meta().find("encoder"), split = m.meta().find("split");
      require(enc != m.meta().end() && split != m.meta().end(), ErrorCategory::validation,
              p.string() + ": feature file lacks 'encoder' or 'split' metadata");
      provided_[{enc->second, split->second}] = std::move(m);
    }
    fs::create_directories(out_);
    manifest_ = RunManifest::load_or_new(out_, cfg_);
  }

  const ExperimentConfig& config() const noexcept { return cfg_; }
  const fs::path& out() const noexcept { return out_; }

  void begin(const std::string& verb) { manifest_.commands[verb] = {{"started", utc_timestamp()}}; }

  void finish(const std::string& verb) {
    manifest_.commands[verb]["finished"] = utc_timestamp();
    manifest_.save(out_);
  }

  void log(const std::string& msg) const {
    if (log_) *log_ << msg << std::endl;
  }

  fs::path write(const CsvTable& t, const std::string& rel) {
    const auto p = prepare(out_ / rel);
    write_csv(t, p);
    manifest_.record(out_, p);
    return p;
  }

  fs::path write_markdown(const std::string& text, const std::string& rel) {
    const auto p = prepare(out_ / rel);
    write_text(p, text);
    manifest_.record(out_, p);
    return p;
  }

  fs::path checkpoint_path(const std::string& name) const { return out_ / "checkpoints" / (name + ".enck"); }

  void save_checkpoint(const Encoder& e, const std::string& name) {
    const auto p = prepare(checkpoint_path(name));
    write_checkpoint(e, p);
    manifest_.record(out_, p);
  }

  const Encoder* encoder(const std::string& name) {
    if (auto it = encoders_.find(name); it != encoders_.end()) return &it->second;
    const auto p = checkpoint_path(name);
    if (!fs::exists(p)) return nullptr;
    return &encoders_.emplace(name, read_checkpoint(p)).first->second;
  }

  /// Embeddings of `images` for (model, split): a --features file when one
  /// matches, otherwise the model's checkpoint. Computed features are
  /// written under features/ so later runs can pass them back in.
  FeatureMatrix features(const std::string& model, const std::string& split, std::span<const Image> images) {
    if (auto it = provided_.find({model, split}); it != provided_.end()) {
      require(it->second.rows() == images.size(), ErrorCategory::alignment,
              "features for " + model + "/" + split + " have " + std::to_string(it->second.rows()) +
                  " rows, dataset has " + std::to_string(images.size()));
      return it->second;
    }
    const Encoder* e = encoder(model);
    if (!e)
      fail(ErrorCategory::io, "no checkpoint or --features for encoder " + model + " (split " + split +
                                  "); run 'train' first");
    auto f = e->embed(images, cfg_.threads);
    f.meta() = {{"encoder", model}, {"split", split}};
    const auto p = prepare(out_ / "features" / (model + "." + split + ".fvec"));
    write_feature_matrix(f, p);
    manifest_.record(out_, p);
    return f;
  }

  bool has_features(const std::string& model, const std::string& split) const {
    return provided_.count({model, split}) > 0;
  }

  // Datasets, each from its own seed stream.
  LabeledDataset train_set() const { return dataset(1, cfg_.dataset.train_count); }
  LabeledDataset whitening_set() const { return dataset(2, cfg_.invariance.whitening_images); }
  LabeledDataset invariance_set() const { return dataset(3, cfg_.invariance.images); }
  LabeledDataset readout_set() const { return dataset(4, cfg_.readout.examples); }
  LabeledDataset latent_set() const { return dataset(5, cfg_.latent.krr.train_count + cfg_.latent.krr.test_count); }

 private:
  static fs::path prepare(const fs::path& p) {
    fs::create_directories(p.parent_path());
    return p;
  }

  LabeledDataset dataset(std::uint64_t split, std::size_t n) const {
    if (!cfg_.dataset.directory.empty()) {
      auto ds = load_image_group_dir(cfg_.dataset.directory);
      if (ds.size() <= n) return ds;
      // Files are ordered by group, so take a seeded random subset.
      std::vector<std::size_t> idx(ds.size());
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
      SeededRng rng(cfg_.dataset_seed(split));
      rng.shuffle(idx);
      idx.resize(n);
      std::sort(idx.begin(), idx.end());
      return ds.subset(idx);
    }
    return make_shapes_dataset(n, cfg_.dataset_seed(split), cfg_.dataset.shapes);
  }

  ExperimentConfig cfg_;
  fs::path out_;
  std::ostream* log_;
  RunManifest manifest_;
  std::map<std::pair<std::string, std::string>, FeatureMatrix> provided_;
  std::map<std::string, Encoder> encoders_;
};

/// Trains one encoder per encoder block and writes its checkpoint.
inline std::vector<fs::path> cmd_train(RunContext& run) {
  run.begin("train");
  const auto& cfg = run.config();
  const auto data = run.train_set();
  std::vector<fs::path> out;
  for (const auto& b : cfg.encoders) {
    run.log("train: " + b.name);
    try {
      Encoder e;
      switch (b.kind) {
        case EncoderKind::contrastive: e = train_contrastive(data, cfg.architecture, b.contrastive, b.name); break;
        case EncoderKind::supervised: e = train_supervised(data, cfg.architecture, b.supervised, b.name); break;
        case EncoderKind::random: e = random_encoder(cfg.architecture, b.contrastive.seed, b.name); break;
      }
      run.save_checkpoint(e, b.name);
      out.push_back(run.checkpoint_path(b.name));
    } catch (const Error& err) {
      const auto& policy =
          b.kind == EncoderKind::supervised ? b.supervised.policy.name : b.contrastive.policy.name;
      fail(err.category(), "encoder " + b.name + " (policy " + policy + "): " + err.what());
    }
  }
  run.finish("train");
  return out;
}

/// Synthetic invariance for every configured transform and encoder, plus
/// the pairwise protocol when a grouped directory is configured.
inline std::vector<InvarianceEntry> cmd_invariance(RunContext& run) {
  run.begin("invariance");
  const auto& cfg = run.config();
  const auto wset = run.whitening_set();
  const auto iset = run.invariance_set();
  std::optional<LabeledDataset> pset;
  if (!cfg.invariance.pairwise_directory.empty()) pset = load_image_group_dir(cfg.invariance.pairwise_directory);

  struct PerModel {
    std::string name;
    WhiteningTransform w;
    FeatureMatrix base;
    const Encoder* enc = nullptr;
  };
  std::vector<PerModel> models;
  for (const auto& b : cfg.encoders) {
    PerModel m{b.name, {}, {}, run.encoder(b.name)};
    m.w = fit_whitening(run.features(b.name, "whitening", wset.images), cfg.invariance.epsilon);
    m.base = run.features(b.name, "invariance", iset.images);
    models.push_back(std::move(m));
  }

  std::vector<InvarianceEntry> entries;
  for (const auto& t : cfg.invariance.transforms) {
    run.log("invariance: " + t.name);
    if (!t.kind) {
      for (const auto& m : models) {
        auto e = invariance_from_features(m.base.to_eigen(), m.base.to_eigen(), 1, m.w);
        e.encoder = m.name;
        e.transform = t.name;
        entries.push_back(std::move(e));
      }
      continue;
    }
    const auto grid = sample_grid(*t.kind, t.grid_points);
    // Same transformed images for every encoder so samples are paired.
    const std::uint64_t tseed = SeededRng(cfg.seed).derive(0x7F000000 + static_cast<std::uint64_t>(*t.kind)).next_u64();
    std::vector<Eigen::MatrixXd> tf;
    for (const auto& m : models)
      tf.emplace_back(static_cast<Eigen::Index>(iset.size() * grid.size()), static_cast<Eigen::Index>(m.base.cols()));
    for (std::size_t i = 0; i < iset.size(); ++i) {
      const auto imgs =
          transform_images(std::span<const Image>(iset.images).subspan(i, 1), *t.kind, grid, tseed, i);
      for (std::size_t k = 0; k < models.size(); ++k) {
        if (!models[k].enc) continue;
        tf[k].middleRows(static_cast<Eigen::Index>(i * grid.size()), static_cast<Eigen::Index>(grid.size())) =
            models[k].enc->embed(imgs, cfg.threads).to_eigen();
      }
    }
    for (std::size_t k = 0; k < models.size(); ++k) {
      if (!models[k].enc) {
        run.log("invariance: skipping " + t.name + " for " + models[k].name + " (features only)");
        continue;
      }
      auto e = invariance_from_features(models[k].base.to_eigen(), tf[k], grid.size(), models[k].w);
      e.encoder = models[k].name;
      e.transform = t.name;
      entries.push_back(std::move(e));
    }
  }
  if (pset) {
    for (const auto& m : models) {
      auto e = pairwise_invariance(run.features(m.name, "pairwise", pset->images), *pset->group_ids, m.w);
      e.encoder = m.name;
      if (auto w = e.meta.find("warning"); w != e.meta.end()) run.log("invariance: " + m.name + ": " + w->second);
      entries.push_back(std::move(e));
    }
  }
  run.write(invariance_summary_csv(entries), "invariance/summary.csv");
  run.write(invariance_samples_csv(entries), "invariance/samples.csv");
  run.write(invariance_table_csv(entries, "cosine"), "invariance/table_cosine.csv");
  run.write(invariance_table_csv(entries, "mahalanobis"), "invariance/table_mahalanobis.csv");
  run.finish("invariance");
  return entries;
}

/// Pairwise one-sided tests among the stats models on every transform.
/// Returns (significance, marks): a model is marked when it significantly
/// exceeds every other model on that transform.
inline std::pair<CsvTable, CsvTable> significance_tables(const std::vector<InvarianceEntry>& entries,
                                                         const std::vector<std::string>& models, double delta,
                                                         std::size_t m_tests) {
  std::map<std::pair<std::string, std::string>, const InvarianceEntry*> by;
  std::vector<std::string> transforms;
  for (const auto& e : entries) {
    by[{e.encoder, e.transform}] = &e;
    if (std::find(transforms.begin(), transforms.end(), e.transform) == transforms.end())
      transforms.push_back(e.transform);
  }
  CsvTable sig{{"transform", "model", "other", "mean_difference", "threshold", "delta", "n", "reject"}, {}};
  CsvTable marks{{"transform", "model", "mark"}, {}};
  for (const auto& t : transforms) {
    std::vector<std::string> present;
    for (const auto& m : models)
      if (by.count({m, t})) present.push_back(m);
    if (present.size() < 2) continue;
    for (const auto& a : present) {
      bool beats_all = true;
      for (const auto& b : present) {
        if (a == b) continue;
        const auto r = test_mean_difference(by[{a, t}]->cosine, by[{b, t}]->cosine, delta, m_tests);
        sig.add({t, a, b, format_double(r.mean), format_double(r.threshold), format_double(r.delta),
                 std::to_string(r.n), r.reject ? "1" : "0"});
        beats_all = beats_all && r.reject;
      }
      marks.add({t, a, beats_all ? "1" : "0"});
    }
  }
  return {sig, marks};
}

inline std::pair<CsvTable, CsvTable> cmd_test(RunContext& run) {
  run.begin("test");
  const auto& cfg = run.config();
  const auto p = run.out() / "invariance" / "samples.csv";
  const auto entries = entries_from_samples_csv(read_csv(p), p.string());
  auto tables = significance_tables(entries, cfg.stats.models, cfg.stats.delta, cfg.stats.bonferroni);
  run.write(tables.first, "test/significance.csv");
  run.write(tables.second, "test/marks.csv");
  run.finish("test");
  return tables;
}

namespace detail {

inline Eigen::MatrixXd factor_columns(const LabeledDataset& ds, const std::vector<std::string>& names) {
  require(ds.factors.has_value(), ErrorCategory::validation, "dataset has no factors");
  Eigen::MatrixXd y(ds.factors->rows(), static_cast<Eigen::Index>(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j)
    y.col(static_cast<Eigen::Index>(j)) = ds.factors->col(static_cast<Eigen::Index>(factor_index(names[j])));
  return y;
}

}  // namespace detail

/// Cross-validated readout per (model, task), fusion rows included, and the
/// latent-factor KRR suite when configured.
inline std::vector<ReadoutRow> cmd_readout(RunContext& run) {
  run.begin("readout");
  const auto& cfg = run.config();
  require(cfg.readout.enabled || cfg.latent.enabled, ErrorCategory::config, "config has no readout or latent block");
  std::vector<ReadoutRow> rows;
  auto model_features = [&](const std::string& split, const LabeledDataset& ds) {
    std::vector<std::pair<std::string, FeatureMatrix>> out;
    std::map<std::string, FeatureMatrix> by_name;
    for (const auto& b : cfg.encoders) {
      by_name[b.name] = run.features(b.name, split, ds.images);
      out.emplace_back(b.name, by_name[b.name]);
    }
    for (const auto& f : cfg.readout.fusions) {
      std::vector<FeatureMatrix> parts;
      for (const auto& s : f.sources) parts.push_back(by_name.at(s));
      out.emplace_back(f.name, fuse(parts));
    }
    return out;
  };

  if (cfg.readout.enabled) {
    const auto ds = run.readout_set();
    const auto feats = model_features("readout", ds);
    for (const auto& [model, f] : feats) {
      const Eigen::MatrixXd x = f.to_eigen();
      const std::size_t sources = f.meta().count("sources") ? source_count(f.meta().at("sources")) : 1;
      for (const auto& t : cfg.readout.tasks) {
        run.log("readout: " + model + " / " + t.name);
        ReadoutConfig rc;
        rc.task = t.kind;
        rc.metric = t.metric;
        rc.grid = default_grid(cfg.readout.shift_fused_grids ? sources : 1);
        rc.folds = cfg.readout.folds;
        rc.seed = cfg.seed;
        rc.standardize = cfg.readout.standardize;
        rc.max_iterations = cfg.readout.max_iterations;
        ReadoutTargets y;
        if (t.kind == TaskKind::classification) {
          require(ds.labels.has_value(), ErrorCategory::validation, "readout dataset has no labels");
          y = ReadoutTargets::classes(*ds.labels);
        } else {
          y = ReadoutTargets::regression(detail::factor_columns(ds, t.factors));
        }
        auto r = cross_validate(x, y, rc);
        if (r.unconverged_fits)
          run.log("readout: " + model + " / " + t.name + ": " + std::to_string(r.unconverged_fits) +
                  " logistic fits hit the iteration cap");
        rows.push_back({model, t.name, std::move(r)});
      }
    }
    const auto summary = readout_summary_csv(rows);
    run.write(summary, "readout/summary.csv");
    run.write(readout_grid_csv(rows), "readout/grid.csv");
    run.write(readout_folds_csv(rows), "readout/folds.csv");
    run.write(readout_table_csv(summary), "readout/table.csv");
  }

  if (cfg.latent.enabled) {
    const auto ds = run.latent_set();
    std::vector<NamedFeatures> named;
    for (const auto& [model, f] : model_features("latent", ds)) {
      const bool fused = f.meta().count("sources") && source_count(f.meta().at("sources")) > 1;
      if (fused && !cfg.latent.include_fusions) continue;
      named.push_back({model, f.to_eigen()});
    }
    run.log("readout: latent suite");
    const auto lrows =
        latent_prediction_suite(named, detail::factor_columns(ds, cfg.latent.factors), cfg.latent.factors, cfg.latent.krr);
    run.write(latent_scores_csv(lrows), "readout/latent_scores.csv");
    run.write(latent_table_csv(lrows), "readout/latent_table.csv");
  }
  run.finish("readout");
  return rows;
}

namespace detail {

/// Profiles keyed by `key_col` over the models in `models`, value from
/// `value_col`, restricted to rows where `filter_col` == `filter_value`.
inline std::vector<NamedProfile> profiles(const CsvTable& t, const std::string& key_col, const std::string& value_col,
                                          const std::vector<std::string>& models, const std::string& filter_col = "",
                                          const std::string& filter_value = "") {
  const auto ck = t.column(key_col), cv = t.column(value_col);
  const auto cm = t.header.front() == "model" ? t.column("model") : t.column("encoder");
  std::vector<std::string> keys;
  std::map<std::pair<std::string, std::string>, double> value;
  for (const auto& r : t.rows) {
    if (!filter_col.empty() && r[t.column(filter_col)] != filter_value) continue;
    if (std::find(keys.begin(), keys.end(), r[ck]) == keys.end()) keys.push_back(r[ck]);
    value[{r[ck], r[cm]}] = parse_double(r[cv], key_col);
  }
  std::vector<NamedProfile> out;
  for (const auto& k : keys) {
    NamedProfile p{k, {}};
    bool complete = true;
    for (const auto& m : models) {
      const auto it = value.find({k, m});
      if (it == value.end()) {
        complete = false;
        break;
      }
      p.values.push_back(it->second);
    }
    if (complete) out.push_back(std::move(p));
  }
  return out;
}

inline std::vector<std::string> column_values(const CsvTable& t, const std::string& col) {
  std::vector<std::string> out;
  const auto c = t.column(col);
  for (const auto& r : t.rows)
    if (std::find(out.begin(), out.end(), r[c]) == out.end()) out.push_back(r[c]);
  return out;
}

inline CsvTable matrix_csv(const CorrelationMatrix& m) {
  CsvTable t;
  t.header = {"profile"};
  t.header.insert(t.header.end(), m.col_labels.begin(), m.col_labels.end());
  for (Eigen::Index i = 0; i < m.rho.rows(); ++i) {
    std::vector<std::string> row = {m.row_labels[static_cast<std::size_t>(i)]};
    for (Eigen::Index j = 0; j < m.rho.cols(); ++j) row.push_back(format_double(m.rho(i, j)));
    t.add(row);
  }
  return t;
}

}  // namespace detail

/// Rank correlations across models: among invariance profiles (synthetic
/// and pairwise transforms), and between invariance and readout scores.
inline std::pair<CsvTable, std::optional<CsvTable>> correlate_tables(const CsvTable& inv_summary,
                                                                     const std::optional<CsvTable>& readout_summary) {
  auto models = detail::column_values(inv_summary, "encoder");
  std::optional<CsvTable> task_csv;
  if (readout_summary) {
    const auto rmodels = detail::column_values(*readout_summary, "model");
    std::vector<std::string> common, missing;
    for (const auto& m : models)
      (std::find(rmodels.begin(), rmodels.end(), m) != rmodels.end() ? common : missing).push_back(m);
    for (const auto& m : rmodels)
      if (std::find(models.begin(), models.end(), m) == models.end()) missing.push_back(m);
    if (common.size() < 2) {
      std::string list;
      for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
      fail(ErrorCategory::validation,
           "fewer than two models common to invariance and readout reports; unmatched: " + list);
    }
    const auto inv = detail::profiles(inv_summary, "transform", "value", common, "metric", "cosine");
    const auto task = detail::profiles(*readout_summary, "task", "score", common);
    task_csv = detail::matrix_csv(cross_correlation(inv, task, true));
  }
  require(models.size() >= 2, ErrorCategory::validation, "correlation needs at least two models");
  const auto inv = detail::profiles(inv_summary, "transform", "value", models, "metric", "cosine");
  return {detail::matrix_csv(correlation_matrix(inv, true)), task_csv};
}

inline void cmd_correlate(RunContext& run) {
  run.begin("correlate");
  const auto inv = read_csv(run.out() / "invariance" / "summary.csv");
  std::optional<CsvTable> rs;
  if (fs::exists(run.out() / "readout" / "summary.csv")) rs = read_csv(run.out() / "readout" / "summary.csv");
  const auto [m, t] = correlate_tables(inv, rs);
  run.write(m, "correlate/invariance.csv");
  if (t) run.write(*t, "correlate/invariance_vs_tasks.csv");
  run.finish("correlate");
}

/// Markdown rendering of whichever CSV reports exist. Cells of the cosine
/// table gain a bullet where the significance marks say so.
inline std::string cmd_report(RunContext& run) {
  run.begin("report");
  const auto& out = run.out();
  std::string md = "# invlab report\n\nconfig hash `" + run.config().hash() + "`, seed " +
                   std::to_string(run.config().seed) + "\n";
  auto section = [&](const std::string& title, const fs::path& rel) {
    if (!fs::exists(out / rel)) return;
    md += "\n## " + title + "\n\n" + csv_to_markdown(read_csv(out / rel));
  };
  if (fs::exists(out / "invariance/table_cosine.csv")) {
    auto table = read_csv(out / "invariance/table_cosine.csv");
    if (fs::exists(out / "test/marks.csv")) {
      const auto marks = read_csv(out / "test/marks.csv");
      for (const auto& r : marks.rows) {
        if (r[marks.column("mark")] != "1") continue;
        const auto col = table.column(r[marks.column("transform")]);
        for (auto& row : table.rows)
          if (row[0] == r[marks.column("model")]) row[col] += " •";
      }
    }
    md += "\n## Invariance (standardized cosine similarity)\n\n" + csv_to_markdown(table);
  }
  section("Invariance (Mahalanobis distance)", "invariance/table_mahalanobis.csv");
  section("Linear readout (mean ± std over folds)", "readout/table.csv");
  section("Latent factor prediction (R²)", "readout/latent_table.csv");
  section("Invariance rank correlations", "correlate/invariance.csv");
  section("Invariance vs task rank correlations", "correlate/invariance_vs_tasks.csv");
  run.write_markdown(md, "report.md");
  run.finish("report");
  return md;
}

}  // namespace invlab::pipeline
