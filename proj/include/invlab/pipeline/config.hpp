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

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "invlab/core/csv.hpp"
#include "invlab/core/error.hpp"
#include "invlab/core/shapes.hpp"
#include "invlab/encoder/checkpoint.hpp"
#include "invlab/encoder/train.hpp"
#include "invlab/readout/cross_validate.hpp"
#include "invlab/readout/krr.hpp"
#include "invlab/transforms/kinds.hpp"
#include "invlab/transforms/policy_json.hpp"

namespace invlab::pipeline {

using nlohmann::json;

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

struct DatasetBlock {
  std::string generator = "shapes";  // or empty when `directory` is set
  std::filesystem::path directory;
  ShapesConfig shapes;
  std::size_t train_count = 1024;
};

enum class EncoderKind { contrastive, supervised, random };

struct EncoderBlock {
  std::string name;
  EncoderKind kind = EncoderKind::contrastive;
  ContrastiveConfig contrastive;
  SupervisedConfig supervised;
};

/// A synthetic transform to measure; "identity" is a debug kind whose
/// transformed image is the input itself.
struct InvarianceTransform {
  std::string name;
  std::optional<TransformKind> kind;  // empty for identity
  std::size_t grid_points = 256;
};

struct InvarianceBlock {
  std::vector<InvarianceTransform> transforms;
  std::size_t images = 100;
  std::size_t whitening_images = 1000;
  std::optional<double> epsilon;
  std::filesystem::path pairwise_directory;
};

struct StatsBlock {
  double delta = 0.05;
  std::size_t bonferroni = 3;
  std::vector<std::string> models;  // default: every encoder
};

struct ReadoutTask {
  std::string name;
  TaskKind kind = TaskKind::classification;
  ReadoutMetric metric = ReadoutMetric::accuracy;
  std::vector<std::string> factors;  // regression targets
};

struct Fusion {
  std::string name;
  std::vector<std::string> sources;
};

struct ReadoutBlock {
  bool enabled = false;
  std::size_t examples = 1000;
  int folds = 5;
  bool standardize = true;
  int max_iterations = 300;
  bool shift_fused_grids = true;
  std::vector<ReadoutTask> tasks;
  std::vector<Fusion> fusions;
};

struct LatentBlock {
  bool enabled = false;
  KrrConfig krr;
  std::vector<std::string> factors;  // default: every factor
  bool include_fusions = true;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::filesystem::path output = "out";
  unsigned threads = 1;
  DatasetBlock dataset;
  EncoderConfig architecture;
  std::vector<EncoderBlock> encoders;
  InvarianceBlock invariance;
  StatsBlock stats;
  ReadoutBlock readout;
  LatentBlock latent;
  json source;  // normalized input, hashed into the manifest

  std::uint64_t dataset_seed(std::uint64_t split) const { return SeededRng(seed).derive(0xDA7A0000 + split).next_u64(); }

  const EncoderBlock* find_encoder(const std::string& name) const {
    for (const auto& e : encoders)
      if (e.name == name) return &e;
    return nullptr;
  }

  /// Encoder names followed by fusion names.
  std::vector<std::string> readout_models() const {
    std::vector<std::string> out;
    for (const auto& e : encoders) out.push_back(e.name);
    for (const auto& f : readout.fusions) out.push_back(f.name);
    return out;
  }

  // Output location and thread count do not change results, so they are
  // left out of the hash.
  std::string hash() const {
    json j = source;
    j.erase("output");
    j.erase("threads");
    return hex64(fnv1a(j.dump()));
  }
};

namespace detail {

inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& block) {
  require(j.is_object(), ErrorCategory::config, block + " must be an object");
  for (const auto& [key, value] : j.items())
    require(allowed.count(key) > 0, ErrorCategory::config, "unknown key '" + key + "' in " + block);
}

inline EncoderBlock parse_encoder_block(const json& j, std::uint64_t seed) {
  check_keys(j,
             {"name", "kind", "policy", "epochs", "batch_size", "learning_rate", "sgd_momentum", "temperature",
              "queue_size", "momentum", "seed"},
             "encoder block");
  EncoderBlock b;
  b.name = j.at("name").get<std::string>();
  require(!b.name.empty() && b.name.find_first_of("+,=\n/ ") == std::string::npos, ErrorCategory::config,
          "encoder name '" + b.name + "' must be non-empty without '+', ',', '=', '/' or spaces");
  const std::string kind = j.value("kind", "contrastive");
  if (kind == "contrastive") b.kind = EncoderKind::contrastive;
  else if (kind == "supervised") b.kind = EncoderKind::supervised;
  else if (kind == "random") b.kind = EncoderKind::random;
  else fail(ErrorCategory::config, "encoder " + b.name + ": unknown kind '" + kind + "'");
  const std::uint64_t s = j.value("seed", seed);
  auto& c = b.contrastive;
  c.seed = s;
  if (b.kind == EncoderKind::contrastive) {
    require(j.contains("policy"), ErrorCategory::config, "encoder " + b.name + ": missing policy");
    const auto& p = j.at("policy");
    try {
      c.policy = p.is_string() ? builtin_policy(p.get<std::string>()) : policy_from_json(p);
    } catch (const Error& e) {
      fail(ErrorCategory::config, "encoder " + b.name + ": " + e.what());
    }
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.sgd_momentum = j.value("sgd_momentum", c.sgd_momentum);
    c.temperature = j.value("temperature", c.temperature);
    c.queue_size = j.value("queue_size", c.queue_size);
    c.momentum = j.value("momentum", c.momentum);
    c.validate();
  } else if (b.kind == EncoderKind::supervised) {
    auto& sc = b.supervised;
    sc.seed = s;
    if (j.contains("policy")) {
      const auto& p = j.at("policy");
      sc.policy = p.is_string() ? builtin_policy(p.get<std::string>()) : policy_from_json(p);
    }
    sc.epochs = j.value("epochs", sc.epochs);
    sc.batch_size = j.value("batch_size", sc.batch_size);
    sc.learning_rate = j.value("learning_rate", sc.learning_rate);
    sc.sgd_momentum = j.value("sgd_momentum", sc.sgd_momentum);
  }
  return b;
}

inline ReadoutTask parse_task(const json& j) {
  check_keys(j, {"name", "kind", "metric", "factors"}, "readout task");
  ReadoutTask t;
  t.name = j.at("name").get<std::string>();
  const std::string kind = j.value("kind", "classification");
  if (kind == "classification") {
    t.kind = TaskKind::classification;
    const std::string metric = j.value("metric", "accuracy");
    if (metric == "accuracy") t.metric = ReadoutMetric::accuracy;
    else if (metric == "mean_per_class_accuracy") t.metric = ReadoutMetric::mean_per_class_accuracy;
    else fail(ErrorCategory::config, "task " + t.name + ": unknown classification metric '" + metric + "'");
  } else if (kind == "regression") {
    t.kind = TaskKind::regression;
    t.metric = ReadoutMetric::r2;
    require(j.value("metric", "r2") == "r2", ErrorCategory::config, "task " + t.name + ": regression uses r2");
    t.factors = j.at("factors").get<std::vector<std::string>>();
    require(!t.factors.empty(), ErrorCategory::config, "task " + t.name + ": no factors");
  } else {
    fail(ErrorCategory::config, "task " + t.name + ": unknown kind '" + kind + "'");
  }
  return t;
}

inline Fusion parse_fusion(const json& j) {
  Fusion f;
  if (j.is_array()) {
    f.sources = j.get<std::vector<std::string>>();
  } else {
    check_keys(j, {"name", "sources"}, "fusion");
    f.sources = j.at("sources").get<std::vector<std::string>>();
    f.name = j.value("name", "");
  }
  require(f.sources.size() >= 2, ErrorCategory::config, "a fusion needs at least two sources");
  if (f.name.empty())
    for (std::size_t i = 0; i < f.sources.size(); ++i) f.name += (i ? "+" : "") + f.sources[i];
  return f;
}

inline std::size_t factor_index(const std::string& name) {
  for (std::size_t i = 0; i < kShapeFactorNames.size(); ++i)
    if (kShapeFactorNames[i] == name) return i;
  fail(ErrorCategory::config, "unknown factor '" + name + "'");
}

}  // namespace detail

/// Parses and validates a config. Every cross-reference (policies, encoder
/// names in fusions and stats, factors, transform kinds) is resolved here so
/// that a bad config fails before any work starts.
inline ExperimentConfig parse_config(json j, std::optional<std::uint64_t> seed_override = std::nullopt) {
  try {
    detail::check_keys(j,
                       {"seed", "output", "threads", "dataset", "architecture", "encoders", "invariance", "stats",
                        "readout", "latent"},
                       "config");
    if (seed_override) j["seed"] = *seed_override;
    require(j.contains("seed"), ErrorCategory::config, "config has no seed (set \"seed\" or pass --seed)");
    ExperimentConfig c;
    c.seed = j.at("seed").get<std::uint64_t>();
    c.output = j.value("output", std::string("out"));
    c.threads = j.value("threads", 1u);
    require(c.threads >= 1, ErrorCategory::config, "threads must be >= 1");

    const json ds = j.value("dataset", json::object());
    detail::check_keys(ds, {"generator", "directory", "width", "height", "classes", "train_count"}, "dataset");
    if (ds.contains("directory")) {
      c.dataset.generator.clear();
      c.dataset.directory = ds.at("directory").get<std::string>();
    } else {
      c.dataset.generator = ds.value("generator", "shapes");
      require(c.dataset.generator == "shapes", ErrorCategory::config,
              "unknown dataset generator '" + c.dataset.generator + "'");
    }
    c.dataset.shapes.width = ds.value("width", c.dataset.shapes.width);
    c.dataset.shapes.height = ds.value("height", c.dataset.shapes.height);
    c.dataset.shapes.classes = ds.value("classes", c.dataset.shapes.classes);
    c.dataset.train_count = ds.value("train_count", c.dataset.train_count);
    require(c.dataset.train_count >= 1, ErrorCategory::config, "dataset train_count must be >= 1");

    c.architecture = encoder_config_from_json(j.value("architecture", json::object()));

    require(j.contains("encoders") && j.at("encoders").is_array() && !j.at("encoders").empty(), ErrorCategory::config,
            "config needs a non-empty \"encoders\" list");
    std::set<std::string> names;
    for (const auto& e : j.at("encoders")) {
      c.encoders.push_back(detail::parse_encoder_block(e, c.seed));
      require(names.insert(c.encoders.back().name).second, ErrorCategory::config,
              "duplicate encoder name " + c.encoders.back().name);
    }

    const json inv = j.value("invariance", json::object());
    detail::check_keys(inv, {"transforms", "grid_points", "grid_overrides", "images", "whitening_images", "epsilon",
                             "pairwise_directory"},
                       "invariance");
    const std::size_t points = inv.value("grid_points", std::size_t{256});
    const auto overrides = inv.value("grid_overrides", std::map<std::string, std::size_t>{});
    std::vector<std::string> tnames;
    if (!inv.contains("transforms") || inv.at("transforms") == "all") {
      for (auto k : kAllTransforms) tnames.emplace_back(transform_name(k));
    } else {
      tnames = inv.at("transforms").get<std::vector<std::string>>();
    }
    for (const auto& t : tnames) {
      InvarianceTransform it{t, std::nullopt, points};
      if (t != "identity") it.kind = parse_transform(t);
      if (auto o = overrides.find(t); o != overrides.end()) it.grid_points = o->second;
      require(it.grid_points >= 1, ErrorCategory::config, "grid points must be >= 1");
      c.invariance.transforms.push_back(it);
    }
    for (const auto& [t, n] : overrides)
      require(std::find(tnames.begin(), tnames.end(), t) != tnames.end(), ErrorCategory::config,
              "grid override for unused transform " + t);
    c.invariance.images = inv.value("images", c.invariance.images);
    c.invariance.whitening_images = inv.value("whitening_images", c.invariance.whitening_images);
    if (inv.contains("epsilon") && !inv.at("epsilon").is_null()) c.invariance.epsilon = inv.at("epsilon").get<double>();
    if (inv.contains("pairwise_directory")) c.invariance.pairwise_directory = inv.at("pairwise_directory").get<std::string>();
    require(c.invariance.images >= 1 && c.invariance.whitening_images >= 2, ErrorCategory::config,
            "invariance image counts too small");

    const json st = j.value("stats", json::object());
    detail::check_keys(st, {"delta", "bonferroni", "models"}, "stats");
    c.stats.delta = st.value("delta", c.stats.delta);
    c.stats.bonferroni = st.value("bonferroni", c.stats.bonferroni);
    require(c.stats.delta > 0 && c.stats.delta < 1, ErrorCategory::config, "stats delta must lie in (0, 1)");
    require(c.stats.bonferroni >= 1, ErrorCategory::config, "bonferroni m must be >= 1");
    if (st.contains("models")) {
      c.stats.models = st.at("models").get<std::vector<std::string>>();
    } else {
      for (const auto& e : c.encoders) c.stats.models.push_back(e.name);
    }
    for (const auto& m : c.stats.models)
      require(names.count(m) > 0, ErrorCategory::config, "stats model '" + m + "' is not a configured encoder");

    if (j.contains("readout")) {
      const json& r = j.at("readout");
      detail::check_keys(r, {"examples", "folds", "standardize", "max_iterations", "shift_fused_grids", "tasks",
                             "fusions"},
                         "readout");
      c.readout.enabled = true;
      c.readout.examples = r.value("examples", c.readout.examples);
      c.readout.folds = r.value("folds", c.readout.folds);
      c.readout.standardize = r.value("standardize", c.readout.standardize);
      c.readout.max_iterations = r.value("max_iterations", c.readout.max_iterations);
      c.readout.shift_fused_grids = r.value("shift_fused_grids", c.readout.shift_fused_grids);
      for (const auto& t : r.value("tasks", json::array())) c.readout.tasks.push_back(detail::parse_task(t));
      require(!c.readout.tasks.empty(), ErrorCategory::config, "readout block has no tasks");
      for (const auto& f : r.value("fusions", json::array())) c.readout.fusions.push_back(detail::parse_fusion(f));
    }
    for (const auto& f : c.readout.fusions) {
      for (const auto& s : f.sources)
        require(names.count(s) > 0, ErrorCategory::config, "fusion " + f.name + " references unknown encoder " + s);
      require(names.insert(f.name).second, ErrorCategory::config, "fusion name " + f.name + " is already used");
    }
    const bool has_factors = !c.dataset.generator.empty();
    for (const auto& t : c.readout.tasks) {
      require(t.kind == TaskKind::classification || has_factors, ErrorCategory::config,
              "regression task " + t.name + " needs a generated dataset with factors");
      for (const auto& f : t.factors) detail::factor_index(f);
    }

    if (j.contains("latent")) {
      const json& l = j.at("latent");
      detail::check_keys(l, {"alphas", "gammas", "train_count", "test_count", "validation_fraction",
                             "standardize_inputs", "standardize_targets", "factors", "include_fusions"},
                         "latent");
      require(has_factors, ErrorCategory::config, "latent suite needs a generated dataset with factors");
      auto& k = c.latent.krr;
      c.latent.enabled = true;
      k.alphas = l.value("alphas", k.alphas);
      k.gammas = l.value("gammas", k.gammas);
      k.train_count = l.value("train_count", k.train_count);
      k.test_count = l.value("test_count", k.test_count);
      k.validation_fraction = l.value("validation_fraction", k.validation_fraction);
      k.standardize_inputs = l.value("standardize_inputs", k.standardize_inputs);
      k.standardize_targets = l.value("standardize_targets", k.standardize_targets);
      k.seed = c.seed;
      k.validate();
      c.latent.factors = l.value("factors", kShapeFactorNames);
      for (const auto& f : c.latent.factors) detail::factor_index(f);
      c.latent.include_fusions = l.value("include_fusions", true);
    }
    c.source = std::move(j);
    return c;
  } catch (const json::exception& e) {
    fail(ErrorCategory::config, std::string("invalid config: ") + e.what());
  }
}

inline ExperimentConfig load_config(const std::filesystem::path& path,
                                    std::optional<std::uint64_t> seed_override = std::nullopt) {
  const std::string text = read_text(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCategory::config, path.string() + ": " + e.what());
  }
  return parse_config(std::move(j), seed_override);
}

}  // namespace invlab::pipeline
