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

#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "invlab/pipeline/commands.hpp"
#include "test_util.hpp"

namespace invlab::pipeline {
namespace {

using invlab::testing::TempDir;
using json = nlohmann::json;

ErrorCategory category_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.category();
  }
  ADD_FAILURE() << "no invlab::Error thrown";
  return ErrorCategory::undefined;
}

json tiny_config(const fs::path& out) {
  auto j = json::parse(R"({
    "seed": 5,
    "dataset": { "width": 24, "height": 24, "classes": 3, "train_count": 32 },
    "architecture": { "input_size": 16, "channels": [4, 8], "head_dims": [8] },
    "encoders": [
      { "name": "Spatial", "policy": "Spatial", "epochs": 1, "batch_size": 16, "queue_size": 16 },
      { "name": "Appearance", "policy": "Appearance", "epochs": 1, "batch_size": 16, "queue_size": 16 }
    ],
    "invariance": { "transforms": ["identity", "translation", "hue"], "grid_points": 3, "images": 4,
                    "whitening_images": 30 },
    "readout": {
      "examples": 45, "folds": 3,
      "tasks": [ { "name": "shape" },
                 { "name": "position", "kind": "regression", "factors": ["position_x", "position_y"] } ],
      "fusions": [["Spatial", "Appearance"]]
    },
    "latent": { "train_count": 30, "test_count": 30, "alphas": [0.1], "gammas": [0.1], "factors": ["position_x"] }
  })");
  j["output"] = out.string();
  return j;
}

std::map<std::string, std::string> csv_files(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.path().extension() == ".csv") out[fs::relative(e.path(), dir).string()] = read_text(e.path());
  return out;
}

void run_all(const json& j) {
  RunContext run(parse_config(j));
  cmd_train(run);
  cmd_invariance(run);
  cmd_test(run);
  cmd_readout(run);
  cmd_correlate(run);
  cmd_report(run);
}

TEST(Config, SeedIsMandatoryUnlessOverridden) {
  TempDir d;
  auto j = tiny_config(d.path());
  j.erase("seed");
  EXPECT_EQ(category_of([&] { parse_config(j); }), ErrorCategory::config);
  EXPECT_EQ(parse_config(j, 99).seed, 99u);
}

TEST(Config, UnresolvedNamesFailBeforeWork) {
  TempDir d;
  auto bad_policy = tiny_config(d.path());
  bad_policy["encoders"][0]["policy"] = "Geometric";
  EXPECT_EQ(category_of([&] { parse_config(bad_policy); }), ErrorCategory::config);
  auto no_policy = tiny_config(d.path());
  no_policy["encoders"][0].erase("policy");
  EXPECT_EQ(category_of([&] { parse_config(no_policy); }), ErrorCategory::config);
  auto bad_fusion = tiny_config(d.path());
  bad_fusion["readout"]["fusions"] = json::array({json::array({"Spatial", "Default"})});
  EXPECT_EQ(category_of([&] { parse_config(bad_fusion); }), ErrorCategory::config);
  auto bad_model = tiny_config(d.path());
  bad_model["stats"] = {{"models", {"Spatial", "Default"}}};
  EXPECT_EQ(category_of([&] { parse_config(bad_model); }), ErrorCategory::config);
  auto bad_key = tiny_config(d.path());
  bad_key["invariance"]["grid"] = 3;
  EXPECT_EQ(category_of([&] { parse_config(bad_key); }), ErrorCategory::config);
  auto bad_transform = tiny_config(d.path());
  bad_transform["invariance"]["transforms"] = {"twirl"};
  EXPECT_EQ(category_of([&] { parse_config(bad_transform); }), ErrorCategory::config);
  auto bad_factor = tiny_config(d.path());
  bad_factor["latent"]["factors"] = {"colour"};
  EXPECT_EQ(category_of([&] { parse_config(bad_factor); }), ErrorCategory::config);
  // Nothing was written.
  EXPECT_TRUE(fs::is_empty(d.path()));
}

TEST(Config, AllTransformsAndOverrides) {
  TempDir d;
  auto j = tiny_config(d.path());
  j["invariance"]["transforms"] = "all";
  j["invariance"]["grid_overrides"] = {{"hue", 7}};
  const auto c = parse_config(j);
  ASSERT_EQ(c.invariance.transforms.size(), kTransformCount);
  for (const auto& t : c.invariance.transforms) EXPECT_EQ(t.grid_points, t.name == "hue" ? 7u : 3u);
  EXPECT_EQ(c.stats.models, (std::vector<std::string>{"Spatial", "Appearance"}));
  EXPECT_EQ(c.readout.fusions.at(0).name, "Spatial+Appearance");
}

TEST(Config, HashTracksContent) {
  TempDir d;
  auto j = tiny_config(d.path());
  const auto h = parse_config(j).hash();
  EXPECT_EQ(parse_config(j).hash(), h);
  j["output"] = "elsewhere";
  j["threads"] = 4;
  EXPECT_EQ(parse_config(j).hash(), h);
  j["seed"] = 6;
  EXPECT_NE(parse_config(j).hash(), h);
}

TEST(Config, ShippedConfigsParse) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(fs::path(INVLAB_SOURCE_DIR) / "configs")) {
    const auto c = load_config(e.path());
    EXPECT_FALSE(c.encoders.empty()) << e.path();
    ++n;
  }
  EXPECT_EQ(n, 3u);
}

TEST(Train, TwoPoliciesGiveTwoCheckpointsByteEqualOnRerun) {
  TempDir a, b;
  RunContext ra(parse_config(tiny_config(a.path())));
  RunContext rb(parse_config(tiny_config(b.path())));
  const auto pa = cmd_train(ra), pb = cmd_train(rb);
  ASSERT_EQ(pa.size(), 2u);
  ASSERT_EQ(pb.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_TRUE(fs::exists(pa[i]));
    EXPECT_EQ(read_text(pa[i]), read_text(pb[i]));
  }
  EXPECT_TRUE(verify_manifest(a.path()).empty());
}

TEST(Invariance, TableShapeForAllTransforms) {
  TempDir d;
  auto j = tiny_config(d.path());
  j["invariance"]["transforms"] = "all";
  j["invariance"]["grid_points"] = 2;
  j["invariance"]["images"] = 2;
  RunContext run(parse_config(j));
  cmd_train(run);
  const auto entries = cmd_invariance(run);
  EXPECT_EQ(entries.size(), 2 * kTransformCount);
  for (const auto* name : {"table_cosine.csv", "table_mahalanobis.csv"}) {
    const auto t = read_csv(d.path() / "invariance" / name);
    EXPECT_EQ(t.rows.size(), 2u);
    EXPECT_EQ(t.header.size(), 1 + kTransformCount);
  }
}

TEST(Invariance, IdentityColumnIsOneAndSummaryReplays) {
  TempDir d;
  RunContext run(parse_config(tiny_config(d.path())));
  cmd_train(run);
  cmd_invariance(run);
  const auto table = read_csv(d.path() / "invariance" / "table_cosine.csv");
  for (const auto& r : table.rows) EXPECT_NEAR(parse_double(r[table.column("identity")], "t"), 1.0, 1e-6);

  const auto summary = read_csv(d.path() / "invariance" / "summary.csv");
  const auto replay = entries_from_samples_csv(read_csv(d.path() / "invariance" / "samples.csv"), "samples");
  std::size_t checked = 0;
  for (const auto& r : summary.rows) {
    const auto& metric = r[summary.column("metric")];
    if (metric != "cosine" && metric != "mahalanobis") continue;
    for (const auto& e : replay)
      if (e.encoder == r[summary.column("encoder")] && e.transform == r[summary.column("transform")]) {
        const double v = parse_double(r[summary.column("value")], "s");
        EXPECT_NEAR(metric == "cosine" ? e.mean_cosine : e.mean_distance, v, 1e-12 * std::max(1.0, std::abs(v)));
        ++checked;
      }
  }
  EXPECT_EQ(checked, 2u * 3u * 2u);
}

InvarianceEntry entry(const std::string& enc, const std::string& tr, std::vector<double> cos) {
  InvarianceEntry e;
  e.encoder = enc;
  e.transform = tr;
  e.cosine = std::move(cos);
  return e;
}

TEST(SignificanceTables, IdenticalSamplesGiveNoMarks) {
  const std::vector<double> s = {0.1, 0.5, 0.9, -0.2};
  const auto [sig, marks] = significance_tables(
      {entry("Default", "hue", s), entry("Spatial", "hue", s), entry("Appearance", "hue", s)},
      {"Default", "Spatial", "Appearance"}, 0.05, 3);
  EXPECT_EQ(sig.rows.size(), 6u);
  for (const auto& r : marks.rows) EXPECT_EQ(r[marks.column("mark")], "0");
}

TEST(SignificanceTables, UnitDifferenceAtHundredIsMarked) {
  const std::vector<double> hi(100, 0.5), lo(100, -0.5);
  const auto [sig, marks] = significance_tables(
      {entry("Default", "rotation", lo), entry("Spatial", "rotation", hi), entry("Appearance", "rotation", lo)},
      {"Default", "Spatial", "Appearance"}, 0.05, 3);
  for (const auto& r : marks.rows)
    EXPECT_EQ(r[marks.column("mark")], r[marks.column("model")] == "Spatial" ? "1" : "0");
  // The thresholds are the stats module's Bonferroni-corrected ones.
  const double t = hoeffding_threshold(100, 0.05 / 3, kCosineDifferenceWidth);
  for (const auto& r : sig.rows) {
    EXPECT_DOUBLE_EQ(parse_double(r[sig.column("threshold")], "sig"), t);
    EXPECT_DOUBLE_EQ(parse_double(r[sig.column("delta")], "sig"), 0.05 / 3);
  }
}

TEST(SignificanceTables, LengthMismatchIsProtocolError) {
  EXPECT_EQ(category_of([] {
              significance_tables({entry("A", "hue", {0.1, 0.2}), entry("B", "hue", {0.1})}, {"A", "B"}, 0.05, 1);
            }),
            ErrorCategory::protocol);
}

TEST(Test, CommandReadsSamplesFromDisk) {
  TempDir d;
  RunContext run(parse_config(tiny_config(d.path())));
  cmd_train(run);
  cmd_invariance(run);
  const auto [sig, marks] = cmd_test(run);
  EXPECT_EQ(sig.rows.size(), 3u * 2u);  // 3 transforms, 2 ordered pairs each
  EXPECT_EQ(marks.rows.size(), 3u * 2u);
  EXPECT_TRUE(fs::exists(d.path() / "test" / "significance.csv"));
}

/// Random readout-split features for `models`, written as FVEC files.
std::vector<fs::path> fake_features(const fs::path& dir, const std::vector<std::string>& models, std::size_t rows,
                                    const std::string& split = "readout") {
  std::vector<fs::path> paths;
  SeededRng rng(3);
  for (const auto& m : models) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows), 5);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.normal();
    paths.push_back(dir / (m + "." + split + ".fvec"));
    write_feature_matrix(FeatureMatrix::from_eigen(x, {{"encoder", m}, {"split", split}}), paths.back());
  }
  return paths;
}

TEST(Readout, ThreeEncodersTwoTasksOneFusionGiveEightRows) {
  TempDir in, out;
  auto j = tiny_config(out.path());
  j["encoders"].push_back({{"name", "Default"}, {"policy", "Default"}});
  j["readout"]["fusions"] = json::array({json::array({"Default", "Spatial", "Appearance"})});
  j.erase("latent");
  const auto feats = fake_features(in.path(), {"Default", "Spatial", "Appearance"}, 45);
  RunContext run(parse_config(j), feats);
  const auto rows = cmd_readout(run);
  ASSERT_EQ(rows.size(), 8u);
  EXPECT_EQ(read_csv(out.path() / "readout" / "summary.csv").rows.size(), 8u);
  EXPECT_EQ(read_csv(out.path() / "readout" / "table.csv").rows.size(), 4u);
  for (const auto& r : rows) {
    ASSERT_EQ(r.result.grid.size(), 45u);
    // Three sources shift the grid up two decades.
    const double lo = r.model == "Default+Spatial+Appearance" ? 1e-4 : 1e-6;
    EXPECT_NEAR(r.result.grid.front(), lo, 1e-12 * lo);
    EXPECT_NEAR(r.result.grid.back(), lo * 1e11, 1e-12 * lo * 1e11);
  }
}

TEST(Readout, ShiftCanBeDisabled) {
  TempDir in, out;
  auto j = tiny_config(out.path());
  j["readout"]["shift_fused_grids"] = false;
  j.erase("latent");
  RunContext run(parse_config(j), fake_features(in.path(), {"Spatial", "Appearance"}, 45));
  for (const auto& r : cmd_readout(run)) EXPECT_DOUBLE_EQ(r.result.grid.front(), 1e-6);
}

TEST(Readout, RerunGivesIdenticalTables) {
  TempDir in, a, b;
  auto feats = fake_features(in.path(), {"Spatial", "Appearance"}, 45);
  auto ja = tiny_config(a.path()), jb = tiny_config(b.path());
  ja.erase("latent");
  jb.erase("latent");
  RunContext ra(parse_config(ja), feats), rb(parse_config(jb), feats);
  cmd_readout(ra);
  cmd_readout(rb);
  EXPECT_EQ(csv_files(a.path()), csv_files(b.path()));
}

TEST(Readout, FeatureRowMismatchIsAlignmentError) {
  TempDir in, out;
  auto j = tiny_config(out.path());
  j.erase("latent");
  RunContext run(parse_config(j), fake_features(in.path(), {"Spatial", "Appearance"}, 44));
  EXPECT_EQ(category_of([&] { cmd_readout(run); }), ErrorCategory::alignment);
}

TEST(Readout, MissingEncoderSourceIsIoError) {
  TempDir out;
  auto j = tiny_config(out.path());
  RunContext run(parse_config(j));
  EXPECT_EQ(category_of([&] { cmd_readout(run); }), ErrorCategory::io);
}

CsvTable inv_summary(const std::map<std::string, std::vector<double>>& profiles,
                     const std::vector<std::string>& models) {
  CsvTable t{{"encoder", "transform", "metric", "value"}, {}};
  for (const auto& [tr, values] : profiles)
    for (std::size_t i = 0; i < models.size(); ++i) {
      t.add({models[i], tr, "cosine", format_double(values[i])});
      t.add({models[i], tr, "mahalanobis", "1"});
    }
  return t;
}

TEST(Correlate, IdenticalProfilesGiveAllOnes) {
  const auto inv = inv_summary({{"hue", {0.1, 0.9}}, {"rotation", {0.3, 0.4}}}, {"A", "B"});
  const auto [m, tasks] = correlate_tables(inv, std::nullopt);
  EXPECT_FALSE(tasks.has_value());
  for (const auto& r : m.rows)
    for (std::size_t c = 1; c < r.size(); ++c) EXPECT_EQ(parse_double(r[c], "m"), 1.0);
}

TEST(Correlate, AntiMonotoneProfilesGiveMinusOne) {
  const auto inv = inv_summary({{"hue", {0.1, 0.5, 0.9}}, {"rotation", {0.8, 0.4, 0.2}}}, {"A", "B", "C"});
  CsvTable rs{{"model", "task", "lambda", "score", "std"}, {}};
  for (const auto& [m, s] : std::vector<std::pair<std::string, double>>{{"A", 0.9}, {"B", 0.6}, {"C", 0.1}})
    rs.add({m, "shape", "1", format_double(s), "0"});
  const auto [m, tasks] = correlate_tables(inv, rs);
  ASSERT_EQ(m.rows.size(), 2u);
  EXPECT_EQ(parse_double(m.rows[0][2], "m"), -1.0);
  ASSERT_TRUE(tasks.has_value());
  EXPECT_EQ(tasks->header, (std::vector<std::string>{"profile", "shape"}));
  EXPECT_EQ(parse_double(tasks->rows[0][1], "t"), -1.0);  // hue
  EXPECT_EQ(parse_double(tasks->rows[1][1], "t"), 1.0);   // rotation
}

TEST(Correlate, MatrixIsSymmetric) {
  SeededRng rng(8);
  std::map<std::string, std::vector<double>> profiles;
  for (const auto* t : {"a", "b", "c", "d", "e"}) {
    auto& v = profiles[t];
    for (int i = 0; i < 6; ++i) v.push_back(rng.uniform(-1, 1));
  }
  const auto [m, tasks] = correlate_tables(inv_summary(profiles, {"m1", "m2", "m3", "m4", "m5", "m6"}), std::nullopt);
  for (std::size_t i = 0; i < m.rows.size(); ++i)
    for (std::size_t j = 0; j < m.rows.size(); ++j)
      EXPECT_NEAR(parse_double(m.rows[i][j + 1], "m"), parse_double(m.rows[j][i + 1], "m"), 1e-12);
}

TEST(Correlate, InsufficientOverlapListsModels) {
  const auto inv = inv_summary({{"hue", {0.1, 0.5}}}, {"A", "B"});
  CsvTable rs{{"model", "task", "lambda", "score", "std"}, {}};
  rs.add({"A", "shape", "1", "0.5", "0"});
  rs.add({"C", "shape", "1", "0.5", "0"});
  try {
    correlate_tables(inv, rs);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::validation);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("B"), std::string::npos);
    EXPECT_NE(msg.find("C"), std::string::npos);
  }
}

TEST(Pipeline, EndToEndDeterministicAndManifestComplete) {
  TempDir a, b;
  run_all(tiny_config(a.path()));
  run_all(tiny_config(b.path()));
  const auto fa = csv_files(a.path()), fb = csv_files(b.path());
  EXPECT_EQ(fa.size(), 14u);
  EXPECT_EQ(fa, fb);
  EXPECT_EQ(read_text(a.path() / "report.md"), read_text(b.path() / "report.md"));

  EXPECT_TRUE(verify_manifest(a.path()).empty());
  const auto manifest = json::parse(read_text(a.path() / "manifest.json"));
  EXPECT_EQ(manifest.at("config_hash"), parse_config(tiny_config(a.path())).hash());
  for (const auto& [rel, hash] : manifest.at("artifacts").items()) EXPECT_TRUE(fs::exists(a.path() / rel)) << rel;
  for (const auto* v : {"train", "invariance", "test", "readout", "correlate", "report"})
    EXPECT_TRUE(manifest.at("commands").contains(v)) << v;

  // Tampering is detected.
  write_text(a.path() / "readout" / "summary.csv", "model\n");
  EXPECT_EQ(verify_manifest(a.path()), std::vector<std::string>{"readout/summary.csv"});
}

TEST(Pipeline, PrecomputedFeaturesMatchInProcessPath) {
  TempDir a, b;
  run_all(tiny_config(a.path()));
  std::vector<fs::path> feats;
  for (const auto& e : fs::directory_iterator(a.path() / "features")) feats.push_back(e.path());
  // No checkpoints in b: readout must run from the FVEC files alone.
  RunContext run(parse_config(tiny_config(b.path())), feats);
  cmd_readout(run);
  for (const auto* rel : {"readout/summary.csv", "readout/latent_scores.csv"}) {
    const auto x = read_csv(a.path() / rel), y = read_csv(b.path() / rel);
    ASSERT_EQ(x.rows.size(), y.rows.size());
    for (std::size_t i = 0; i < x.rows.size(); ++i)
      for (std::size_t c = 0; c < x.header.size(); ++c) {
        if (c < 2 || x.rows[i][c] == y.rows[i][c]) continue;
        EXPECT_NEAR(parse_double(x.rows[i][c], rel), parse_double(y.rows[i][c], rel), 1e-6);
      }
  }
}

/// Two groups of three noise images each, as PPM files.
fs::path write_groups(const fs::path& root) {
  SeededRng rng(21);
  for (int g = 0; g < 2; ++g)
    for (int i = 0; i < 3; ++i) {
      std::vector<double> px(16 * 16 * 3);
      for (double& v : px) v = rng.uniform();
      fs::create_directories(root / ("group" + std::to_string(g)));
      write_ppm(Image::from_unclamped(16, 16, px),
                root / ("group" + std::to_string(g)) / ("img" + std::to_string(i) + ".ppm"));
    }
  return root;
}

TEST(Invariance, PairwiseColumnFromGroupedDirectory) {
  TempDir d, img;
  auto j = tiny_config(d.path());
  j["invariance"]["pairwise_directory"] = write_groups(img.path()).string();
  RunContext run(parse_config(j));
  cmd_train(run);
  const auto entries = cmd_invariance(run);
  std::size_t pairwise = 0;
  for (const auto& e : entries)
    if (e.transform == "pairwise") {
      EXPECT_EQ(e.samples(), 2u * 3u);  // three pairs in each of two groups
      ++pairwise;
    }
  EXPECT_EQ(pairwise, 2u);
  const auto t = read_csv(d.path() / "invariance" / "table_cosine.csv");
  EXPECT_EQ(t.header.back(), "pairwise");
}

TEST(Readout, DirectoryDatasetClassifiesGroups) {
  TempDir d, img;
  auto j = tiny_config(d.path());
  j["dataset"] = {{"directory", write_groups(img.path()).string()}, {"train_count", 6}};
  j["readout"]["examples"] = 6;
  j["readout"]["tasks"] = json::array({{{"name", "group"}}});
  j.erase("latent");
  EXPECT_EQ(category_of([&] {
              auto k = j;
              k["readout"]["tasks"] = json::array({{{"name", "x"}, {"kind", "regression"}, {"factors", {"position_x"}}}});
              parse_config(k);
            }),
            ErrorCategory::config);
  RunContext run(parse_config(j));
  cmd_train(run);
  const auto rows = cmd_readout(run);
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& r : rows) EXPECT_EQ(r.result.folds.size(), 6u);
}

TEST(Report, RenderedFromCsvWithMarks) {
  TempDir d;
  RunContext run(parse_config(tiny_config(d.path())));
  write_csv(CsvTable{{"model", "hue", "rotation"}, {{"Spatial", "0.1000", "0.9000"}, {"Appearance", "0.8000", "0.2000"}}},
            d.path() / "invariance" / "table_cosine.csv");
  fs::create_directories(d.path() / "test");
  write_csv(CsvTable{{"transform", "model", "mark"},
                     {{"hue", "Spatial", "0"}, {"hue", "Appearance", "1"}, {"rotation", "Spatial", "1"},
                      {"rotation", "Appearance", "0"}}},
            d.path() / "test" / "marks.csv");
  const auto md = cmd_report(run);
  EXPECT_NE(md.find("| Spatial | 0.1000 | 0.9000 • |"), std::string::npos) << md;
  EXPECT_NE(md.find("| Appearance | 0.8000 • | 0.2000 |"), std::string::npos) << md;
  EXPECT_EQ(md.find("Linear readout"), std::string::npos);
}

}  // namespace
}  // namespace invlab::pipeline
