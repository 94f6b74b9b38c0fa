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

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "invlab/pipeline/commands.hpp"

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> features;
  unsigned threads = 0;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "override the config seed");
  cmd->add_option("--out", o.out, "output directory (overrides the config)");
  cmd->add_option("--features", o.features, "precomputed FVEC file; repeatable")->check(CLI::ExistingFile);
  cmd->add_option("--threads", o.threads, "worker threads for embedding")->check(CLI::PositiveNumber);
  cmd->add_flag("-q,--quiet", o.quiet, "no progress output");
}

invlab::pipeline::RunContext make_run(const Options& o) {
  auto cfg = invlab::pipeline::load_config(o.config, o.seed);
  if (!o.out.empty()) cfg.output = o.out;
  if (o.threads) cfg.threads = o.threads;
  std::vector<std::filesystem::path> feats(o.features.begin(), o.features.end());
  return invlab::pipeline::RunContext(std::move(cfg), feats, o.quiet ? nullptr : &std::cerr);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"invlab: invariance and linear readout experiments"};
  app.set_version_flag("--version", std::string(invlab::pipeline::kToolVersion));
  app.require_subcommand(1);
  Options o;
  auto* train = app.add_subcommand("train", "train one encoder per encoder block");
  auto* invariance = app.add_subcommand("invariance", "measure synthetic and pairwise invariance");
  auto* test = app.add_subcommand("test", "pairwise significance tests on invariance samples");
  auto* readout = app.add_subcommand("readout", "cross-validated linear readout and latent prediction");
  auto* correlate = app.add_subcommand("correlate", "rank correlations across models");
  auto* report = app.add_subcommand("report", "render report.md from the CSV reports");
  for (auto* c : {train, invariance, test, readout, correlate, report}) add_common(c, o);

  CLI11_PARSE(app, argc, argv);

  try {
    auto run = make_run(o);
    if (*train) {
      for (const auto& p : invlab::pipeline::cmd_train(run)) std::cout << p.string() << "\n";
    } else if (*invariance) {
      invlab::pipeline::cmd_invariance(run);
    } else if (*test) {
      invlab::pipeline::cmd_test(run);
    } else if (*readout) {
      invlab::pipeline::cmd_readout(run);
    } else if (*correlate) {
      invlab::pipeline::cmd_correlate(run);
    } else if (*report) {
      invlab::pipeline::cmd_report(run);
    }
  } catch (const invlab::Error& e) {
    std::cerr << "error: " << invlab::category_name(e.category()) << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
