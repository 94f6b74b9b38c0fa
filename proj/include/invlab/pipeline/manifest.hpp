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

#include <chrono>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "invlab/core/csv.hpp"
#include "invlab/core/error.hpp"
#include "invlab/pipeline/config.hpp"

namespace invlab::pipeline {

inline constexpr std::string_view kToolVersion = "0.1.0";

/// Record of a run directory: config hash, per-command timestamps and the
/// FNV-1a hash of every artifact (paths relative to the run directory).
struct RunManifest {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> artifacts;  // relative path -> hash
  nlohmann::json commands = nlohmann::json::object();

  static std::filesystem::path path_in(const std::filesystem::path& dir) { return dir / "manifest.json"; }

  static RunManifest load_or_new(const std::filesystem::path& dir, const ExperimentConfig& cfg) {
    RunManifest m;
    const auto p = path_in(dir);
    if (std::filesystem::exists(p)) {
      try {
        const auto j = nlohmann::json::parse(read_text(p));
        // A different config invalidates the old artifact list.
        if (j.at("config_hash").get<std::string>() == cfg.hash()) {
          m.artifacts = j.at("artifacts").get<std::map<std::string, std::string>>();
          m.commands = j.at("commands");
        }
      } catch (const nlohmann::json::exception& e) {
        fail(ErrorCategory::format, p.string() + ": " + e.what());
      }
    }
    m.config_hash = cfg.hash();
    m.seed = cfg.seed;
    return m;
  }

  void record(const std::filesystem::path& dir, const std::filesystem::path& file) {
    const auto rel = std::filesystem::relative(file, dir).generic_string();
    artifacts[rel] = hex64(fnv1a(read_text(file)));
  }

  void save(const std::filesystem::path& dir) const {
    const nlohmann::json j = {{"tool", "invlab"},
                              {"tool_version", kToolVersion},
                              {"config_hash", config_hash},
                              {"seed", seed},
                              {"commands", commands},
                              {"artifacts", artifacts}};
    write_text(path_in(dir), j.dump(2) + "\n");
  }
};

inline std::string utc_timestamp() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Paths listed in the manifest that are missing or whose hash changed.
inline std::vector<std::string> verify_manifest(const std::filesystem::path& dir) {
  const auto j = nlohmann::json::parse(read_text(RunManifest::path_in(dir)));
  std::vector<std::string> bad;
  for (const auto& [rel, hash] : j.at("artifacts").get<std::map<std::string, std::string>>()) {
    const auto p = dir / rel;
    if (!std::filesystem::exists(p) || hex64(fnv1a(read_text(p))) != hash) bad.push_back(rel);
  }
  return bad;
}

}  // namespace invlab::pipeline
