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
#include <filesystem>
#include <string>
#include <vector>

#include "invlab/core/dataset.hpp"
#include "invlab/core/ppm.hpp"

namespace invlab {

/// Loads `root/<group>/<image>` trees. Groups and files are visited in
/// lexicographic order; group ids follow that order and double as class
/// labels. Hidden entries (leading '.') are ignored; every other regular file
/// must decode.
inline LabeledDataset load_image_group_dir(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) fail(ErrorCategory::io, "not a directory: " + root.string());

  std::vector<fs::path> groups;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory() && entry.path().filename().string().front() != '.')
      groups.push_back(entry.path());
  std::sort(groups.begin(), groups.end());

  LabeledDataset ds;
  ds.labels.emplace();
  ds.group_ids.emplace();
  int gid = 0;
  for (const auto& group : groups) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(group))
      if (entry.is_regular_file() && entry.path().filename().string().front() != '.')
        files.push_back(entry.path());
    if (files.empty()) continue;
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      ds.images.push_back(read_ppm(file));
      ds.labels->push_back(gid);
      ds.group_ids->push_back(gid);
    }
    ++gid;
  }
  if (ds.images.empty()) fail(ErrorCategory::io, "no grouped images found under " + root.string());
  ds.validate();
  return ds;
}

}  // namespace invlab
