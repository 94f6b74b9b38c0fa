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

// JSON form of an augmentation policy:
//   {"name": "Default", "output_size": 224, "steps": [
//     {"kind": "random_resized_crop", "probability": 1.0, "scale": [0.2, 1.0]},
//     {"kind": "color_jitter", "probability": 0.8,
//      "brightness": 0.4, "contrast": 0.4, "saturation": 0.4, "hue": 0.1},
//     {"kind": "random_grayscale", "probability": 0.2},
//     {"kind": "gaussian_blur", "probability": 0.5, "sigma": [0.1, 2.0]},
//     {"kind": "random_horizontal_flip", "probability": 0.5},
//     {"kind": "normalize", "mean": [...], "std": [...]}]}

#include <string>

#include "json.hpp"
#include "invlab/transforms/policy.hpp"

namespace invlab {

inline constexpr std::array<std::pair<StepKind, std::string_view>, 7> kStepNames = {{
    {StepKind::random_resized_crop, "random_resized_crop"},
    {StepKind::resize_center_crop, "resize_center_crop"},
    {StepKind::color_jitter, "color_jitter"},
    {StepKind::random_grayscale, "random_grayscale"},
    {StepKind::gaussian_blur, "gaussian_blur"},
    {StepKind::random_horizontal_flip, "random_horizontal_flip"},
    {StepKind::normalize, "normalize"},
}};

inline std::string step_name(StepKind k) {
  for (const auto& [kind, name] : kStepNames)
    if (kind == k) return std::string(name);
  return "unknown";
}

inline StepKind parse_step_kind(const std::string& name) {
  for (const auto& [kind, n] : kStepNames)
    if (n == name) return kind;
  fail(ErrorCategory::config, "unknown augmentation step kind: " + name);
}

inline nlohmann::json policy_to_json(const AugmentationPolicy& p) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : p.steps) {
    nlohmann::json j = {{"kind", step_name(s.kind)}, {"probability", s.probability}};
    switch (s.kind) {
      case StepKind::random_resized_crop:
        j["scale"] = s.scale;
        j["ratio"] = s.ratio;
        break;
      case StepKind::color_jitter:
        j["brightness"] = s.jitter.brightness;
        j["contrast"] = s.jitter.contrast;
        j["saturation"] = s.jitter.saturation;
        j["hue"] = s.jitter.hue;
        break;
      case StepKind::gaussian_blur: j["sigma"] = s.sigma; break;
      case StepKind::normalize:
        j["mean"] = s.mean;
        j["std"] = s.std;
        break;
      default: break;
    }
    steps.push_back(std::move(j));
  }
  return {{"name", p.name}, {"output_size", p.output_size}, {"steps", steps}};
}

inline AugmentationPolicy policy_from_json(const nlohmann::json& j) {
  try {
    AugmentationPolicy p;
    p.name = j.at("name").get<std::string>();
    p.output_size = j.value("output_size", 224);
    for (const auto& js : j.at("steps")) {
      PolicyStep s;
      s.kind = parse_step_kind(js.at("kind").get<std::string>());
      s.probability = js.value("probability", 1.0);
      require(s.probability >= 0 && s.probability <= 1, ErrorCategory::config,
              "step probability must be in [0, 1]");
      if (js.contains("scale")) s.scale = js["scale"].get<std::array<double, 2>>();
      if (js.contains("ratio")) s.ratio = js["ratio"].get<std::array<double, 2>>();
      s.jitter.brightness = js.value("brightness", s.jitter.brightness);
      s.jitter.contrast = js.value("contrast", s.jitter.contrast);
      s.jitter.saturation = js.value("saturation", s.jitter.saturation);
      s.jitter.hue = js.value("hue", s.jitter.hue);
      if (js.contains("sigma")) s.sigma = js["sigma"].get<std::array<double, 2>>();
      if (js.contains("mean")) s.mean = js["mean"].get<std::array<double, 3>>();
      if (js.contains("std")) s.std = js["std"].get<std::array<double, 3>>();
      p.steps.push_back(s);
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::config, std::string("invalid policy definition: ") + e.what());
  }
}

}  // namespace invlab
