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

#include <stdexcept>
#include <string>
#include <string_view>

namespace invlab {

/// Coarse classification of failures. The CLI prints the category name on
/// stderr so that scripts can branch on it.
enum class ErrorCategory {
  io,
  format,
  corruption,
  validation,
  config,
  parameter,
  numeric,
  training,
  protocol,
  alignment,
  stratification,
  undefined,
};

constexpr std::string_view category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::io: return "io";
    case ErrorCategory::format: return "format";
    case ErrorCategory::corruption: return "corruption";
    case ErrorCategory::validation: return "validation";
    case ErrorCategory::config: return "config";
    case ErrorCategory::parameter: return "parameter";
    case ErrorCategory::numeric: return "numeric";
    case ErrorCategory::training: return "training";
    case ErrorCategory::protocol: return "protocol";
    case ErrorCategory::alignment: return "alignment";
    case ErrorCategory::stratification: return "stratification";
    case ErrorCategory::undefined: return "undefined";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory category, const std::string& message) {
  throw Error(category, message);
}

inline void require(bool condition, ErrorCategory category, const std::string& message) {
  if (!condition) fail(category, message);
}

}  // namespace invlab
