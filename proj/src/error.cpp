// Copyright 2026 The dlfuzz Authors.
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

#include "dlfuzz/error.hpp"

#include <algorithm>

namespace dlfuzz {

ParseError::ParseError(std::string field, const std::string& detail)
    : Error("parse error at '" + field + "': " + detail), field_(std::move(field)) {}

namespace {
std::string join_rules(const std::vector<Violation>& violations) {
  std::string out = "invalid model:";
  for (const auto& v : violations) out += " " + v.rule;
  return out;
}
}  // namespace

ValidationError::ValidationError(std::vector<Violation> violations)
    : Error(join_rules(violations)), violations_(std::move(violations)) {}

bool ValidationError::has_rule(const std::string& rule) const {
  return std::any_of(violations_.begin(), violations_.end(),
                     [&](const Violation& v) { return v.rule == rule; });
}

InputError::InputError(const std::string& what, std::size_t offset)
    : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

}  // namespace dlfuzz
