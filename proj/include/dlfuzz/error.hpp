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

#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dlfuzz {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition on a function argument does not hold.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Malformed serialized input. `field()` names the first offending field.
class ParseError : public Error {
 public:
  ParseError(std::string field, const std::string& detail);
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

struct Violation {
  std::string rule;
  std::string detail;
};

/// A model was rejected by the validity rules.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Violation> violations);
  const std::vector<Violation>& violations() const noexcept { return violations_; }
  bool has_rule(const std::string& rule) const;

 private:
  std::vector<Violation> violations_;
};

class MutationFailed : public Error {
 public:
  using Error::Error;
};

class PoolConstructionError : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

class BackendUnavailable : public Error {
 public:
  using Error::Error;
};

/// Tensor file could not be read. `offset()` is the byte position of the failure.
class InputError : public Error {
 public:
  InputError(const std::string& what, std::size_t offset);
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Every backend failed at build time on a structurally valid model.
class HarnessDegraded : public Error {
 public:
  using Error::Error;
};

}  // namespace dlfuzz
