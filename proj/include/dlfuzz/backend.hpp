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

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "dlfuzz/interpreter.hpp"
#include "dlfuzz/model.hpp"
#include "dlfuzz/params.hpp"
#include "dlfuzz/tensor.hpp"

namespace dlfuzz {

enum class BackendKind { NativeReference, NativeAlternate, FaultInjection, ExternalAdapter };

std::string_view backend_kind_name(BackendKind kind);
std::optional<BackendKind> backend_kind_from_name(std::string_view name);

struct BackendId {
  std::string name;
  BackendKind kind = BackendKind::NativeReference;
};

enum class CrashPhase { Build, Execute };

struct Crash {
  std::string message;
  CrashPhase phase = CrashPhase::Execute;
};

struct ExecutionOutcome {
  std::variant<TensorF64, Crash> status;
  double elapsed_seconds = 0.0;

  bool ok() const noexcept { return std::holds_alternative<TensorF64>(status); }
  const TensorF64& output() const { return std::get<TensorF64>(status); }
  const Crash& crash() const { return std::get<Crash>(status); }
};

inline constexpr double kExecutionTimeoutSeconds = 30.0;

/// An execution endpoint for models.
class Backend {
 public:
  explicit Backend(BackendId id) : id_(std::move(id)) {}
  virtual ~Backend() = default;
  Backend(const Backend&) = delete;
  Backend& operator=(const Backend&) = delete;

  const BackendId& id() const noexcept { return id_; }
  const std::string& name() const noexcept { return id_.name; }

  /// Runs the model. Internal failures become Crash outcomes; only broken
  /// preconditions (invalid model, wrong input shape) throw.
  virtual ExecutionOutcome execute(const GraphModel& model, const TensorF64& input,
                                   std::uint64_t param_seed) = 0;

  /// False once an out-of-process backend has lost its connection.
  virtual bool alive() const { return true; }

  /// Roster entry that reconstructs an equivalent backend via make_backend().
  virtual nlohmann::json spec() const = 0;

 protected:
  BackendId id_;
};

/// Elapsed time for native backends: wall clock, or the deterministic
/// multiply-add cost model (1 ns per multiply-add plus 1 us per edge).
enum class TimingMode { Modeled, Wall };

struct NativeOptions {
  TimingMode timing = TimingMode::Modeled;
  double timeout_seconds = kExecutionTimeoutSeconds;
  /// Overrides the seeded generator; the param_seed argument is then ignored.
  ParameterSource parameters;
};

/// In-process interpreter. The reference kind computes in f64 with forward
/// summation and max-subtracted softmax; the alternate kind computes in f32
/// with pairwise summation and no max subtraction.
class NativeBackend : public Backend {
 public:
  NativeBackend(std::string name, BackendKind kind, NativeOptions options = {});

  ExecutionOutcome execute(const GraphModel& model, const TensorF64& input,
                           std::uint64_t param_seed) override;
  nlohmann::json spec() const override;

  /// Runs the interpreter; exposed so wrappers can alter the options.
  ExecutionOutcome run(const GraphModel& model, const TensorF64& input, std::uint64_t param_seed,
                       std::optional<DropoutNoise> noise) const;

  const NativeOptions& options() const noexcept { return options_; }

 private:
  NativeOptions options_;
};

enum class FaultMode { None, Nan, Bias, Crash, DropoutNoise };

std::string_view fault_mode_name(FaultMode mode);
std::optional<FaultMode> fault_mode_from_name(std::string_view name);

struct FaultConfig {
  FaultMode mode = FaultMode::None;
  /// Fault fires iff the model has an active edge with this tag; always when empty.
  std::optional<OpTag> trigger;
  double bias = 1.0;
  BackendKind base = BackendKind::NativeReference;
};

/// Wraps a native interpreter and corrupts its result on demand:
///   Nan           output element 0 becomes NaN
///   Bias          `bias` is added to every output element
///   Crash         execution fails with an injected exception message
///   DropoutNoise  Dropout edges mask stochastically (fresh mask per call)
class FaultInjectionBackend : public Backend {
 public:
  FaultInjectionBackend(std::string name, FaultConfig config, NativeOptions options = {});

  ExecutionOutcome execute(const GraphModel& model, const TensorF64& input,
                           std::uint64_t param_seed) override;
  nlohmann::json spec() const override;

  const FaultConfig& config() const noexcept { return config_; }
  bool triggers_on(const GraphModel& model) const;

 private:
  FaultConfig config_;
  NativeBackend inner_;
  std::uint64_t calls_ = 0;
};

/// Precondition check shared by all backends.
void check_execution_inputs(const GraphModel& model, const TensorF64& input);

/// Executes through the backend's interface.
inline ExecutionOutcome execute(Backend& backend, const GraphModel& model, const TensorF64& input,
                                std::uint64_t param_seed) {
  return backend.execute(model, input, param_seed);
}

/// Builds a backend from a roster entry:
///   {"name": "...", "kind": "native-reference" | "native-alternate" |
///    "fault-injection" | "external-adapter", ...kind-specific fields}
/// Throws BackendUnavailable if an adapter cannot be started.
std::unique_ptr<Backend> make_backend(const nlohmann::json& spec,
                                      TimingMode timing = TimingMode::Modeled);

}  // namespace dlfuzz
