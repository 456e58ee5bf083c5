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

#include "dlfuzz/backend.hpp"

#include <array>
#include <chrono>

#include "dlfuzz/adapter.hpp"

namespace dlfuzz {

namespace {

constexpr double kSecondsPerMultiplyAdd = 1e-9;
constexpr double kSecondsPerEdge = 1e-6;

constexpr std::array<std::pair<BackendKind, std::string_view>, 4> kKindNames{{
    {BackendKind::NativeReference, "native-reference"},
    {BackendKind::NativeAlternate, "native-alternate"},
    {BackendKind::FaultInjection, "fault-injection"},
    {BackendKind::ExternalAdapter, "external-adapter"},
}};

constexpr std::array<std::pair<FaultMode, std::string_view>, 5> kFaultNames{{
    {FaultMode::None, "none"},
    {FaultMode::Nan, "nan"},
    {FaultMode::Bias, "bias"},
    {FaultMode::Crash, "crash"},
    {FaultMode::DropoutNoise, "dropout-noise"},
}};

}  // namespace

std::string_view backend_kind_name(BackendKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

std::optional<BackendKind> backend_kind_from_name(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

std::string_view fault_mode_name(FaultMode mode) {
  for (const auto& [m, name] : kFaultNames) {
    if (m == mode) return name;
  }
  return "unknown";
}

std::optional<FaultMode> fault_mode_from_name(std::string_view name) {
  for (const auto& [m, n] : kFaultNames) {
    if (n == name) return m;
  }
  return std::nullopt;
}

double operator_cost(const Operator& op, const TensorShape& shape) {
  const double elems = static_cast<double>(shape.element_count());
  const double c = shape.channel;
  const double k = op.params.kernel;
  switch (op.tag) {
    case OpTag::None:
      return 0.0;
    case OpTag::Conv2D:
      return elems * c * k * k;
    case OpTag::DepthwiseConv2D:
      return elems * k * k;
    case OpTag::Dense1x1:
      return elems * c;
    case OpTag::MaxPool2D:
    case OpTag::AvgPool2D:
      return elems * op.params.window * op.params.window;
    case OpTag::Softmax:
      return 3.0 * elems;
    case OpTag::BatchNorm:
      return 2.0 * elems;
    default:
      return elems;
  }
}

double model_cost(const GraphModel& model) {
  double cost = 0.0;
  std::vector<int> in_degree(model.vertex_count(), 0);
  for (const auto& [key, op] : model.edges()) {
    cost += operator_cost(op, model.input_shape());
    ++in_degree[key.second];
  }
  const double elems = static_cast<double>(model.input_shape().element_count());
  for (int d : in_degree) {
    if (d > 1) cost += (d - 1) * elems;
  }
  return cost;
}

void check_execution_inputs(const GraphModel& model, const TensorF64& input) {
  require_valid(model);
  if (input.shape != model.input_shape()) {
    throw ArgumentError("input shape " + input.shape.to_string() + " does not match model shape " +
                        model.input_shape().to_string());
  }
}

NativeBackend::NativeBackend(std::string name, BackendKind kind, NativeOptions options)
    : Backend({std::move(name), kind}), options_(std::move(options)) {
  if (kind != BackendKind::NativeReference && kind != BackendKind::NativeAlternate) {
    throw ArgumentError("NativeBackend requires a native kind");
  }
}

ExecutionOutcome NativeBackend::execute(const GraphModel& model, const TensorF64& input,
                                        std::uint64_t param_seed) {
  return run(model, input, param_seed, std::nullopt);
}

ExecutionOutcome NativeBackend::run(const GraphModel& model, const TensorF64& input,
                                    std::uint64_t param_seed,
                                    std::optional<DropoutNoise> noise) const {
  check_execution_inputs(model, input);
  InterpreterOptions opts;
  opts.parameters = options_.parameters ? options_.parameters : seeded_parameters(param_seed);
  opts.dropout_noise = noise;
  if (id_.kind == BackendKind::NativeAlternate) {
    opts.numerics = Numerics{Summation::Pairwise, false};
  }
  const auto start = std::chrono::steady_clock::now();
  opts.deadline = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                              std::chrono::duration<double>(options_.timeout_seconds));

  ExecutionOutcome outcome;
  try {
    if (id_.kind == BackendKind::NativeReference) {
      outcome.status = interpret<double>(model, input, opts);
    } else {
      outcome.status = interpret<float>(model, input.cast<float>(), opts).cast<double>();
    }
  } catch (const ExecutionTimeout&) {
    outcome.status = Crash{"timeout", CrashPhase::Execute};
  } catch (const std::exception& e) {
    outcome.status = Crash{e.what(), CrashPhase::Execute};
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (options_.timing == TimingMode::Wall) {
    outcome.elapsed_seconds = std::max(wall, 1e-9);
  } else {
    outcome.elapsed_seconds = model_cost(model) * kSecondsPerMultiplyAdd +
                              static_cast<double>(model.active_edge_count()) * kSecondsPerEdge;
  }
  return outcome;
}

nlohmann::json NativeBackend::spec() const {
  return {{"name", id_.name}, {"kind", std::string(backend_kind_name(id_.kind))}};
}

FaultInjectionBackend::FaultInjectionBackend(std::string name, FaultConfig config,
                                             NativeOptions options)
    : Backend({name, BackendKind::FaultInjection}),
      config_(config),
      inner_(name + "/base", config.base, std::move(options)) {}

bool FaultInjectionBackend::triggers_on(const GraphModel& model) const {
  if (!config_.trigger) return true;
  for (const auto& [key, op] : model.edges()) {
    if (op.tag == *config_.trigger) return true;
  }
  return false;
}

ExecutionOutcome FaultInjectionBackend::execute(const GraphModel& model, const TensorF64& input,
                                                std::uint64_t param_seed) {
  const bool fire = config_.mode != FaultMode::None && triggers_on(model);
  if (fire && config_.mode == FaultMode::DropoutNoise) {
    return inner_.run(model, input, param_seed, DropoutNoise{splitmix64(param_seed ^ ++calls_)});
  }
  ExecutionOutcome outcome = inner_.run(model, input, param_seed, std::nullopt);
  if (!fire || !outcome.ok()) return outcome;

  switch (config_.mode) {
    case FaultMode::Nan: {
      auto& out = std::get<TensorF64>(outcome.status);
      out.data(0) = std::numeric_limits<double>::quiet_NaN();
      break;
    }
    case FaultMode::Bias: {
      auto& out = std::get<TensorF64>(outcome.status);
      out.data += config_.bias;
      break;
    }
    case FaultMode::Crash: {
      const std::string what =
          config_.trigger ? std::string(op_name(*config_.trigger)) : std::string("model");
      outcome.status = Crash{"fault-injection: injected failure while executing " + what,
                             CrashPhase::Execute};
      break;
    }
    default:
      break;
  }
  return outcome;
}

nlohmann::json FaultInjectionBackend::spec() const {
  nlohmann::json j{{"name", id_.name},
                   {"kind", "fault-injection"},
                   {"mode", std::string(fault_mode_name(config_.mode))},
                   {"bias", config_.bias},
                   {"base", std::string(backend_kind_name(config_.base))}};
  j["trigger"] = config_.trigger ? nlohmann::json(std::string(op_name(*config_.trigger)))
                                 : nlohmann::json(nullptr);
  return j;
}

namespace {

std::string required_string(const nlohmann::json& spec, const char* key) {
  auto it = spec.find(key);
  if (it == spec.end() || !it->is_string()) {
    throw ArgumentError(std::string("backend spec needs string field '") + key + "'");
  }
  return it->get<std::string>();
}

}  // namespace

std::unique_ptr<Backend> make_backend(const nlohmann::json& spec, TimingMode timing) {
  if (!spec.is_object()) throw ArgumentError("backend spec must be an object");
  const std::string name = required_string(spec, "name");
  const std::string kind_name = required_string(spec, "kind");
  const auto kind = backend_kind_from_name(kind_name);
  if (!kind) throw ArgumentError("unknown backend kind '" + kind_name + "'");

  NativeOptions native;
  native.timing = timing;
  switch (*kind) {
    case BackendKind::NativeReference:
    case BackendKind::NativeAlternate:
      return std::make_unique<NativeBackend>(name, *kind, native);
    case BackendKind::FaultInjection: {
      FaultConfig cfg;
      const std::string mode = spec.value("mode", std::string("none"));
      auto m = fault_mode_from_name(mode);
      if (!m) throw ArgumentError("unknown fault mode '" + mode + "'");
      cfg.mode = *m;
      if (auto it = spec.find("trigger"); it != spec.end() && !it->is_null()) {
        auto tag = op_from_name(it->get<std::string>());
        if (!tag || *tag == OpTag::None) {
          throw ArgumentError("unknown fault trigger '" + it->get<std::string>() + "'");
        }
        cfg.trigger = *tag;
      }
      cfg.bias = spec.value("bias", 1.0);
      const std::string base = spec.value("base", std::string("native-reference"));
      auto base_kind = backend_kind_from_name(base);
      if (!base_kind || (*base_kind != BackendKind::NativeReference &&
                         *base_kind != BackendKind::NativeAlternate)) {
        throw ArgumentError("fault-injection base must be a native kind");
      }
      cfg.base = *base_kind;
      return std::make_unique<FaultInjectionBackend>(name, cfg, native);
    }
    case BackendKind::ExternalAdapter: {
      const std::string command = required_string(spec, "command");
      std::vector<std::string> args;
      if (auto it = spec.find("args"); it != spec.end()) args = it->get<std::vector<std::string>>();
      AdapterOptions opts;
      opts.name = name;
      return spawn_adapter(command, args, opts);
    }
  }
  throw ArgumentError("unhandled backend kind");
}

}  // namespace dlfuzz
