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

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dlfuzz/backend.hpp"

namespace dlfuzz {

namespace protocol {

inline constexpr int kVersion = 1;

/// {"shape":[b,c,h,w],"data":[...]} with non-finite values as "NaN", "Inf", "-Inf".
nlohmann::json tensor_to_json(const TensorF64& t);
/// Throws ParseError on malformed payloads.
TensorF64 tensor_from_json(const nlohmann::json& j);

nlohmann::json hello();
nlohmann::json hello_ack(const std::string& backend, const std::vector<std::string>& ops,
                         int version = kVersion);
nlohmann::json execute_request(const GraphModel& model, const TensorF64& input,
                               std::uint64_t param_seed);
nlohmann::json result_response(const TensorF64& output, double elapsed_seconds);
nlohmann::json crash_response(const std::string& message, CrashPhase phase);
nlohmann::json shutdown();

/// Interprets a result or crash line. Anything else is a protocol error,
/// reported as a Crash whose message starts with "protocol-error:".
ExecutionOutcome outcome_from_response(const nlohmann::json& response, double wall_seconds);

}  // namespace protocol

struct AdapterOptions {
  /// Backend name; defaults to the name announced in hello_ack.
  std::string name;
  double handshake_timeout_seconds = 30.0;
  double execute_timeout_seconds = kExecutionTimeoutSeconds;
};

/// Child process speaking the line-delimited JSON adapter protocol.
/// One request is in flight at a time.
class AdapterBackend : public Backend {
 public:
  ~AdapterBackend() override;

  ExecutionOutcome execute(const GraphModel& model, const TensorF64& input,
                           std::uint64_t param_seed) override;
  bool alive() const override { return alive_; }
  nlohmann::json spec() const override;

  const std::vector<std::string>& supported_ops() const noexcept { return ops_; }
  const std::string& announced_backend() const noexcept { return announced_; }
  int pid() const noexcept { return pid_; }

  /// Sends shutdown and waits for the child to exit. Returns its exit status.
  int shutdown();

 private:
  friend std::unique_ptr<AdapterBackend> spawn_adapter(const std::string&,
                                                       const std::vector<std::string>&,
                                                       const AdapterOptions&);
  AdapterBackend(std::string command, std::vector<std::string> args, AdapterOptions options);

  bool send_line(const std::string& line);
  /// Empty on EOF or timeout; `timed_out` tells which.
  std::optional<std::string> read_line(double timeout_seconds, bool& timed_out);
  void terminate();

  std::string command_;
  std::vector<std::string> args_;
  AdapterOptions options_;
  std::vector<std::string> ops_;
  std::string announced_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  bool alive_ = false;
  std::string buffer_;
};

/// Starts the adapter and completes the hello handshake.
/// Throws BackendUnavailable on spawn failure, timeout or version mismatch.
std::unique_ptr<AdapterBackend> spawn_adapter(const std::string& command,
                                              const std::vector<std::string>& args,
                                              const AdapterOptions& options = {});

}  // namespace dlfuzz
