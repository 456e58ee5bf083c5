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

#include "dlfuzz/adapter.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <limits>

namespace dlfuzz {

namespace protocol {

nlohmann::json tensor_to_json(const TensorF64& t) {
  nlohmann::json data = nlohmann::json::array();
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    const double v = t.data(i);
    if (std::isnan(v)) {
      data.push_back("NaN");
    } else if (std::isinf(v)) {
      data.push_back(v > 0 ? "Inf" : "-Inf");
    } else {
      data.push_back(v);
    }
  }
  return {{"shape", {t.shape.batch, t.shape.channel, t.shape.height, t.shape.width}},
          {"data", std::move(data)}};
}

TensorF64 tensor_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("tensor", "expected an object");
  auto shape_it = j.find("shape");
  if (shape_it == j.end() || !shape_it->is_array() || shape_it->size() != 4) {
    throw ParseError("tensor.shape", "expected [b,c,h,w]");
  }
  std::array<std::uint32_t, 4> dims{};
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& d = (*shape_it)[i];
    if (!d.is_number_unsigned() || d.get<std::uint64_t>() == 0 ||
        d.get<std::uint64_t>() > std::numeric_limits<std::uint32_t>::max()) {
      throw ParseError("tensor.shape[" + std::to_string(i) + "]", "expected a positive integer");
    }
    dims[i] = d.get<std::uint32_t>();
  }
  const TensorShape shape{dims[0], dims[1], dims[2], dims[3]};
  auto data_it = j.find("data");
  if (data_it == j.end() || !data_it->is_array()) throw ParseError("tensor.data", "expected an array");
  if (data_it->size() != shape.element_count()) {
    throw ParseError("tensor.data", "length does not match shape " + shape.to_string());
  }
  TensorF64 t(shape);
  for (std::size_t i = 0; i < data_it->size(); ++i) {
    const auto& v = (*data_it)[i];
    double value;
    if (v.is_number()) {
      value = v.get<double>();
    } else if (v.is_string() && v.get<std::string>() == "NaN") {
      value = std::numeric_limits<double>::quiet_NaN();
    } else if (v.is_string() && v.get<std::string>() == "Inf") {
      value = std::numeric_limits<double>::infinity();
    } else if (v.is_string() && v.get<std::string>() == "-Inf") {
      value = -std::numeric_limits<double>::infinity();
    } else {
      throw ParseError("tensor.data[" + std::to_string(i) + "]", "expected a number or NaN/Inf/-Inf");
    }
    t.data(static_cast<Eigen::Index>(i)) = value;
  }
  return t;
}

nlohmann::json hello() { return {{"type", "hello"}, {"version", kVersion}}; }

nlohmann::json hello_ack(const std::string& backend, const std::vector<std::string>& ops,
                         int version) {
  return {{"type", "hello_ack"}, {"version", version}, {"backend", backend}, {"ops", ops}};
}

nlohmann::json execute_request(const GraphModel& model, const TensorF64& input,
                               std::uint64_t param_seed) {
  nlohmann::ordered_json j;
  j["type"] = "execute";
  j["model"] = model_to_json(model);
  j["input"] = tensor_to_json(input);
  j["param_seed"] = param_seed;
  return nlohmann::json::parse(j.dump());
}

nlohmann::json result_response(const TensorF64& output, double elapsed_seconds) {
  return {{"type", "result"}, {"output", tensor_to_json(output)}, {"elapsed_seconds", elapsed_seconds}};
}

nlohmann::json crash_response(const std::string& message, CrashPhase phase) {
  return {{"type", "crash"},
          {"message", message},
          {"phase", phase == CrashPhase::Build ? "build" : "execute"}};
}

nlohmann::json shutdown() { return {{"type", "shutdown"}}; }

ExecutionOutcome outcome_from_response(const nlohmann::json& r, double wall_seconds) {
  ExecutionOutcome out;
  out.elapsed_seconds = std::max(wall_seconds, 1e-9);
  const std::string type = r.is_object() ? r.value("type", std::string()) : std::string();
  try {
    if (type == "result") {
      out.status = tensor_from_json(r.at("output"));
      if (auto it = r.find("elapsed_seconds"); it != r.end() && it->is_number() &&
                                               it->get<double>() > 0.0) {
        out.elapsed_seconds = it->get<double>();
      }
      return out;
    }
    if (type == "crash") {
      const std::string phase = r.value("phase", std::string("execute"));
      out.status = Crash{r.value("message", std::string()),
                         phase == "build" ? CrashPhase::Build : CrashPhase::Execute};
      return out;
    }
    out.status = Crash{"protocol-error: unexpected response type '" + type + "'", CrashPhase::Execute};
  } catch (const std::exception& e) {
    out.status = Crash{std::string("protocol-error: ") + e.what(), CrashPhase::Execute};
  }
  return out;
}

}  // namespace protocol

AdapterBackend::AdapterBackend(std::string command, std::vector<std::string> args,
                               AdapterOptions options)
    : Backend({options.name, BackendKind::ExternalAdapter}),
      command_(std::move(command)),
      args_(std::move(args)),
      options_(std::move(options)) {}

AdapterBackend::~AdapterBackend() {
  if (pid_ > 0) {
    if (alive_) shutdown();
    terminate();
  }
}

bool AdapterBackend::send_line(const std::string& line) {
  std::string payload = line + "\n";
  const char* p = payload.data();
  std::size_t left = payload.size();
  while (left > 0) {
    const ssize_t n = ::write(to_child_, p, left);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    p += n;
    left -= static_cast<std::size_t>(n);
  }
  return true;
}

std::optional<std::string> AdapterBackend::read_line(double timeout_seconds, bool& timed_out) {
  timed_out = false;
  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                            std::chrono::duration<double>(timeout_seconds));
  while (true) {
    if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    const auto now = std::chrono::steady_clock::now();
    if (now >= deadline) {
      timed_out = true;
      return std::nullopt;
    }
    const auto remaining =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
    pollfd pfd{from_child_, POLLIN, 0};
    const int rc = ::poll(&pfd, 1, static_cast<int>(std::max<long long>(1, remaining)));
    if (rc < 0) {
      if (errno == EINTR) continue;
      return std::nullopt;
    }
    if (rc == 0) continue;
    char chunk[65536];
    const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      return std::nullopt;
    }
    if (n == 0) return std::nullopt;
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

void AdapterBackend::terminate() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ > 0) {
    int status = 0;
    if (::waitpid(pid_, &status, WNOHANG) == 0) {
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, &status, 0);
    }
    pid_ = -1;
  }
  alive_ = false;
}

int AdapterBackend::shutdown() {
  if (pid_ <= 0) return -1;
  if (alive_) send_line(protocol::shutdown().dump());
  alive_ = false;
  if (to_child_ >= 0) {
    ::close(to_child_);
    to_child_ = -1;
  }
  // Give the child a moment to exit on its own before killing it.
  int status = 0;
  for (int i = 0; i < 200; ++i) {
    const pid_t r = ::waitpid(pid_, &status, WNOHANG);
    if (r == pid_) {
      pid_ = -1;
      terminate();
      return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }
    ::usleep(10000);
  }
  terminate();
  return -1;
}

ExecutionOutcome AdapterBackend::execute(const GraphModel& model, const TensorF64& input,
                                         std::uint64_t param_seed) {
  check_execution_inputs(model, input);
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::max(1e-9, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  };
  if (!alive_) return {Crash{"adapter-connection-lost", CrashPhase::Execute}, elapsed()};

  if (!send_line(protocol::execute_request(model, input, param_seed).dump())) {
    terminate();
    return {Crash{"adapter-connection-lost", CrashPhase::Execute}, elapsed()};
  }
  bool timed_out = false;
  auto line = read_line(options_.execute_timeout_seconds, timed_out);
  if (!line) {
    // A timed-out adapter may still answer later; the session cannot be resynchronized.
    terminate();
    return {Crash{timed_out ? "timeout" : "adapter-connection-lost", CrashPhase::Execute}, elapsed()};
  }
  nlohmann::json response;
  try {
    response = nlohmann::json::parse(*line);
  } catch (const nlohmann::json::parse_error& e) {
    return {Crash{std::string("protocol-error: ") + e.what(), CrashPhase::Execute}, elapsed()};
  }
  auto outcome = protocol::outcome_from_response(response, elapsed());
  if (outcome.ok() && outcome.output().shape != input.shape) {
    outcome.status = Crash{"protocol-error: output shape " + outcome.output().shape.to_string() +
                               " differs from input shape",
                           CrashPhase::Execute};
  }
  return outcome;
}

nlohmann::json AdapterBackend::spec() const {
  return {{"name", id_.name}, {"kind", "external-adapter"}, {"command", command_}, {"args", args_}};
}

std::unique_ptr<AdapterBackend> spawn_adapter(const std::string& command,
                                              const std::vector<std::string>& args,
                                              const AdapterOptions& options) {
  // Writes to a dead child return EPIPE.
  ::signal(SIGPIPE, SIG_IGN);

  int in_pipe[2], out_pipe[2];
  if (::pipe(in_pipe) != 0) throw BackendUnavailable(std::string("pipe: ") + std::strerror(errno));
  if (::pipe(out_pipe) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw BackendUnavailable(std::string("pipe: ") + std::strerror(errno));
  }
  const pid_t pid = ::fork();
  if (pid < 0) {
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) ::close(fd);
    throw BackendUnavailable(std::string("fork: ") + std::strerror(errno));
  }
  if (pid == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) ::close(fd);
    std::vector<char*> argv;
    argv.push_back(const_cast<char*>(command.c_str()));
    for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);
    ::execvp(command.c_str(), argv.data());
    ::_exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  ::fcntl(in_pipe[1], F_SETFD, FD_CLOEXEC);
  ::fcntl(out_pipe[0], F_SETFD, FD_CLOEXEC);

  std::unique_ptr<AdapterBackend> backend(new AdapterBackend(command, args, options));
  backend->pid_ = pid;
  backend->to_child_ = in_pipe[1];
  backend->from_child_ = out_pipe[0];
  backend->alive_ = true;

  auto fail = [&](const std::string& why) -> std::unique_ptr<AdapterBackend> {
    backend->terminate();
    throw BackendUnavailable("adapter '" + command + "': " + why);
  };

  if (!backend->send_line(protocol::hello().dump())) return fail("could not send hello");
  bool timed_out = false;
  auto line = backend->read_line(options.handshake_timeout_seconds, timed_out);
  if (!line) return fail(timed_out ? "handshake timeout" : "process exited during handshake");
  nlohmann::json ack;
  try {
    ack = nlohmann::json::parse(*line);
  } catch (const nlohmann::json::parse_error&) {
    return fail("malformed handshake reply");
  }
  if (!ack.is_object() || ack.value("type", std::string()) != "hello_ack") {
    return fail("expected hello_ack");
  }
  const auto version = ack.find("version");
  if (version == ack.end() || !version->is_number_integer() ||
      version->get<int>() != protocol::kVersion) {
    return fail("protocol version mismatch (got " +
                (version == ack.end() ? std::string("none") : version->dump()) + ", want 1)");
  }
  backend->announced_ = ack.value("backend", std::string());
  if (auto ops = ack.find("ops"); ops != ack.end() && ops->is_array()) {
    for (const auto& op : *ops) {
      if (op.is_string()) backend->ops_.push_back(op.get<std::string>());
    }
  }
  if (backend->id_.name.empty()) {
    backend->id_.name = backend->announced_.empty() ? command : backend->announced_;
  }
  return backend;
}

}  // namespace dlfuzz
