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
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dlfuzz/backend.hpp"
#include "dlfuzz/fusion.hpp"
#include "dlfuzz/harness.hpp"
#include "dlfuzz/mutation.hpp"
#include "dlfuzz/tensor.hpp"

namespace dlfuzz {

enum class InputMode { Random, File };

struct CampaignConfig {
  InputMode input_mode = InputMode::Random;
  TensorShape shape{1, 3, 8, 8};
  std::filesystem::path dataset_path;  // file mode
  /// Random mode draws a fresh tensor per model when set.
  bool resample_input = true;

  std::uint64_t iterations = 200;
  std::optional<double> duration_seconds;

  double epsilon = kDefaultEpsilon;
  int depth = kDefaultVarietyDepth;
  MutationConfig mutation;
  std::vector<nlohmann::json> backends;  // roster entries for make_backend()
  std::filesystem::path output_dir;      // empty: keep everything in memory
  std::uint64_t rng_seed = 0;

  /// Disabled: uniform fixed operator weights, uniform seed choice, static pool.
  bool guidance = true;
  FitnessInput fitness_input = FitnessInput::Normalized;
  TimingMode timing = TimingMode::Modeled;

  /// Throws ArgumentError when an invariant is broken.
  void check() const;

  /// Three native voters: reference, alternate and a clean fault-injection wrapper.
  static std::vector<nlohmann::json> default_backends();
};

/// Parses a JSON campaign config; missing fields keep their defaults.
CampaignConfig campaign_config_from_json(const nlohmann::json& j);
CampaignConfig load_campaign_config(const std::filesystem::path& path);

struct CampaignLogEntry {
  std::uint64_t iteration = 0;
  Digest seed_digest{};
  OpTag chosen_op = OpTag::None;
  Digest model_digest{};
  std::optional<MeasurementRecord> measurement;  // empty when the harness degraded
  Verdict verdict;
  double delta_fitness = 0.0;
  Digest weights_digest{};
  std::optional<std::string> bug_file;
  std::optional<GraphModel> model;  // in memory only, not serialized
};

nlohmann::ordered_json log_entry_to_json(const CampaignLogEntry& e);

struct CampaignSummary {
  std::uint64_t iterations = 0;
  std::uint64_t models_executed = 0;
  std::uint64_t mutation_failures = 0;
  std::uint64_t degraded = 0;
  double mean_model_time = 0.0;
  double mean_variety = 0.0;
  std::size_t crash_bugs = 0;
  std::size_t nan_bugs = 0;
  std::size_t inconsistency_bugs = 0;
  std::vector<std::string> dropped_backends;

  std::size_t total_bugs() const noexcept { return crash_bugs + nan_bugs + inconsistency_bugs; }
  nlohmann::ordered_json to_json() const;
};

struct CampaignResult {
  std::vector<CampaignLogEntry> log;
  std::vector<BugReport> bugs;
  CampaignSummary summary;
  OperatorWeightTable final_weights;
};

/// Reads or draws the campaign input tensor.
TensorF64 generate_input_tensor(const CampaignConfig& config, Rng& rng);

/// Runs the generate / execute / fuse loop. With an output directory, writes
/// campaign.jsonl, summary.json and bugs/. Warnings go to `diagnostics`.
CampaignResult run_campaign(const CampaignConfig& config, std::ostream* diagnostics = nullptr);

/// Everything needed to re-execute a bug standalone.
struct BugFile {
  BugReport report;
  Verdict verdict;
  TensorF64 input;
  std::uint64_t param_seed = 0;
  double epsilon = kDefaultEpsilon;
  int depth = kDefaultVarietyDepth;
  std::vector<nlohmann::json> backends;
};

nlohmann::ordered_json bug_file_to_json(const BugFile& bug);
BugFile bug_file_from_json(const nlohmann::json& j);

struct ReplayResult {
  Verdict expected;
  Verdict actual;
  bool reproduced() const { return expected == actual; }
};

/// Rebuilds the recorded backends and re-runs the differential test.
ReplayResult replay_bug(const BugFile& bug);
ReplayResult replay_bug_file(const std::filesystem::path& path);

}  // namespace dlfuzz
