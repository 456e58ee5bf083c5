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
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dlfuzz/backend.hpp"
#include "dlfuzz/fusion.hpp"
#include "dlfuzz/model.hpp"
#include "dlfuzz/tensor.hpp"
#include "dlfuzz/variety.hpp"

namespace dlfuzz {

inline constexpr double kDefaultEpsilon = 0.15;

/// Stored in place of a non-finite inconsistency so judge rows stay finite.
inline constexpr double kPerformanceCap = 3.4028234663852886e38;

enum class VerdictKind { NoBug, Crash, NanBug, InconsistencyBug };

std::string_view verdict_kind_name(VerdictKind kind);
std::optional<VerdictKind> verdict_kind_from_name(std::string_view name);

struct Verdict {
  VerdictKind kind = VerdictKind::NoBug;
  /// Crashing backends for Crash; the attributed backend otherwise.
  /// Empty for an unattributed inconsistency.
  std::vector<std::string> backends;

  bool is_bug() const noexcept { return kind != VerdictKind::NoBug; }
  bool attributed() const noexcept { return !backends.empty(); }
  /// "a+b" style label, or "unattributed".
  std::string attribution() const;

  bool operator==(const Verdict&) const = default;
};

/// Inconsistency of one backend pair; names are ordered (a < b).
/// `value` is empty when either output contains NaN.
struct PairInconsistency {
  std::string a;
  std::string b;
  std::optional<double> value;
};

struct NamedOutcome {
  std::string backend;
  ExecutionOutcome outcome;
};

struct DifferentialRecord {
  Digest model_digest{};
  std::vector<NamedOutcome> outcomes;
  std::vector<PairInconsistency> pairwise;
  Verdict verdict;
  MeasurementRecord measurement;
  /// Set when attribution was impossible (no common backend among the top pairs).
  bool flagged = false;
};

/// Max elementwise |a - b|. Throws ArgumentError on shape mismatch or NaN.
double pairwise_inconsistency(const TensorF64& a, const TensorF64& b);

/// Inconsistencies for every pair of Ok outcomes, ordered by names.
std::vector<PairInconsistency> compute_pairwise(std::span<const NamedOutcome> outcomes);

struct InconsistencyVote {
  Verdict verdict;
  bool flagged = false;
};

/// Attribution among numeric pairs: two or more pairs above epsilon (strict)
/// implicate the backend shared by the two largest. With exactly two
/// backends a single exceeding pair gives an unattributed bug.
InconsistencyVote vote_inconsistency(std::span<const PairInconsistency> pairs, double epsilon,
                                     std::size_t backend_count);

/// Verdict precedence: Crash, then NaN, then inconsistency, else NoBug.
InconsistencyVote classify(std::span<const NamedOutcome> outcomes,
                           std::span<const PairInconsistency> pairs, double epsilon);

/// Runs the model on every backend and fills verdict and measurement.
/// Throws HarnessDegraded if every backend crashes in the build phase.
DifferentialRecord run_differential(const GraphModel& model, const TensorF64& input,
                                    std::span<Backend* const> backends, double epsilon,
                                    std::uint64_t param_seed, int depth = kDefaultVarietyDepth);

struct BugReport {
  VerdictKind kind = VerdictKind::NoBug;
  std::string attributed_backend;
  GraphModel model;
  Digest input_digest{};
  nlohmann::json evidence;
  std::int64_t first_seen = 0;
  Digest signature{};
};

/// Lower-cased message with digit runs and hex literals collapsed to '#'.
std::string crash_fingerprint(std::string_view message);

/// Structural bug signature; operator parameters do not participate.
Digest bug_signature(const GraphModel& model, const Verdict& verdict,
                     std::span<const NamedOutcome> outcomes);

/// Single-writer registry of seen bug signatures.
class BugRegistry {
 public:
  /// Emits a report iff the record's signature has not been seen.
  std::optional<BugReport> dedup_and_report(const DifferentialRecord& record, const GraphModel& model,
                                            const Digest& input_digest, std::int64_t iteration);

  std::size_t size() const noexcept { return seen_.size(); }
  std::size_t count(VerdictKind kind) const;

 private:
  std::set<Digest> seen_;
  std::map<VerdictKind, std::size_t> counts_;
};

nlohmann::json verdict_to_json(const Verdict& v);
Verdict verdict_from_json(const nlohmann::json& j);

}  // namespace dlfuzz
