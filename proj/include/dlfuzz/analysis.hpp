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
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "dlfuzz/harness.hpp"

namespace dlfuzz {

/// The measured columns of one campaign log line.
struct LogRow {
  std::uint64_t iteration = 0;
  double performance = 0.0;
  double variety = 0.0;
  double time_seconds = 0.0;
  bool bug = false;
};

/// Lines without a measurement (degraded runs) are skipped.
std::vector<LogRow> parse_log(std::istream& in);
std::vector<LogRow> read_log(const std::filesystem::path& path);

struct CorrelationReport {
  std::size_t n = 0;
  std::optional<double> variety_performance;  // empty: a column had zero variance
  std::optional<double> variety_time;

  std::string table() const;
};

/// Throws InsufficientData for fewer than two rows.
CorrelationReport analyze_correlations(const std::vector<LogRow>& rows);

struct TimeGroup {
  std::size_t models = 0;
  double total_time = 0.0;
  std::size_t bugs = 0;

  double time_per_model() const;
  std::optional<double> time_per_bug() const;  // empty when bugs == 0
};

struct TimeSplitReport {
  TimeGroup larger;
  TimeGroup smaller;

  std::string table() const;
};

/// Sorts by time (descending, iteration order on ties) and cuts at the median.
/// An odd middle entry lands in the smaller group.
TimeSplitReport time_split_report(const std::vector<LogRow>& rows);

}  // namespace dlfuzz
