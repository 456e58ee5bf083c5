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

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dlfuzz/digest.hpp"
#include "dlfuzz/model.hpp"

namespace dlfuzz {

/// One model's measurements: a row of the judge matrix.
struct MeasurementRecord {
  Digest model_digest{};
  double performance = 0.0;  // finite, >= 0
  std::uint64_t variety = 0;
  double time_seconds = 0.0;  // > 0
};

/// Column order of the judge matrix.
enum JudgeColumn : Eigen::Index { kPerformance = 0, kVariety = 1, kTime = 2 };

using JudgeValues = Eigen::Matrix<double, Eigen::Dynamic, 3>;

/// Append-only table of measurement rows in generation order.
class JudgeMatrix {
 public:
  /// Throws ArgumentError if the record breaks the row invariants.
  void append(const MeasurementRecord& record);

  std::size_t size() const noexcept { return rows_.size(); }
  const MeasurementRecord& row(std::size_t i) const { return rows_.at(i); }
  const std::vector<MeasurementRecord>& rows() const noexcept { return rows_; }

  /// Raw (performance, variety, time) values.
  JudgeValues values() const;

 private:
  std::vector<MeasurementRecord> rows_;
};

/// Pearson correlation coefficient. Zero-variance inputs yield 0.
/// Throws ArgumentError on length mismatch or fewer than two samples.
double pearson(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y);
double pearson(std::span<const double> x, std::span<const double> y);

/// Reciprocal time column, then per-column L2 normalization.
/// All-zero columns stay zero.
JudgeValues normalized_columns(const JudgeValues& raw);

struct CriticResult {
  Eigen::Vector3d weights = Eigen::Vector3d::Constant(1.0 / 3.0);
  Eigen::Vector3d contrast = Eigen::Vector3d::Zero();
  Eigen::Vector3d conflict = Eigen::Vector3d::Zero();
  Eigen::Vector3d information = Eigen::Vector3d::Zero();
};

/// CRITIC weighting of the three judge columns. Falls back to uniform
/// weights when every column carries zero information.
/// Throws InsufficientData for fewer than two rows.
CriticResult critic(const JudgeValues& raw);
Eigen::Vector3d critic_weights(const JudgeMatrix& matrix);

/// Which row values enter the weighted sum.
enum class FitnessInput {
  Normalized,  // reciprocal time + column normalization
  Raw,         // reciprocal time only
};

/// Fitness of every row under one shared weight vector. A matrix with
/// fewer than two rows yields zeros.
Eigen::VectorXd fitness_all(const JudgeMatrix& matrix, FitnessInput input = FitnessInput::Normalized);
double fitness(const JudgeMatrix& matrix, std::size_t row,
               FitnessInput input = FitnessInput::Normalized);

struct FusionReport {
  CriticResult critic;
  double fitness_new = 0.0;
  double fitness_seed = 0.0;
  double delta_fitness = 0.0;
};

FusionReport fuse(const JudgeMatrix& matrix, std::size_t new_index, std::size_t seed_index,
                  FitnessInput input = FitnessInput::Normalized);
double delta_fitness(const JudgeMatrix& matrix, std::size_t new_index, std::size_t seed_index,
                     FitnessInput input = FitnessInput::Normalized);

inline constexpr double kWeightFloor = 0.01;

/// Sampling weight per operator tag, None included.
class OperatorWeightTable {
 public:
  static OperatorWeightTable uniform(double value = 1.0);

  double weight(OpTag tag) const;
  void set(OpTag tag, double value);
  double total() const;
  std::span<const double> values() const noexcept { return weights_; }
  Digest digest() const;

  bool operator==(const OperatorWeightTable&) const = default;

 private:
  std::array<double, kOpTagCount> weights_{};
};

/// Additive update with the floor applied; other entries are unchanged.
OperatorWeightTable update_operator_weights(const OperatorWeightTable& table, OpTag tag,
                                            double delta);

}  // namespace dlfuzz
