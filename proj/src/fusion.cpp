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

#include "dlfuzz/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dlfuzz {

void JudgeMatrix::append(const MeasurementRecord& record) {
  if (!(record.time_seconds > 0.0) || !std::isfinite(record.time_seconds)) {
    throw ArgumentError("measurement time must be positive and finite");
  }
  if (!(record.performance >= 0.0) || !std::isfinite(record.performance)) {
    throw ArgumentError("measurement performance must be finite and non-negative");
  }
  rows_.push_back(record);
}

JudgeValues JudgeMatrix::values() const {
  JudgeValues m(static_cast<Eigen::Index>(rows_.size()), 3);
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    m(r, kPerformance) = rows_[i].performance;
    m(r, kVariety) = static_cast<double>(rows_[i].variety);
    m(r, kTime) = rows_[i].time_seconds;
  }
  return m;
}

double pearson(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (x.size() != y.size()) throw ArgumentError("pearson: length mismatch");
  if (x.size() < 2) throw ArgumentError("pearson: needs at least two samples");
  const Eigen::ArrayXd dx = x.array() - x.mean();
  const Eigen::ArrayXd dy = y.array() - y.mean();
  const double sxx = dx.square().sum();
  const double syy = dy.square().sum();
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  // Rounding can push nearly collinear inputs a few ulps past 1.
  return std::clamp((dx * dy).sum() / std::sqrt(sxx * syy), -1.0, 1.0);
}

double pearson(std::span<const double> x, std::span<const double> y) {
  const Eigen::Map<const Eigen::VectorXd> xm(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::Map<const Eigen::VectorXd> ym(y.data(), static_cast<Eigen::Index>(y.size()));
  return pearson(xm, ym);
}

namespace {

JudgeValues reciprocal_time(const JudgeValues& raw) {
  JudgeValues x = raw;
  x.col(kTime) = raw.col(kTime).cwiseInverse();
  return x;
}

}  // namespace

JudgeValues normalized_columns(const JudgeValues& raw) {
  JudgeValues z = reciprocal_time(raw);
  for (Eigen::Index q = 0; q < 3; ++q) {
    const double norm = z.col(q).norm();
    if (norm > 0.0) {
      z.col(q) /= norm;
    } else {
      z.col(q).setZero();
    }
  }
  return z;
}

CriticResult critic(const JudgeValues& raw) {
  const Eigen::Index m = raw.rows();
  if (m < 2) throw InsufficientData("CRITIC needs at least two judge-matrix rows");
  const JudgeValues z = normalized_columns(raw);

  CriticResult out;
  for (Eigen::Index q = 0; q < 3; ++q) {
    const Eigen::ArrayXd dev = z.col(q).array() - z.col(q).mean();
    out.contrast(q) = std::sqrt(dev.square().sum() / static_cast<double>(m - 1));
  }
  for (Eigen::Index q = 0; q < 3; ++q) {
    double f = 0.0;
    for (Eigen::Index o = 0; o < 3; ++o) {
      if (o != q) f += 1.0 - pearson(z.col(q), z.col(o));
    }
    out.conflict(q) = f;
  }
  out.information = out.contrast.cwiseProduct(out.conflict);
  const double total = out.information.sum();
  if (total > 0.0) {
    out.weights = out.information / total;
  } else {
    out.weights.setConstant(1.0 / 3.0);
  }
  return out;
}

Eigen::Vector3d critic_weights(const JudgeMatrix& matrix) { return critic(matrix.values()).weights; }

namespace {

Eigen::VectorXd weighted_rows(const JudgeValues& raw, const Eigen::Vector3d& w, FitnessInput input) {
  const JudgeValues x = input == FitnessInput::Normalized ? normalized_columns(raw)
                                                          : reciprocal_time(raw);
  return x * w;
}

}  // namespace

Eigen::VectorXd fitness_all(const JudgeMatrix& matrix, FitnessInput input) {
  if (matrix.size() < 2) return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(matrix.size()));
  const JudgeValues raw = matrix.values();
  return weighted_rows(raw, critic(raw).weights, input);
}

double fitness(const JudgeMatrix& matrix, std::size_t row, FitnessInput input) {
  if (row >= matrix.size()) throw ArgumentError("fitness: row index out of range");
  if (matrix.size() < 2) return 0.0;
  return fitness_all(matrix, input)(static_cast<Eigen::Index>(row));
}

FusionReport fuse(const JudgeMatrix& matrix, std::size_t new_index, std::size_t seed_index,
                  FitnessInput input) {
  if (new_index >= matrix.size() || seed_index >= matrix.size()) {
    throw ArgumentError("fuse: row index out of range");
  }
  FusionReport report;
  if (matrix.size() < 2) return report;
  const JudgeValues raw = matrix.values();
  report.critic = critic(raw);
  const Eigen::VectorXd fit = weighted_rows(raw, report.critic.weights, input);
  report.fitness_new = fit(static_cast<Eigen::Index>(new_index));
  report.fitness_seed = fit(static_cast<Eigen::Index>(seed_index));
  report.delta_fitness = report.fitness_new - report.fitness_seed;
  return report;
}

double delta_fitness(const JudgeMatrix& matrix, std::size_t new_index, std::size_t seed_index,
                     FitnessInput input) {
  return fuse(matrix, new_index, seed_index, input).delta_fitness;
}

OperatorWeightTable OperatorWeightTable::uniform(double value) {
  if (!(value >= kWeightFloor)) throw ArgumentError("initial operator weight below floor");
  OperatorWeightTable t;
  t.weights_.fill(value);
  return t;
}

namespace {
std::size_t tag_index(OpTag tag) {
  const auto i = static_cast<std::size_t>(tag);
  if (i >= kOpTagCount) throw ArgumentError("unknown operator tag " + std::to_string(i));
  return i;
}
}  // namespace

double OperatorWeightTable::weight(OpTag tag) const { return weights_[tag_index(tag)]; }

void OperatorWeightTable::set(OpTag tag, double value) {
  if (!std::isfinite(value) || value < kWeightFloor) {
    throw ArgumentError("operator weight must be finite and >= the floor");
  }
  weights_[tag_index(tag)] = value;
}

double OperatorWeightTable::total() const {
  double s = 0.0;
  for (double w : weights_) s += w;
  return s;
}

Digest OperatorWeightTable::digest() const {
  ByteWriter w;
  for (double v : weights_) w.f64(v);
  return w.digest();
}

OperatorWeightTable update_operator_weights(const OperatorWeightTable& table, OpTag tag,
                                            double delta) {
  OperatorWeightTable out = table;
  const double updated = table.weight(tag) + delta;
  out.set(tag, std::isfinite(updated) ? std::max(kWeightFloor, updated) : table.weight(tag));
  return out;
}

}  // namespace dlfuzz
