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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "dlfuzz/fusion.hpp"
#include "dlfuzz/model.hpp"
#include "dlfuzz/rng.hpp"

namespace dlfuzz {

struct MutationConfig {
  int operator_count = 10;
  std::size_t pool_size = 20;
  std::size_t tournament_k = 1;
  int max_retries = 100;
  std::uint64_t rng_seed = 0;
  double growth_probability = 0.1;

  /// Throws ArgumentError when an invariant is broken.
  void check() const;
};

struct SeedEntry {
  GraphModel model;
  Digest digest{};
  double fitness = 0.0;
  std::uint64_t insertion = 0;          // tie-break order
  std::optional<std::size_t> judge_row;  // row of its measurement, once executed
};

/// Digest-unique, capacity-bounded pool kept in insertion order.
class SeedPool {
 public:
  explicit SeedPool(std::size_t capacity);

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool full() const noexcept { return entries_.size() >= capacity_; }
  bool contains(const Digest& digest) const;

  const std::vector<SeedEntry>& entries() const noexcept { return entries_; }
  SeedEntry& at(std::size_t i) { return entries_.at(i); }
  const SeedEntry& at(std::size_t i) const { return entries_.at(i); }

  /// Adds a valid model. Returns false for a duplicate digest or a full pool.
  bool insert(GraphModel model, double fitness = 0.0);

  /// Removes the minimum-fitness entry (earliest inserted among ties).
  void evict_min_fitness();

 private:
  std::size_t capacity_;
  std::uint64_t next_insertion_ = 0;
  std::vector<SeedEntry> entries_;
};

/// Identity chain 0 -> 1 -> ... -> operator_count.
GraphModel trivial_model(int operator_count, TensorShape input_shape);

/// Draws a tag with probability weight / total weight.
OpTag sample_operator_tag(const OperatorWeightTable& weights, Rng& rng);

/// Draws a tag, then its parameters uniformly from the palettes.
Operator sample_operator(const OperatorWeightTable& weights, Rng& rng);

struct MutationResult {
  GraphModel model;
  OpTag chosen_op = OpTag::None;
  EdgeKey edge{0, 0};
  bool grew = false;
};

/// Relabels one ordered pair with a weighted operator draw, retrying until
/// the result is valid and differs from the input. Throws MutationFailed
/// after `max_retries` attempts.
MutationResult mutate(const GraphModel& model, const OperatorWeightTable& weights, Rng& rng,
                      int max_retries = 100, double growth_probability = 0.1);

/// Trivial model plus mutated descendants until pool_size distinct entries.
/// Throws PoolConstructionError after pool_size * max_retries attempts.
SeedPool build_seed_pool(const MutationConfig& config, TensorShape input_shape,
                         const OperatorWeightTable& weights, Rng& rng);

/// Tournament selection; returns indices into pool.entries(), winners in order.
std::vector<std::size_t> tournament_select_indices(const SeedPool& pool, std::size_t k, Rng& rng);
std::vector<GraphModel> tournament_select(const SeedPool& pool, std::size_t k, Rng& rng);

}  // namespace dlfuzz
