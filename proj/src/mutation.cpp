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

#include "dlfuzz/mutation.hpp"

#include <algorithm>
#include <numeric>

namespace dlfuzz {

void MutationConfig::check() const {
  if (operator_count < 1) throw ArgumentError("operator_count must be >= 1");
  if (pool_size < 1) throw ArgumentError("pool_size must be >= 1");
  if (tournament_k < 1) throw ArgumentError("tournament_k must be >= 1");
  if (tournament_k > pool_size) throw ArgumentError("tournament_k must not exceed pool_size");
  if (max_retries < 1) throw ArgumentError("max_retries must be >= 1");
  if (!(growth_probability >= 0.0 && growth_probability <= 1.0)) {
    throw ArgumentError("growth_probability must be in [0, 1]");
  }
}

SeedPool::SeedPool(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ArgumentError("seed pool capacity must be positive");
}

bool SeedPool::contains(const Digest& digest) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const SeedEntry& e) { return e.digest == digest; });
}

bool SeedPool::insert(GraphModel model, double fitness) {
  if (full()) return false;
  const Digest digest = canonical_hash(model);
  if (contains(digest)) return false;
  entries_.push_back(SeedEntry{std::move(model), digest, fitness, next_insertion_++, std::nullopt});
  return true;
}

void SeedPool::evict_min_fitness() {
  if (entries_.empty()) return;
  auto it = std::min_element(entries_.begin(), entries_.end(),
                             [](const SeedEntry& a, const SeedEntry& b) {
                               if (a.fitness != b.fitness) return a.fitness < b.fitness;
                               return a.insertion < b.insertion;
                             });
  entries_.erase(it);
}

GraphModel trivial_model(int operator_count, TensorShape input_shape) {
  if (operator_count < 1) throw ArgumentError("operator_count must be >= 1");
  EdgeMap edges;
  for (int v = 0; v < operator_count; ++v) edges[{v, v + 1}] = Operator{OpTag::Identity, {}};
  return GraphModel(operator_count + 1, input_shape, std::move(edges));
}

OpTag sample_operator_tag(const OperatorWeightTable& weights, Rng& rng) {
  const auto w = weights.values();
  const double total = weights.total();
  if (!(total > 0.0)) throw ArgumentError("operator weights must have a positive sum");
  const double target = rng.unit() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    acc += w[i];
    if (target < acc) return static_cast<OpTag>(i);
  }
  // Rounding can leave target == total; fall back to the last positive weight.
  for (std::size_t i = w.size(); i-- > 0;) {
    if (w[i] > 0.0) return static_cast<OpTag>(i);
  }
  return OpTag::None;
}

namespace {
template <typename T, std::size_t N>
T pick(const std::array<T, N>& palette, Rng& rng) {
  return palette[rng.below(N)];
}
}  // namespace

Operator sample_operator(const OperatorWeightTable& weights, Rng& rng) {
  Operator op{sample_operator_tag(weights, rng), {}};
  if (tag_uses_kernel(op.tag)) {
    op.params.kernel = pick(kKernelPalette, rng);
    op.params.dilation = pick(kDilationPalette, rng);
  } else if (tag_uses_window(op.tag)) {
    op.params.window = pick(kWindowPalette, rng);
  } else if (op.tag == OpTag::Dropout) {
    op.params.rate = pick(kDropoutPalette, rng);
  }
  return op;
}

MutationResult mutate(const GraphModel& model, const OperatorWeightTable& weights, Rng& rng,
                      int max_retries, double growth_probability) {
  require_valid(model);
  if (max_retries < 1) throw ArgumentError("max_retries must be >= 1");

  MutationResult result{model, OpTag::None, {0, 0}, false};
  if (growth_probability > 0.0 && rng.bernoulli(growth_probability)) {
    result.model = model.with_vertex_before_sink();
    result.grew = true;
  }
  const GraphModel& base = result.model;
  const auto n = static_cast<std::uint64_t>(base.vertex_count());

  for (int attempt = 0; attempt < max_retries; ++attempt) {
    const int i = static_cast<int>(rng.below(n - 1));
    const int j = i + 1 + static_cast<int>(rng.below(n - 1 - static_cast<std::uint64_t>(i)));
    const Operator op = sample_operator(weights, rng);
    if (op == base.edge(i, j)) continue;
    GraphModel candidate = base.with_edge(i, j, op);
    if (!validate(candidate).valid) continue;
    result.model = std::move(candidate);
    result.chosen_op = op.tag;
    result.edge = {i, j};
    return result;
  }
  throw MutationFailed("no valid mutation found within " + std::to_string(max_retries) +
                       " attempts");
}

SeedPool build_seed_pool(const MutationConfig& config, TensorShape input_shape,
                         const OperatorWeightTable& weights, Rng& rng) {
  config.check();
  SeedPool pool(config.pool_size);
  pool.insert(trivial_model(config.operator_count, input_shape));

  const std::size_t budget = config.pool_size * static_cast<std::size_t>(config.max_retries);
  for (std::size_t attempt = 0; attempt < budget && !pool.full(); ++attempt) {
    const auto& parent = pool.at(rng.below(pool.size())).model;
    try {
      auto child = mutate(parent, weights, rng, config.max_retries, config.growth_probability);
      pool.insert(std::move(child.model));
    } catch (const MutationFailed&) {
      // counts against the attempt budget
    }
  }
  if (!pool.full()) {
    throw PoolConstructionError("seed pool reached " + std::to_string(pool.size()) + " of " +
                                std::to_string(config.pool_size) + " entries");
  }
  return pool;
}

std::vector<std::size_t> tournament_select_indices(const SeedPool& pool, std::size_t k, Rng& rng) {
  if (k == 0 || k > pool.size()) {
    throw ArgumentError("tournament size " + std::to_string(k) + " invalid for pool of " +
                        std::to_string(pool.size()));
  }
  std::vector<std::size_t> remaining(pool.size());
  std::iota(remaining.begin(), remaining.end(), 0);
  std::vector<std::size_t> winners;
  winners.reserve(k);

  while (winners.size() < k) {
    const std::size_t sample = std::min(k, remaining.size());
    // Partial Fisher-Yates: the first `sample` slots become a uniform subset.
    for (std::size_t s = 0; s < sample; ++s) {
      std::swap(remaining[s], remaining[s + rng.below(remaining.size() - s)]);
    }
    std::size_t best = 0;
    for (std::size_t s = 1; s < sample; ++s) {
      const auto& cand = pool.at(remaining[s]);
      const auto& cur = pool.at(remaining[best]);
      if (cand.fitness > cur.fitness ||
          (cand.fitness == cur.fitness && cand.insertion < cur.insertion)) {
        best = s;
      }
    }
    winners.push_back(remaining[best]);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best));
  }
  return winners;
}

std::vector<GraphModel> tournament_select(const SeedPool& pool, std::size_t k, Rng& rng) {
  std::vector<GraphModel> out;
  for (auto idx : tournament_select_indices(pool, k, rng)) out.push_back(pool.at(idx).model);
  return out;
}

}  // namespace dlfuzz
