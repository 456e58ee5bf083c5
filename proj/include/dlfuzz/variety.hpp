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

#include <compare>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dlfuzz/model.hpp"

namespace dlfuzz {

inline constexpr int kDefaultVarietyDepth = 2;

struct MotifEdge {
  int from = 0;
  int to = 0;
  Operator op;

  auto operator<=>(const MotifEdge&) const = default;
};

/// Weakly connected, edge-induced subgraph with exactly `depth` edges.
struct Motif {
  std::vector<MotifEdge> edges;

  int depth() const noexcept { return static_cast<int>(edges.size()); }
};

/// Canonical form of a motif: equal for isomorphic labeled directed motifs.
struct MotifCode {
  std::string bytes;

  auto operator<=>(const MotifCode&) const = default;
};

/// Every connected edge subset of size `depth`, each exactly once.
/// Returns an empty list when depth exceeds the active edge count.
std::vector<Motif> enumerate_motifs(const GraphModel& model, int depth);

/// Visits connected edge subsets without materializing Motif values.
/// `visit` receives indices into the model's active edges in (from, to) order.
void for_each_connected_edge_set(const GraphModel& model, int depth,
                                 const std::function<void(std::span<const std::size_t>)>& visit);

/// Minimum encoding over all local vertex relabelings. Motifs spanning more
/// than 8 local vertices are rejected with ArgumentError.
MotifCode canonical_motif_code(const Motif& motif);

/// Number of pairwise non-isomorphic motifs of the given depth.
std::size_t variety_degree(const GraphModel& model, int depth = kDefaultVarietyDepth);

}  // namespace dlfuzz
