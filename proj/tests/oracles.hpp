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

// Slow reference implementations shared by the unit and acceptance tests.
#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <numeric>
#include <set>
#include <tuple>
#include <vector>

#include "dlfuzz/fusion.hpp"
#include "dlfuzz/model.hpp"
#include "dlfuzz/rng.hpp"

namespace oracle {

struct LabeledEdge {
  int from, to;
  dlfuzz::Operator op;
};

using EdgeList = std::vector<LabeledEdge>;

inline int find_root(std::vector<int>& parent, int v) {
  while (parent[v] != v) v = parent[v] = parent[parent[v]];
  return v;
}

inline bool weakly_connected(const EdgeList& edges) {
  std::vector<int> verts;
  for (const auto& e : edges) {
    verts.push_back(e.from);
    verts.push_back(e.to);
  }
  std::sort(verts.begin(), verts.end());
  verts.erase(std::unique(verts.begin(), verts.end()), verts.end());
  auto idx = [&](int v) { return static_cast<int>(std::lower_bound(verts.begin(), verts.end(), v) - verts.begin()); };
  std::vector<int> parent(verts.size());
  std::iota(parent.begin(), parent.end(), 0);
  for (const auto& e : edges) parent[find_root(parent, idx(e.from))] = find_root(parent, idx(e.to));
  const int r = find_root(parent, 0);
  for (std::size_t i = 0; i < verts.size(); ++i) {
    if (find_root(parent, static_cast<int>(i)) != r) return false;
  }
  return true;
}

// Tries every bijection between the local vertex sets.
inline bool isomorphic(const EdgeList& a, const EdgeList& b) {
  if (a.size() != b.size()) return false;
  std::set<int> va, vb;
  for (const auto& e : a) va.insert({e.from, e.to});
  for (const auto& e : b) vb.insert({e.from, e.to});
  if (va.size() != vb.size()) return false;
  std::vector<int> la(va.begin(), va.end()), lb(vb.begin(), vb.end());
  std::vector<int> perm(lb.size());
  std::iota(perm.begin(), perm.end(), 0);
  auto local = [&](const std::vector<int>& l, int v) {
    return static_cast<int>(std::find(l.begin(), l.end(), v) - l.begin());
  };
  std::multiset<std::tuple<int, int, dlfuzz::Operator>> target;
  for (const auto& e : b) target.insert({local(lb, e.from), local(lb, e.to), e.op});
  do {
    std::multiset<std::tuple<int, int, dlfuzz::Operator>> mapped;
    for (const auto& e : a) mapped.insert({perm[local(la, e.from)], perm[local(la, e.to)], e.op});
    if (mapped == target) return true;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return false;
}

inline std::vector<EdgeList> connected_subsets(const dlfuzz::GraphModel& model, int depth) {
  EdgeList all;
  for (const auto& [key, op] : model.edges()) all.push_back({key.first, key.second, op});
  std::vector<EdgeList> out;
  const int n = static_cast<int>(all.size());
  if (depth > n) return out;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (std::popcount(mask) != depth) continue;
    EdgeList subset;
    for (int i = 0; i < n; ++i) {
      if (mask & (1u << i)) subset.push_back(all[i]);
    }
    if (weakly_connected(subset)) out.push_back(subset);
  }
  return out;
}

inline std::size_t variety(const dlfuzz::GraphModel& model, int depth) {
  std::vector<EdgeList> classes;
  for (const auto& m : connected_subsets(model, depth)) {
    bool seen = false;
    for (const auto& c : classes) {
      if (isomorphic(m, c)) {
        seen = true;
        break;
      }
    }
    if (!seen) classes.push_back(m);
  }
  return classes.size();
}

inline dlfuzz::Operator random_operator(dlfuzz::Rng& rng) {
  using dlfuzz::OpTag;
  const auto& tags = dlfuzz::all_op_tags();
  const OpTag tag = tags[1 + rng.below(tags.size() - 1)];
  dlfuzz::Operator op = dlfuzz::Operator::with_defaults(tag);
  if (dlfuzz::tag_uses_kernel(tag)) {
    op.params.kernel = dlfuzz::kKernelPalette[rng.below(dlfuzz::kKernelPalette.size())];
    op.params.dilation = dlfuzz::kDilationPalette[rng.below(dlfuzz::kDilationPalette.size())];
  }
  if (dlfuzz::tag_uses_window(tag)) {
    op.params.window = dlfuzz::kWindowPalette[rng.below(dlfuzz::kWindowPalette.size())];
  }
  if (tag == OpTag::Dropout) op.params.rate = dlfuzz::kDropoutPalette[rng.below(dlfuzz::kDropoutPalette.size())];
  return op;
}

// Chain through every vertex plus random chords; labels come from a small
// pool of three when `narrow` is set.
inline dlfuzz::GraphModel random_model(dlfuzz::Rng& rng, int max_edges, bool narrow,
                                       dlfuzz::TensorShape shape = {1, 2, 4, 4}) {
  const int n = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_edges)));
  std::vector<dlfuzz::Operator> pool;
  for (int i = 0; i < 3; ++i) pool.push_back(random_operator(rng));
  auto label = [&] { return narrow ? pool[rng.below(pool.size())] : random_operator(rng); };
  dlfuzz::EdgeMap edges;
  for (int v = 0; v + 1 < n; ++v) edges[{v, v + 1}] = label();
  const int extra = static_cast<int>(rng.below(static_cast<std::uint64_t>(max_edges - (n - 1)) + 1));
  for (int t = 0; t < extra * 4 && static_cast<int>(edges.size()) < max_edges; ++t) {
    const int i = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    if (i < j && !edges.count({i, j})) edges[{i, j}] = label();
  }
  return dlfuzz::GraphModel(n, shape, edges);
}

struct Critic {
  std::vector<double> sigma, conflict, info, weights;
  std::vector<std::vector<double>> z;  // normalized rows
  std::vector<double> fitness;
};

// Plain loops over the rows; x = (performance, variety, 1/time).
inline Critic critic(const std::vector<std::array<double, 3>>& rows) {
  const std::size_t m = rows.size();
  std::vector<std::vector<double>> x(m, std::vector<double>(3));
  for (std::size_t i = 0; i < m; ++i) {
    x[i][0] = rows[i][0];
    x[i][1] = rows[i][1];
    x[i][2] = 1.0 / rows[i][2];
  }
  Critic c;
  c.z = x;
  for (int k = 0; k < 3; ++k) {
    double ss = 0;
    for (std::size_t i = 0; i < m; ++i) ss += x[i][k] * x[i][k];
    const double norm = std::sqrt(ss);
    for (std::size_t i = 0; i < m; ++i) c.z[i][k] = norm == 0 ? 0.0 : x[i][k] / norm;
  }
  std::vector<double> mean(3, 0.0);
  for (int k = 0; k < 3; ++k) {
    for (std::size_t i = 0; i < m; ++i) mean[k] += c.z[i][k];
    mean[k] /= static_cast<double>(m);
    double var = 0;
    for (std::size_t i = 0; i < m; ++i) var += (c.z[i][k] - mean[k]) * (c.z[i][k] - mean[k]);
    c.sigma.push_back(std::sqrt(var / static_cast<double>(m - 1)));
  }
  auto r = [&](int a, int b) {
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < m; ++i) {
      sab += (c.z[i][a] - mean[a]) * (c.z[i][b] - mean[b]);
      saa += (c.z[i][a] - mean[a]) * (c.z[i][a] - mean[a]);
      sbb += (c.z[i][b] - mean[b]) * (c.z[i][b] - mean[b]);
    }
    if (saa == 0 || sbb == 0) return 0.0;
    return sab / std::sqrt(saa * sbb);
  };
  for (int k = 0; k < 3; ++k) {
    double f = 0;
    for (int l = 0; l < 3; ++l) {
      if (l != k) f += 1.0 - r(k, l);
    }
    c.conflict.push_back(f);
    c.info.push_back(c.sigma[k] * f);
  }
  const double total = c.info[0] + c.info[1] + c.info[2];
  for (int k = 0; k < 3; ++k) c.weights.push_back(total == 0 ? 1.0 / 3.0 : c.info[k] / total);
  for (std::size_t i = 0; i < m; ++i) {
    c.fitness.push_back(c.weights[0] * c.z[i][0] + c.weights[1] * c.z[i][1] + c.weights[2] * c.z[i][2]);
  }
  return c;
}

}  // namespace oracle
