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

#include "dlfuzz/variety.hpp"

#include <algorithm>
#include <bit>
#include <numeric>
#include <set>
#include <unordered_set>

namespace dlfuzz {

namespace {

// Above this many active edges the depth-2 case skips the general expansion
// and pairs up the edges incident to each vertex directly.
constexpr std::size_t kDirectPairThreshold = 5000;

constexpr int kMaxMotifVertices = 8;

struct LineGraph {
  std::vector<EdgeKey> edges;
  std::vector<std::vector<std::size_t>> incident;  // per vertex

  explicit LineGraph(const GraphModel& model) : incident(model.vertex_count()) {
    for (const auto& [key, op] : model.edges()) {
      incident[key.first].push_back(edges.size());
      incident[key.second].push_back(edges.size());
      edges.push_back(key);
    }
  }

  bool adjacent(std::size_t a, std::size_t b) const {
    const auto& x = edges[a];
    const auto& y = edges[b];
    return x.first == y.first || x.first == y.second || x.second == y.first ||
           x.second == y.second;
  }

  template <typename F>
  void for_each_neighbor(std::size_t e, F&& f) const {
    const auto [from, to] = edges[e];
    for (auto n : incident[from]) {
      if (n != e) f(n);
    }
    for (auto n : incident[to]) {
      if (n != e) f(n);
    }
  }
};

// Edge-set variant of the ESU enumeration: every connected set is grown from
// its smallest edge index, and candidates enter the extension set only if
// they are exclusive neighbours of the newest member, so each set appears once.
class ConnectedSetEnumerator {
 public:
  ConnectedSetEnumerator(const LineGraph& graph, std::size_t depth,
                         const std::function<void(std::span<const std::size_t>)>& visit)
      : graph_(graph), depth_(depth), visit_(visit) {}

  void run() {
    for (std::size_t root = 0; root < graph_.edges.size(); ++root) {
      subset_.assign(1, root);
      std::vector<std::size_t> extension;
      graph_.for_each_neighbor(root, [&](std::size_t n) {
        if (n > root) extension.push_back(n);
      });
      dedupe(extension);
      extend(extension, root);
    }
  }

 private:
  static void dedupe(std::vector<std::size_t>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }

  bool in_neighbourhood_of_subset(std::size_t e) const {
    for (auto s : subset_) {
      if (s == e || graph_.adjacent(s, e)) return true;
    }
    return false;
  }

  void extend(std::vector<std::size_t> extension, std::size_t root) {
    if (subset_.size() == depth_) {
      visit_(subset_);
      return;
    }
    while (!extension.empty()) {
      const std::size_t w = extension.back();
      extension.pop_back();
      std::vector<std::size_t> next = extension;
      graph_.for_each_neighbor(w, [&](std::size_t n) {
        if (n > root && !in_neighbourhood_of_subset(n)) next.push_back(n);
      });
      dedupe(next);
      subset_.push_back(w);
      extend(std::move(next), root);
      subset_.pop_back();
    }
  }

  const LineGraph& graph_;
  std::size_t depth_;
  const std::function<void(std::span<const std::size_t>)>& visit_;
  std::vector<std::size_t> subset_;
};

}  // namespace

void for_each_connected_edge_set(const GraphModel& model, int depth,
                                 const std::function<void(std::span<const std::size_t>)>& visit) {
  require_valid(model);
  if (depth < 1) throw ArgumentError("motif depth must be >= 1");
  if (static_cast<std::size_t>(depth) > model.active_edge_count()) return;

  const LineGraph graph(model);
  if (depth == 1) {
    for (std::size_t e = 0; e < graph.edges.size(); ++e) {
      const std::size_t one[1] = {e};
      visit(one);
    }
    return;
  }
  if (depth == 2 && graph.edges.size() > kDirectPairThreshold) {
    // Two distinct edges share at most one vertex, so each pair is seen once.
    for (const auto& inc : graph.incident) {
      for (std::size_t a = 0; a < inc.size(); ++a) {
        for (std::size_t b = a + 1; b < inc.size(); ++b) {
          const std::size_t pair[2] = {std::min(inc[a], inc[b]), std::max(inc[a], inc[b])};
          visit(pair);
        }
      }
    }
    return;
  }
  ConnectedSetEnumerator(graph, static_cast<std::size_t>(depth), visit).run();
}

std::vector<Motif> enumerate_motifs(const GraphModel& model, int depth) {
  std::vector<std::pair<EdgeKey, Operator>> edges(model.edges().begin(), model.edges().end());
  std::vector<Motif> motifs;
  for_each_connected_edge_set(model, depth, [&](std::span<const std::size_t> subset) {
    Motif m;
    for (auto idx : subset) m.edges.push_back({edges[idx].first.first, edges[idx].first.second,
                                               edges[idx].second});
    std::sort(m.edges.begin(), m.edges.end());
    motifs.push_back(std::move(m));
  });
  return motifs;
}

namespace {

void append_label(std::string& out, const Operator& op) {
  out.push_back(static_cast<char>(op.tag));
  out.push_back(static_cast<char>(op.params.kernel));
  out.push_back(static_cast<char>(op.params.dilation));
  out.push_back(static_cast<char>(op.params.window));
  const auto bits = std::bit_cast<std::uint64_t>(op.params.rate);
  for (int i = 7; i >= 0; --i) out.push_back(static_cast<char>(bits >> (8 * i)));
}

}  // namespace

MotifCode canonical_motif_code(const Motif& motif) {
  std::vector<int> vertices;
  for (const auto& e : motif.edges) {
    vertices.push_back(e.from);
    vertices.push_back(e.to);
  }
  std::sort(vertices.begin(), vertices.end());
  vertices.erase(std::unique(vertices.begin(), vertices.end()), vertices.end());
  if (vertices.size() > kMaxMotifVertices) {
    throw ArgumentError("motif spans " + std::to_string(vertices.size()) +
                        " vertices; canonicalization supports at most 8");
  }

  struct LocalEdge {
    int from, to;
    const Operator* op;
  };
  std::vector<LocalEdge> local;
  for (const auto& e : motif.edges) {
    auto idx = [&](int v) {
      return static_cast<int>(std::lower_bound(vertices.begin(), vertices.end(), v) -
                              vertices.begin());
    };
    local.push_back({idx(e.from), idx(e.to), &e.op});
  }

  std::vector<int> perm(vertices.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::tuple<int, int, const Operator*>> mapped(local.size());
  std::string best;
  bool first = true;
  do {
    for (std::size_t i = 0; i < local.size(); ++i) {
      mapped[i] = {perm[local[i].from], perm[local[i].to], local[i].op};
    }
    std::sort(mapped.begin(), mapped.end(), [](const auto& a, const auto& b) {
      if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) < std::get<0>(b);
      if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) < std::get<1>(b);
      return *std::get<2>(a) < *std::get<2>(b);
    });
    std::string code;
    code.push_back(static_cast<char>(vertices.size()));
    for (const auto& [from, to, op] : mapped) {
      code.push_back(static_cast<char>(from));
      code.push_back(static_cast<char>(to));
      append_label(code, *op);
    }
    if (first || code < best) {
      best = std::move(code);
      first = false;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return MotifCode{std::move(best)};
}

std::size_t variety_degree(const GraphModel& model, int depth) {
  std::vector<std::pair<EdgeKey, Operator>> edges(model.edges().begin(), model.edges().end());
  std::unordered_set<std::string> codes;
  Motif scratch;
  for_each_connected_edge_set(model, depth, [&](std::span<const std::size_t> subset) {
    scratch.edges.clear();
    for (auto idx : subset) {
      scratch.edges.push_back({edges[idx].first.first, edges[idx].first.second, edges[idx].second});
    }
    codes.insert(canonical_motif_code(scratch).bytes);
  });
  return codes.size();
}

}  // namespace dlfuzz
