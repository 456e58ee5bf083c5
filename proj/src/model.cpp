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

#include "dlfuzz/model.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace dlfuzz {

namespace {

constexpr std::array<std::string_view, kOpTagCount> kOpNames{
    "None",      "Identity", "Conv2D",  "DepthwiseConv2D", "Dense1x1",  "BatchNorm", "ReLU",
    "PReLU",     "Sigmoid",  "Tanh",    "Softmax",         "MaxPool2D", "AvgPool2D", "Dropout",
};

template <typename T, std::size_t N>
bool in_palette(const std::array<T, N>& palette, T value) {
  return std::find(palette.begin(), palette.end(), value) != palette.end();
}

}  // namespace

std::uint64_t TensorShape::element_count() const {
  std::uint64_t n = 1;
  for (std::uint64_t d : {batch, channel, height, width}) {
    if (d != 0 && n > std::numeric_limits<std::uint64_t>::max() / d) {
      throw ArgumentError("tensor shape element count overflows 64 bits");
    }
    n *= d;
  }
  return n;
}

bool TensorShape::is_valid() const noexcept {
  return batch >= 1 && channel >= 1 && height >= 1 && width >= 1;
}

std::string TensorShape::to_string() const {
  return std::to_string(batch) + "x" + std::to_string(channel) + "x" + std::to_string(height) +
         "x" + std::to_string(width);
}

const std::array<OpTag, kOpTagCount>& all_op_tags() {
  static const std::array<OpTag, kOpTagCount> tags = [] {
    std::array<OpTag, kOpTagCount> t{};
    for (std::size_t i = 0; i < kOpTagCount; ++i) t[i] = static_cast<OpTag>(i);
    return t;
  }();
  return tags;
}

std::string_view op_name(OpTag tag) { return kOpNames.at(static_cast<std::size_t>(tag)); }

std::optional<OpTag> op_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kOpTagCount; ++i) {
    if (kOpNames[i] == name) return static_cast<OpTag>(i);
  }
  return std::nullopt;
}

bool tag_uses_kernel(OpTag tag) { return tag == OpTag::Conv2D || tag == OpTag::DepthwiseConv2D; }
bool tag_uses_window(OpTag tag) { return tag == OpTag::MaxPool2D || tag == OpTag::AvgPool2D; }

Operator Operator::with_defaults(OpTag tag) {
  Operator op{tag, {}};
  if (tag_uses_kernel(tag)) {
    op.params.kernel = kKernelPalette[0];
    op.params.dilation = kDilationPalette[0];
  } else if (tag_uses_window(tag)) {
    op.params.window = kWindowPalette[0];
  }
  return op;
}

GraphModel::GraphModel(int vertex_count, TensorShape input_shape, EdgeMap edges)
    : vertex_count_(vertex_count), input_shape_(input_shape), edges_(std::move(edges)) {
  std::erase_if(edges_, [](const auto& kv) { return kv.second.is_none(); });
}

Operator GraphModel::edge(int from, int to) const {
  auto it = edges_.find({from, to});
  return it == edges_.end() ? Operator::none() : it->second;
}

GraphModel GraphModel::with_edge(int from, int to, Operator op) const {
  if (from < 0 || to >= vertex_count_ || from >= to) {
    throw ArgumentError("edge (" + std::to_string(from) + "," + std::to_string(to) +
                        ") is not an ordered pair of this model");
  }
  GraphModel out = *this;
  if (op.is_none()) {
    out.edges_.erase({from, to});
  } else {
    out.edges_[{from, to}] = op;
  }
  return out;
}

GraphModel GraphModel::with_vertex_before_sink() const {
  EdgeMap edges = edges_;
  edges[{sink(), sink() + 1}] = Operator{OpTag::Identity, {}};
  return GraphModel(vertex_count_ + 1, input_shape_, std::move(edges));
}

bool ValidationResult::has(std::string_view rule) const {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const Violation& v) { return v.rule == rule; });
}

ValidationResult validate(const GraphModel& model) {
  ValidationResult result;
  auto fail = [&](std::string rule, std::string detail) {
    if (!result.has(rule)) result.violations.push_back({std::move(rule), std::move(detail)});
  };

  const int n = model.vertex_count();
  if (n < 2) fail("vertex-count", "vertex_count must be at least 2, got " + std::to_string(n));
  const auto& shape = model.input_shape();
  if (!shape.is_valid()) {
    fail("input-shape", "every dimension must be >= 1, got " + shape.to_string());
  } else {
    try {
      (void)shape.element_count();
    } catch (const ArgumentError& e) {
      fail("input-shape", e.what());
    }
  }

  std::vector<EdgeKey> active;
  for (const auto& [key, op] : model.edges()) {
    const auto [from, to] = key;
    const std::string where = "(" + std::to_string(from) + "," + std::to_string(to) + ")";
    if (from < 0 || to < 0 || from >= n || to >= n) {
      fail("vertex-range", "edge " + where + " references a vertex outside 0.." +
                               std::to_string(n - 1));
    } else if (from >= to) {
      fail("edge-direction", "edge " + where + " must go from a lower to a higher index");
    } else {
      active.push_back(key);
    }
  }

  if (active.empty()) {
    fail("no-active-edge", "model has no non-None edge");
    result.valid = result.violations.empty();
    return result;
  }
  if (n < 2) {
    result.valid = false;
    return result;
  }

  std::vector<bool> is_active(n, false), forward(n, false), backward(n, false);
  for (auto [from, to] : active) is_active[from] = is_active[to] = true;

  // Edges are index-ordered, so one sweep in each direction computes reachability.
  forward[0] = true;
  for (auto [from, to] : active) {
    if (forward[from]) forward[to] = true;
  }
  backward[n - 1] = true;
  for (auto it = active.rbegin(); it != active.rend(); ++it) {
    if (backward[it->second]) backward[it->first] = true;
  }

  if (!forward[n - 1]) fail("sink-not-reached", "no active path from vertex 0 to the sink");
  for (int v = 0; v < n; ++v) {
    if (is_active[v] && !(forward[v] && backward[v])) {
      fail("dangling-vertex", "vertex " + std::to_string(v) +
                                  " is not on a path from the source to the sink");
    }
  }

  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  for (auto [from, to] : active) parent[find(from)] = find(to);
  int root = -1;
  for (int v = 0; v < n; ++v) {
    if (!is_active[v]) continue;
    if (root < 0) {
      root = find(v);
    } else if (find(v) != root) {
      fail("disconnected", "active subgraph is not weakly connected");
      break;
    }
  }

  result.valid = result.violations.empty();
  return result;
}

void require_valid(const GraphModel& model) {
  auto result = validate(model);
  if (!result.valid) throw ValidationError(std::move(result.violations));
}

Digest canonical_hash(const GraphModel& model) {
  require_valid(model);
  ByteWriter w;
  w.str("dlfuzz-model-v1");
  w.u32(static_cast<std::uint32_t>(model.vertex_count()));
  const auto& s = model.input_shape();
  for (auto d : {s.batch, s.channel, s.height, s.width}) w.u32(d);
  w.u32(static_cast<std::uint32_t>(model.active_edge_count()));
  for (const auto& [key, op] : model.edges()) {
    w.u32(static_cast<std::uint32_t>(key.first));
    w.u32(static_cast<std::uint32_t>(key.second));
    w.u8(static_cast<std::uint8_t>(op.tag));
    w.u8(op.params.kernel);
    w.u8(op.params.dilation);
    w.u8(op.params.window);
    w.f64(op.params.rate);
  }
  return w.digest();
}

GraphModel strip_params(const GraphModel& model) {
  EdgeMap edges;
  for (const auto& [key, op] : model.edges()) edges.emplace(key, Operator{op.tag, {}});
  return GraphModel(model.vertex_count(), model.input_shape(), std::move(edges));
}

nlohmann::ordered_json model_to_json(const GraphModel& model) {
  nlohmann::ordered_json j;
  j["version"] = 1;
  j["vertex_count"] = model.vertex_count();
  const auto& s = model.input_shape();
  j["input_shape"] = {s.batch, s.channel, s.height, s.width};
  auto edges = nlohmann::ordered_json::array();
  for (const auto& [key, op] : model.edges()) {
    nlohmann::ordered_json e;
    e["from"] = key.first;
    e["to"] = key.second;
    e["op"] = std::string(op_name(op.tag));
    auto params = nlohmann::ordered_json::object();
    if (tag_uses_kernel(op.tag)) {
      params["kernel"] = op.params.kernel;
      params["dilation"] = op.params.dilation;
    } else if (tag_uses_window(op.tag)) {
      params["window"] = op.params.window;
    } else if (op.tag == OpTag::Dropout) {
      params["rate"] = op.params.rate;
    }
    e["params"] = std::move(params);
    edges.push_back(std::move(e));
  }
  j["edges"] = std::move(edges);
  return j;
}

namespace {

const nlohmann::json& member(const nlohmann::json& obj, const std::string& key,
                             const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(path, "missing field");
  return *it;
}

std::int64_t as_int(const nlohmann::json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ParseError(path, "expected an integer");
  return v.get<std::int64_t>();
}

std::uint8_t palette_int(const nlohmann::json& params, const std::string& key,
                         const std::string& path, std::span<const std::uint8_t> palette) {
  const std::int64_t v = as_int(member(params, key, path), path);
  if (std::find(palette.begin(), palette.end(), v) == palette.end()) {
    throw ParseError(path, "value " + std::to_string(v) + " is not in the parameter palette");
  }
  return static_cast<std::uint8_t>(v);
}

}  // namespace

GraphModel model_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("$", "expected a JSON object");
  if (as_int(member(j, "version", "version"), "version") != 1) {
    throw ParseError("version", "unsupported model format version");
  }
  const std::int64_t vc = as_int(member(j, "vertex_count", "vertex_count"), "vertex_count");
  if (vc < 0 || vc > std::numeric_limits<int>::max()) {
    throw ParseError("vertex_count", "out of range");
  }

  const auto& shape_json = member(j, "input_shape", "input_shape");
  if (!shape_json.is_array() || shape_json.size() != 4) {
    throw ParseError("input_shape", "expected [b,c,h,w]");
  }
  std::array<std::uint32_t, 4> dims{};
  for (std::size_t i = 0; i < 4; ++i) {
    const std::string path = "input_shape[" + std::to_string(i) + "]";
    const std::int64_t d = as_int(shape_json[i], path);
    if (d < 0 || d > std::numeric_limits<std::uint32_t>::max()) throw ParseError(path, "out of range");
    dims[i] = static_cast<std::uint32_t>(d);
  }

  const auto& edges_json = member(j, "edges", "edges");
  if (!edges_json.is_array()) throw ParseError("edges", "expected an array");
  EdgeMap edges;
  for (std::size_t i = 0; i < edges_json.size(); ++i) {
    const std::string base = "edges[" + std::to_string(i) + "]";
    const auto& e = edges_json[i];
    if (!e.is_object()) throw ParseError(base, "expected an object");
    const std::int64_t from = as_int(member(e, "from", base + ".from"), base + ".from");
    const std::int64_t to = as_int(member(e, "to", base + ".to"), base + ".to");
    if (from < std::numeric_limits<int>::min() || from > std::numeric_limits<int>::max()) {
      throw ParseError(base + ".from", "out of range");
    }
    if (to < std::numeric_limits<int>::min() || to > std::numeric_limits<int>::max()) {
      throw ParseError(base + ".to", "out of range");
    }
    const auto& op_json = member(e, "op", base + ".op");
    if (!op_json.is_string()) throw ParseError(base + ".op", "expected a string");
    auto tag = op_from_name(op_json.get<std::string>());
    if (!tag) throw ParseError(base + ".op", "unknown operator '" + op_json.get<std::string>() + "'");

    Operator op{*tag, {}};
    const std::string ppath = base + ".params";
    nlohmann::json params = nlohmann::json::object();
    if (auto it = e.find("params"); it != e.end()) {
      if (!it->is_object()) throw ParseError(ppath, "expected an object");
      params = *it;
    }
    if (tag_uses_kernel(op.tag)) {
      op.params.kernel = palette_int(params, "kernel", ppath + ".kernel", kKernelPalette);
      op.params.dilation = palette_int(params, "dilation", ppath + ".dilation", kDilationPalette);
    } else if (tag_uses_window(op.tag)) {
      op.params.window = palette_int(params, "window", ppath + ".window", kWindowPalette);
    } else if (op.tag == OpTag::Dropout) {
      const auto& r = member(params, "rate", ppath + ".rate");
      if (!r.is_number()) throw ParseError(ppath + ".rate", "expected a number");
      op.params.rate = r.get<double>();
      if (!in_palette(kDropoutPalette, op.params.rate)) {
        throw ParseError(ppath + ".rate", "value is not in the parameter palette");
      }
    }
    if (!edges.emplace(EdgeKey{static_cast<int>(from), static_cast<int>(to)}, op).second) {
      throw ParseError(base, "duplicate edge");
    }
  }

  GraphModel model(static_cast<int>(vc), TensorShape{dims[0], dims[1], dims[2], dims[3]},
                   std::move(edges));
  require_valid(model);
  return model;
}

std::string encode_model(const GraphModel& model) {
  require_valid(model);
  return model_to_json(model).dump();
}

GraphModel decode_model(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("$", e.what());
  }
  return model_from_json(j);
}

}  // namespace dlfuzz
