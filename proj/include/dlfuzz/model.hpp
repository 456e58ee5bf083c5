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
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dlfuzz/digest.hpp"
#include "dlfuzz/error.hpp"

namespace dlfuzz {

/// NCHW tensor extent.
struct TensorShape {
  std::uint32_t batch = 1;
  std::uint32_t channel = 1;
  std::uint32_t height = 1;
  std::uint32_t width = 1;

  /// Product of the four dimensions; throws ArgumentError on overflow.
  std::uint64_t element_count() const;
  bool is_valid() const noexcept;
  std::string to_string() const;

  auto operator<=>(const TensorShape&) const = default;
};

enum class OpTag : std::uint8_t {
  None,
  Identity,
  Conv2D,
  DepthwiseConv2D,
  Dense1x1,
  BatchNorm,
  ReLU,
  PReLU,
  Sigmoid,
  Tanh,
  Softmax,
  MaxPool2D,
  AvgPool2D,
  Dropout,
};

inline constexpr std::size_t kOpTagCount = 14;

const std::array<OpTag, kOpTagCount>& all_op_tags();
std::string_view op_name(OpTag tag);
std::optional<OpTag> op_from_name(std::string_view name);

/// Per-tag parameters. Fields that do not apply to a tag are zero.
struct OpParams {
  std::uint8_t kernel = 0;    // Conv2D, DepthwiseConv2D: {1,3,5}
  std::uint8_t dilation = 0;  // Conv2D, DepthwiseConv2D: {1,2}
  std::uint8_t window = 0;    // MaxPool2D, AvgPool2D: {2,3}
  double rate = 0.0;          // Dropout: {0, 0.25, 0.5}

  auto operator<=>(const OpParams&) const = default;
};

inline constexpr std::array<std::uint8_t, 3> kKernelPalette{1, 3, 5};
inline constexpr std::array<std::uint8_t, 2> kDilationPalette{1, 2};
inline constexpr std::array<std::uint8_t, 2> kWindowPalette{2, 3};
inline constexpr std::array<double, 3> kDropoutPalette{0.0, 0.25, 0.5};

/// An edge label: operator tag plus its parameter record.
struct Operator {
  OpTag tag = OpTag::None;
  OpParams params{};

  static Operator none() { return {}; }
  /// Operator with the first palette entry for each parameter the tag uses.
  static Operator with_defaults(OpTag tag);

  bool is_none() const noexcept { return tag == OpTag::None; }
  auto operator<=>(const Operator&) const = default;
};

bool tag_uses_kernel(OpTag tag);
bool tag_uses_window(OpTag tag);

/// Ordered vertex pair (from, to).
using EdgeKey = std::pair<int, int>;
using EdgeMap = std::map<EdgeKey, Operator>;

/// Labeled DAG over tensor vertices.
///
/// The graph is conceptually total over pairs i < j; pairs absent from the
/// edge map carry the None label. Construction does not validate, so decoded
/// or hand-built models must go through validate() before use.
class GraphModel {
 public:
  GraphModel(int vertex_count, TensorShape input_shape, EdgeMap edges = {});

  int vertex_count() const noexcept { return vertex_count_; }
  int source() const noexcept { return 0; }
  int sink() const noexcept { return vertex_count_ - 1; }
  const TensorShape& input_shape() const noexcept { return input_shape_; }
  const EdgeMap& edges() const noexcept { return edges_; }
  std::size_t active_edge_count() const noexcept { return edges_.size(); }

  /// Label of (from, to); None when absent.
  Operator edge(int from, int to) const;

  /// Copy with (from, to) relabeled. A None label removes the edge.
  GraphModel with_edge(int from, int to, Operator op) const;

  /// Copy with one vertex inserted just before the sink: the old sink keeps
  /// its index and incoming edges, a new sink is appended, and the two are
  /// joined by an Identity edge.
  GraphModel with_vertex_before_sink() const;

  bool operator==(const GraphModel&) const = default;

 private:
  int vertex_count_;
  TensorShape input_shape_;
  EdgeMap edges_;
};

struct ValidationResult {
  bool valid = true;
  std::vector<Violation> violations;

  bool has(std::string_view rule) const;
};

/// Checks every structural rule; each failed rule is reported once.
ValidationResult validate(const GraphModel& model);

/// Throws ValidationError when the model is invalid.
void require_valid(const GraphModel& model);

/// Structural digest over vertex count, shape and the sorted active edges.
Digest canonical_hash(const GraphModel& model);

/// Same model with every parameter record cleared (used for bug deduplication).
GraphModel strip_params(const GraphModel& model);

nlohmann::ordered_json model_to_json(const GraphModel& model);
GraphModel model_from_json(const nlohmann::json& j);

/// Model JSON text, edges sorted by (from, to).
std::string encode_model(const GraphModel& model);

/// Parses model JSON. Throws ParseError for malformed input and
/// ValidationError when the graph breaks a structural rule.
GraphModel decode_model(std::string_view text);

}  // namespace dlfuzz
