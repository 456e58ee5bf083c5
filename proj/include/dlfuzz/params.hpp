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
#include <functional>

#include "dlfuzz/model.hpp"

namespace dlfuzz {

/// What a generated operator parameter is used for.
enum class ParamRole : std::uint32_t {
  ConvWeight = 1,
  DepthwiseWeight = 2,
  DenseWeight = 3,
  BatchNormMean = 4,
  BatchNormVariance = 5,
  BatchNormScale = 6,
  BatchNormShift = 7,
  PReluSlope = 8,
};

struct ParameterRequest {
  EdgeKey edge{0, 0};
  OpTag tag = OpTag::None;
  ParamRole role = ParamRole::ConvWeight;
  std::uint64_t index = 0;   // position within the parameter tensor
  std::uint32_t fan_in = 1;  // summed inputs per output, for weight scaling
};

/// Final f32 value of one operator parameter. Every backend (and every
/// adapter) must produce the same value for the same request.
using ParameterSource = std::function<float(const ParameterRequest&)>;

/// Counter-based uniform draw in [-1, 1) keyed by (seed, edge, tag, role, index).
/// The result has 24 significant bits, so it is exact in f32.
float counter_uniform(std::uint64_t param_seed, const ParameterRequest& request);

/// Default scaled parameter for a request:
///   conv / depthwise / dense weights  u / sqrt(fan_in)
///   batch-norm mean 0.1u, variance 1 + 0.5u, scale 1 + 0.25u, shift 0.1u
///   PReLU slope 0.25 + 0.05u
float seeded_parameter(std::uint64_t param_seed, const ParameterRequest& request);

/// Source bound to one seed.
ParameterSource seeded_parameters(std::uint64_t param_seed);

/// Every parameter equals `value`; a test hook for hand-checkable kernels.
ParameterSource constant_parameters(float value);

}  // namespace dlfuzz
