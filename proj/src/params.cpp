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

#include "dlfuzz/params.hpp"

#include <cmath>

#include "dlfuzz/rng.hpp"

namespace dlfuzz {

float counter_uniform(std::uint64_t param_seed, const ParameterRequest& r) {
  std::uint64_t key = splitmix64(param_seed);
  key = splitmix64(key ^ (static_cast<std::uint64_t>(static_cast<std::uint32_t>(r.edge.first)) << 32 |
                          static_cast<std::uint32_t>(r.edge.second)));
  key = splitmix64(key ^ (static_cast<std::uint64_t>(r.tag) << 32 | static_cast<std::uint32_t>(r.role)));
  const std::uint64_t bits = splitmix64(key ^ r.index);
  return static_cast<float>(bits >> 40) * 0x1.0p-23f - 1.0f;
}

float seeded_parameter(std::uint64_t param_seed, const ParameterRequest& r) {
  const float u = counter_uniform(param_seed, r);
  switch (r.role) {
    case ParamRole::ConvWeight:
    case ParamRole::DepthwiseWeight:
    case ParamRole::DenseWeight:
      return u / std::sqrt(static_cast<float>(r.fan_in));
    case ParamRole::BatchNormMean:
      return 0.1f * u;
    case ParamRole::BatchNormVariance:
      return 1.0f + 0.5f * u;
    case ParamRole::BatchNormScale:
      return 1.0f + 0.25f * u;
    case ParamRole::BatchNormShift:
      return 0.1f * u;
    case ParamRole::PReluSlope:
      return 0.25f + 0.05f * u;
  }
  return u;
}

ParameterSource seeded_parameters(std::uint64_t param_seed) {
  return [param_seed](const ParameterRequest& r) { return seeded_parameter(param_seed, r); };
}

ParameterSource constant_parameters(float value) {
  return [value](const ParameterRequest&) { return value; };
}

}  // namespace dlfuzz
