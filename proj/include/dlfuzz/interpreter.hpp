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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dlfuzz/model.hpp"
#include "dlfuzz/params.hpp"
#include "dlfuzz/rng.hpp"
#include "dlfuzz/tensor.hpp"

namespace dlfuzz {

enum class Summation { Forward, Pairwise };

/// Arithmetic choices that distinguish one native interpreter from another.
struct Numerics {
  Summation summation = Summation::Forward;
  bool softmax_subtract_max = true;
};

/// Sum of terms, either left-to-right or as a balanced binary tree.
template <typename Scalar>
Scalar accumulate(std::span<const Scalar> terms, Summation order) {
  if (order == Summation::Forward || terms.size() <= 2) {
    Scalar s = 0;
    for (Scalar t : terms) s += t;
    return s;
  }
  const std::size_t half = terms.size() / 2;
  return accumulate(terms.first(half), order) + accumulate(terms.subspan(half), order);
}

/// Thrown by the interpreter when the wall-clock deadline passes.
class ExecutionTimeout : public Error {
 public:
  ExecutionTimeout() : Error("timeout") {}
};

namespace ops {

constexpr float kBatchNormEpsilon = 1e-3f;

template <typename Scalar>
void elementwise(Tensor<Scalar>& t, auto&& f) {
  t.data = t.data.unaryExpr(f);
}

/// SAME-padded, stride-1 convolution; output channels equal input channels.
/// Depthwise convolution applies one k x k filter per channel.
template <typename Scalar>
Tensor<Scalar> conv2d(const Tensor<Scalar>& x, std::span<const Scalar> weights, int kernel,
                      int dilation, bool depthwise, Summation order) {
  const auto& s = x.shape;
  const int C = static_cast<int>(s.channel), H = static_cast<int>(s.height),
            W = static_cast<int>(s.width);
  const int pad = (kernel - 1) * dilation / 2;
  Tensor<Scalar> y(s);
  std::vector<Scalar> terms;
  terms.reserve(static_cast<std::size_t>(C * kernel * kernel));
  for (std::uint32_t n = 0; n < s.batch; ++n) {
    for (int co = 0; co < C; ++co) {
      for (int h = 0; h < H; ++h) {
        for (int w = 0; w < W; ++w) {
          terms.clear();
          const int ci_begin = depthwise ? co : 0;
          const int ci_end = depthwise ? co + 1 : C;
          for (int ci = ci_begin; ci < ci_end; ++ci) {
            for (int kh = 0; kh < kernel; ++kh) {
              const int ih = h + kh * dilation - pad;
              if (ih < 0 || ih >= H) continue;
              for (int kw = 0; kw < kernel; ++kw) {
                const int iw = w + kw * dilation - pad;
                if (iw < 0 || iw >= W) continue;
                const std::size_t widx =
                    depthwise ? static_cast<std::size_t>((co * kernel + kh) * kernel + kw)
                              : static_cast<std::size_t>(((co * C + ci) * kernel + kh) * kernel + kw);
                terms.push_back(weights[widx] * x(n, ci, ih, iw));
              }
            }
          }
          y(n, co, h, w) = accumulate<Scalar>(terms, order);
        }
      }
    }
  }
  return y;
}

/// Per-position channel mixing (a 1x1 convolution); weights are C x C row-major.
template <typename Scalar>
Tensor<Scalar> dense1x1(const Tensor<Scalar>& x, std::span<const Scalar> weights, Summation order) {
  const auto& s = x.shape;
  const std::uint32_t C = s.channel;
  Tensor<Scalar> y(s);
  std::vector<Scalar> terms(C);
  for (std::uint32_t n = 0; n < s.batch; ++n) {
    for (std::uint32_t h = 0; h < s.height; ++h) {
      for (std::uint32_t w = 0; w < s.width; ++w) {
        for (std::uint32_t co = 0; co < C; ++co) {
          for (std::uint32_t ci = 0; ci < C; ++ci) terms[ci] = weights[co * C + ci] * x(n, ci, h, w);
          y(n, co, h, w) = accumulate<Scalar>(terms, order);
        }
      }
    }
  }
  return y;
}

template <typename Scalar>
Tensor<Scalar> batch_norm(const Tensor<Scalar>& x, std::span<const Scalar> mean,
                          std::span<const Scalar> variance, std::span<const Scalar> scale,
                          std::span<const Scalar> shift) {
  const auto& s = x.shape;
  Tensor<Scalar> y(s);
  for (std::uint32_t n = 0; n < s.batch; ++n) {
    for (std::uint32_t c = 0; c < s.channel; ++c) {
      const Scalar inv = Scalar(1) / std::sqrt(variance[c] + Scalar(kBatchNormEpsilon));
      for (std::uint32_t h = 0; h < s.height; ++h) {
        for (std::uint32_t w = 0; w < s.width; ++w) {
          y(n, c, h, w) = (x(n, c, h, w) - mean[c]) * inv * scale[c] + shift[c];
        }
      }
    }
  }
  return y;
}

template <typename Scalar>
Tensor<Scalar> prelu(const Tensor<Scalar>& x, std::span<const Scalar> slope) {
  const auto& s = x.shape;
  Tensor<Scalar> y(s);
  for (std::uint32_t n = 0; n < s.batch; ++n)
    for (std::uint32_t c = 0; c < s.channel; ++c)
      for (std::uint32_t h = 0; h < s.height; ++h)
        for (std::uint32_t w = 0; w < s.width; ++w) {
          const Scalar v = x(n, c, h, w);
          y(n, c, h, w) = v > 0 ? v : slope[c] * v;
        }
  return y;
}

/// Softmax across the channel axis at every (n, h, w).
template <typename Scalar>
Tensor<Scalar> softmax_channels(const Tensor<Scalar>& x, bool subtract_max, Summation order) {
  const auto& s = x.shape;
  Tensor<Scalar> y(s);
  std::vector<Scalar> e(s.channel);
  for (std::uint32_t n = 0; n < s.batch; ++n) {
    for (std::uint32_t h = 0; h < s.height; ++h) {
      for (std::uint32_t w = 0; w < s.width; ++w) {
        Scalar shift = 0;
        if (subtract_max) {
          shift = x(n, 0, h, w);
          for (std::uint32_t c = 1; c < s.channel; ++c) shift = std::max(shift, x(n, c, h, w));
        }
        for (std::uint32_t c = 0; c < s.channel; ++c) e[c] = std::exp(x(n, c, h, w) - shift);
        const Scalar total = accumulate<Scalar>(e, order);
        for (std::uint32_t c = 0; c < s.channel; ++c) y(n, c, h, w) = e[c] / total;
      }
    }
  }
  return y;
}

/// Stride-1 SAME pooling; padded positions are excluded from max and mean.
template <typename Scalar>
Tensor<Scalar> pool2d(const Tensor<Scalar>& x, int window, bool average, Summation order) {
  const auto& s = x.shape;
  const int H = static_cast<int>(s.height), W = static_cast<int>(s.width);
  const int before = (window - 1) / 2;
  Tensor<Scalar> y(s);
  std::vector<Scalar> terms;
  for (std::uint32_t n = 0; n < s.batch; ++n) {
    for (std::uint32_t c = 0; c < s.channel; ++c) {
      for (int h = 0; h < H; ++h) {
        for (int w = 0; w < W; ++w) {
          terms.clear();
          for (int dh = 0; dh < window; ++dh) {
            const int ih = h - before + dh;
            if (ih < 0 || ih >= H) continue;
            for (int dw = 0; dw < window; ++dw) {
              const int iw = w - before + dw;
              if (iw < 0 || iw >= W) continue;
              terms.push_back(x(n, c, ih, iw));
            }
          }
          Scalar v;
          if (average) {
            v = accumulate<Scalar>(terms, order) / static_cast<Scalar>(terms.size());
          } else {
            v = terms.front();
            for (Scalar t : terms) {
              if (std::isnan(t) || t > v) v = t;
            }
          }
          y(n, c, h, w) = v;
        }
      }
    }
  }
  return y;
}

}  // namespace ops

struct DropoutNoise {
  std::uint64_t seed = 0;
};

struct InterpreterOptions {
  Numerics numerics;
  ParameterSource parameters;                       // required
  std::optional<DropoutNoise> dropout_noise;        // inference-mode identity when empty
  std::optional<std::chrono::steady_clock::time_point> deadline;
};

/// Estimated multiply-add count of one operator application.
double operator_cost(const Operator& op, const TensorShape& shape);

namespace detail {

template <typename Scalar>
std::vector<Scalar> draw(const InterpreterOptions& opts, EdgeKey edge, OpTag tag, ParamRole role,
                         std::size_t count, std::uint32_t fan_in) {
  std::vector<Scalar> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = static_cast<Scalar>(opts.parameters(ParameterRequest{edge, tag, role, i, fan_in}));
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> apply(const Operator& op, EdgeKey edge, const Tensor<Scalar>& x,
                     const InterpreterOptions& opts) {
  const auto C = x.shape.channel;
  const auto order = opts.numerics.summation;
  switch (op.tag) {
    case OpTag::None:
      throw ArgumentError("None edge cannot be executed");
    case OpTag::Identity:
      return x;
    case OpTag::Conv2D: {
      const std::uint32_t k = op.params.kernel;
      auto w = draw<Scalar>(opts, edge, op.tag, ParamRole::ConvWeight, C * C * k * k, C * k * k);
      return ops::conv2d<Scalar>(x, w, static_cast<int>(k), op.params.dilation, false, order);
    }
    case OpTag::DepthwiseConv2D: {
      const std::uint32_t k = op.params.kernel;
      auto w = draw<Scalar>(opts, edge, op.tag, ParamRole::DepthwiseWeight, C * k * k, k * k);
      return ops::conv2d<Scalar>(x, w, static_cast<int>(k), op.params.dilation, true, order);
    }
    case OpTag::Dense1x1: {
      auto w = draw<Scalar>(opts, edge, op.tag, ParamRole::DenseWeight, C * C, C);
      return ops::dense1x1<Scalar>(x, w, order);
    }
    case OpTag::BatchNorm: {
      auto mean = draw<Scalar>(opts, edge, op.tag, ParamRole::BatchNormMean, C, 1);
      auto var = draw<Scalar>(opts, edge, op.tag, ParamRole::BatchNormVariance, C, 1);
      auto scale = draw<Scalar>(opts, edge, op.tag, ParamRole::BatchNormScale, C, 1);
      auto shift = draw<Scalar>(opts, edge, op.tag, ParamRole::BatchNormShift, C, 1);
      return ops::batch_norm<Scalar>(x, mean, var, scale, shift);
    }
    case OpTag::ReLU: {
      Tensor<Scalar> y = x;
      ops::elementwise(y, [](Scalar v) { return v > 0 ? v : Scalar(0); });
      return y;
    }
    case OpTag::PReLU: {
      auto slope = draw<Scalar>(opts, edge, op.tag, ParamRole::PReluSlope, C, 1);
      return ops::prelu<Scalar>(x, slope);
    }
    case OpTag::Sigmoid: {
      Tensor<Scalar> y = x;
      ops::elementwise(y, [](Scalar v) { return Scalar(1) / (Scalar(1) + std::exp(-v)); });
      return y;
    }
    case OpTag::Tanh: {
      Tensor<Scalar> y = x;
      ops::elementwise(y, [](Scalar v) { return std::tanh(v); });
      return y;
    }
    case OpTag::Softmax:
      return ops::softmax_channels<Scalar>(x, opts.numerics.softmax_subtract_max, order);
    case OpTag::MaxPool2D:
      return ops::pool2d<Scalar>(x, op.params.window, false, order);
    case OpTag::AvgPool2D:
      return ops::pool2d<Scalar>(x, op.params.window, true, order);
    case OpTag::Dropout: {
      if (!opts.dropout_noise || op.params.rate <= 0.0) return x;
      // Training-style masking, keyed by the noise seed and the edge.
      Rng rng(splitmix64(opts.dropout_noise->seed ^
                         (static_cast<std::uint64_t>(edge.first) << 32 |
                          static_cast<std::uint32_t>(edge.second))));
      const Scalar keep_scale = static_cast<Scalar>(1.0 / (1.0 - op.params.rate));
      Tensor<Scalar> y = x;
      for (Eigen::Index i = 0; i < y.size(); ++i) {
        y.data(i) = rng.bernoulli(op.params.rate) ? Scalar(0) : y.data(i) * keep_scale;
      }
      return y;
    }
  }
  throw ArgumentError("unknown operator tag");
}

}  // namespace detail

/// Evaluates the model vertex by vertex in index order. A vertex holds the
/// sum of its incoming operator outputs; the sink's tensor is returned.
/// Throws ExecutionTimeout past the deadline.
template <typename Scalar>
Tensor<Scalar> interpret(const GraphModel& model, const Tensor<Scalar>& input,
                         const InterpreterOptions& opts) {
  const int n = model.vertex_count();
  std::vector<std::vector<std::pair<EdgeKey, const Operator*>>> incoming(n);
  std::vector<int> remaining_uses(n, 0);
  for (const auto& [key, op] : model.edges()) {
    incoming[key.second].push_back({key, &op});
    ++remaining_uses[key.first];
  }

  std::vector<std::optional<Tensor<Scalar>>> values(n);
  values[0] = input;
  std::vector<Tensor<Scalar>> parts;
  std::vector<Scalar> terms;
  for (int v = 1; v < n; ++v) {
    if (incoming[v].empty()) continue;
    parts.clear();
    for (const auto& [key, op] : incoming[v]) {
      if (opts.deadline && std::chrono::steady_clock::now() > *opts.deadline) {
        throw ExecutionTimeout();
      }
      const auto& src = values[key.first];
      if (!src) throw ArgumentError("vertex " + std::to_string(key.first) + " has no value");
      parts.push_back(detail::apply<Scalar>(*op, key, *src, opts));
      if (--remaining_uses[key.first] == 0 && key.first != 0) values[key.first].reset();
    }
    if (parts.size() == 1) {
      values[v] = std::move(parts.front());
      continue;
    }
    Tensor<Scalar> sum(parts.front().shape);
    terms.resize(parts.size());
    for (Eigen::Index i = 0; i < sum.size(); ++i) {
      for (std::size_t p = 0; p < parts.size(); ++p) terms[p] = parts[p].data(i);
      sum.data(i) = accumulate<Scalar>(terms, opts.numerics.summation);
    }
    values[v] = std::move(sum);
  }
  if (!values[n - 1]) throw ArgumentError("sink vertex was never computed");
  return std::move(*values[n - 1]);
}

/// Estimated cost of evaluating the whole model, in multiply-adds.
double model_cost(const GraphModel& model);

}  // namespace dlfuzz
