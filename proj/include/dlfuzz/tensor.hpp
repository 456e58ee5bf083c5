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

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "dlfuzz/digest.hpp"
#include "dlfuzz/model.hpp"
#include "dlfuzz/rng.hpp"

namespace dlfuzz {

enum class DType : std::uint8_t { F32 = 0, F64 = 1 };

/// Dense row-major NCHW tensor.
template <typename Scalar>
struct Tensor {
  using Storage = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  TensorShape shape;
  Storage data;

  Tensor() = default;
  explicit Tensor(TensorShape s)
      : shape(s), data(Storage::Zero(static_cast<Eigen::Index>(s.element_count()))) {}
  Tensor(TensorShape s, Storage values) : shape(s), data(std::move(values)) {
    if (static_cast<std::uint64_t>(data.size()) != shape.element_count()) {
      throw ArgumentError("tensor data length does not match shape " + shape.to_string());
    }
  }

  Eigen::Index size() const noexcept { return data.size(); }

  Eigen::Index index(std::uint32_t n, std::uint32_t c, std::uint32_t h, std::uint32_t w) const {
    return static_cast<Eigen::Index>(((static_cast<std::uint64_t>(n) * shape.channel + c) *
                                          shape.height + h) * shape.width + w);
  }
  Scalar& operator()(std::uint32_t n, std::uint32_t c, std::uint32_t h, std::uint32_t w) {
    return data(index(n, c, h, w));
  }
  Scalar operator()(std::uint32_t n, std::uint32_t c, std::uint32_t h, std::uint32_t w) const {
    return data(index(n, c, h, w));
  }

  template <typename Other>
  Tensor<Other> cast() const {
    return Tensor<Other>(shape, data.template cast<Other>());
  }

  bool has_nan() const { return data.isNaN().any(); }

  bool operator==(const Tensor& other) const {
    return shape == other.shape && data.size() == other.data.size() &&
           (data == other.data).all();
  }
};

using TensorF32 = Tensor<float>;
using TensorF64 = Tensor<double>;

/// Bitwise equality (NaN payloads and signed zeros included).
bool bitwise_equal(const TensorF64& a, const TensorF64& b);

/// I.i.d. uniform values in [-1, 1); every value is exactly representable in f32.
TensorF64 random_tensor(TensorShape shape, Rng& rng);

/// Digest of shape and f64 payload.
Digest tensor_digest(const TensorF64& t);

struct TensorFile {
  TensorF64 tensor;
  DType dtype = DType::F64;
};

/// "TNSR" magic, u16 version, u8 dtype, four u32 dims, then the payload,
/// all little-endian.
std::vector<std::uint8_t> encode_tensor_file(const TensorF64& t, DType dtype = DType::F64);
/// Throws InputError naming the byte offset of the first problem.
TensorFile decode_tensor_file(std::span<const std::uint8_t> bytes);

void write_tensor_file(const std::filesystem::path& path, const TensorF64& t,
                       DType dtype = DType::F64);
TensorFile read_tensor_file(const std::filesystem::path& path);

}  // namespace dlfuzz
