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

#include <doctest.h>

#include <cstring>
#include <filesystem>

#include "dlfuzz/error.hpp"
#include "dlfuzz/tensor.hpp"

using namespace dlfuzz;

TEST_CASE("random tensor") {
  Rng a(1), b(1);
  auto t = random_tensor({1, 3, 32, 32}, a);
  CHECK(t.size() == 3072);
  CHECK((t.data >= -1.0).all());
  CHECK((t.data <= 1.0).all());
  CHECK(bitwise_equal(t, random_tensor({1, 3, 32, 32}, b)));
  CHECK((t.data.cast<float>().cast<double>() == t.data).all());
}

TEST_CASE("tensor indexing is NCHW row-major") {
  TensorF64 t({2, 3, 4, 5});
  t(1, 2, 3, 4) = 7.0;
  CHECK(t.data(t.size() - 1) == 7.0);
  CHECK(t.index(0, 1, 0, 0) == 20);
  CHECK_THROWS_AS(TensorF64({1, 1, 2, 2}, TensorF64::Storage::Zero(3)), ArgumentError);
}

TEST_CASE("bitwise equality sees NaN payloads and signed zero") {
  TensorF64 a({1, 1, 1, 2}), b({1, 1, 1, 2});
  a.data << 0.0, std::nan("");
  b.data << 0.0, std::nan("");
  CHECK(bitwise_equal(a, b));
  CHECK_FALSE(a == b);
  b.data(0) = -0.0;
  CHECK_FALSE(bitwise_equal(a, b));
}

TEST_CASE("tensor file round trip") {
  Rng rng(6);
  auto t = random_tensor({2, 3, 4, 5}, rng);
  for (DType d : {DType::F64, DType::F32}) {
    auto bytes = encode_tensor_file(t, d);
    CHECK(bytes.size() == 23 + t.size() * (d == DType::F64 ? 8 : 4));
    CHECK(std::memcmp(bytes.data(), "TNSR", 4) == 0);
    auto back = decode_tensor_file(bytes);
    CHECK(back.dtype == d);
    CHECK(bitwise_equal(back.tensor, t));
  }
  auto path = std::filesystem::temp_directory_path() / "dlfuzz_tensor_roundtrip.tnsr";
  write_tensor_file(path, t);
  CHECK(bitwise_equal(read_tensor_file(path).tensor, t));
  std::filesystem::remove(path);
}

TEST_CASE("tensor file errors carry byte offsets") {
  Rng rng(6);
  auto bytes = encode_tensor_file(random_tensor({1, 1, 2, 2}, rng));
  auto offset_of = [](std::vector<std::uint8_t> b) -> std::uint64_t {
    try {
      decode_tensor_file(b);
    } catch (const InputError& e) {
      return e.offset();
    }
    return ~0ull;
  };
  auto bad_magic = bytes;
  bad_magic[1] = 'X';
  CHECK(offset_of(bad_magic) == 0);
  auto bad_version = bytes;
  bad_version[4] = 9;
  CHECK(offset_of(bad_version) == 4);
  auto bad_dtype = bytes;
  bad_dtype[6] = 7;
  CHECK(offset_of(bad_dtype) == 6);
  auto zero_dim = bytes;
  zero_dim[7] = 0;
  CHECK(offset_of(zero_dim) == 7);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  CHECK(offset_of(truncated) == truncated.size());
  CHECK(offset_of(std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + 10)) == 7);
  CHECK_THROWS_AS(read_tensor_file("/nonexistent/file.tnsr"), InputError);
}
