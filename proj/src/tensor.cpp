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

#include "dlfuzz/tensor.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace dlfuzz {

namespace {
constexpr std::uint16_t kTensorFileVersion = 1;
constexpr std::size_t kHeaderSize = 4 + 2 + 1 + 16;

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t offset() const noexcept { return pos_; }

  std::uint64_t read(int width, const char* what) {
    if (pos_ + static_cast<std::size_t>(width) > bytes_.size()) {
      throw InputError(std::string("tensor file truncated while reading ") + what, pos_);
    }
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= std::uint64_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += static_cast<std::size_t>(width);
    return v;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};
}  // namespace

bool bitwise_equal(const TensorF64& a, const TensorF64& b) {
  if (a.shape != b.shape || a.size() != b.size()) return false;
  return std::memcmp(a.data.data(), b.data.data(), sizeof(double) * a.size()) == 0;
}

TensorF64 random_tensor(TensorShape shape, Rng& rng) {
  TensorF64 t(shape);
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    const float u = static_cast<float>(rng.below(1u << 24)) * 0x1.0p-23f - 1.0f;
    t.data(i) = u;
  }
  return t;
}

Digest tensor_digest(const TensorF64& t) {
  ByteWriter w;
  for (auto d : {t.shape.batch, t.shape.channel, t.shape.height, t.shape.width}) w.u32(d);
  for (Eigen::Index i = 0; i < t.size(); ++i) w.f64(t.data(i));
  return w.digest();
}

std::vector<std::uint8_t> encode_tensor_file(const TensorF64& t, DType dtype) {
  ByteWriter w;
  for (char c : {'T', 'N', 'S', 'R'}) w.u8(static_cast<std::uint8_t>(c));
  w.u16(kTensorFileVersion);
  w.u8(static_cast<std::uint8_t>(dtype));
  for (auto d : {t.shape.batch, t.shape.channel, t.shape.height, t.shape.width}) w.u32(d);
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    if (dtype == DType::F32) {
      w.f32(static_cast<float>(t.data(i)));
    } else {
      w.f64(t.data(i));
    }
  }
  return w.release();
}

TensorFile decode_tensor_file(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "TNSR", 4) != 0) {
    throw InputError("tensor file does not start with magic \"TNSR\"", 0);
  }
  (void)r.read(4, "magic");
  const std::size_t version_at = r.offset();
  if (r.read(2, "version") != kTensorFileVersion) {
    throw InputError("unsupported tensor file version", version_at);
  }
  const std::size_t dtype_at = r.offset();
  const auto dtype_raw = r.read(1, "dtype");
  if (dtype_raw > 1) throw InputError("unknown tensor dtype " + std::to_string(dtype_raw), dtype_at);
  const auto dtype = static_cast<DType>(dtype_raw);

  std::array<std::uint32_t, 4> dims{};
  for (auto& d : dims) {
    const std::size_t at = r.offset();
    d = static_cast<std::uint32_t>(r.read(4, "dimension"));
    if (d == 0) throw InputError("tensor dimension must be positive", at);
  }
  const TensorShape shape{dims[0], dims[1], dims[2], dims[3]};
  std::uint64_t count = 0;
  try {
    count = shape.element_count();
  } catch (const ArgumentError&) {
    throw InputError("tensor element count overflows", kHeaderSize - 16);
  }
  const std::uint64_t width = dtype == DType::F32 ? 4 : 8;
  const std::uint64_t payload = bytes.size() - kHeaderSize;
  if (count > payload / width) {
    throw InputError("tensor payload truncated: expected " + std::to_string(count * width) +
                         " bytes, found " + std::to_string(payload),
                     bytes.size());
  }
  if (payload != count * width) {
    throw InputError("trailing bytes after tensor payload", kHeaderSize + count * width);
  }

  TensorFile out{TensorF64(shape), dtype};
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto bits = r.read(static_cast<int>(width), "payload");
    out.tensor.data(static_cast<Eigen::Index>(i)) =
        dtype == DType::F32 ? static_cast<double>(std::bit_cast<float>(static_cast<std::uint32_t>(bits)))
                            : std::bit_cast<double>(bits);
  }
  return out;
}

void write_tensor_file(const std::filesystem::path& path, const TensorF64& t, DType dtype) {
  const auto bytes = encode_tensor_file(t, dtype);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing " + path.string());
}

TensorFile read_tensor_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open tensor file " + path.string(), 0);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_tensor_file(bytes);
}

}  // namespace dlfuzz
