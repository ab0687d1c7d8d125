// Copyright 2026 The pixrf Authors
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

#include "pixrf/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <unordered_set>

#include "pixrf/error.hpp"

namespace pixrf {
namespace {

static_assert(std::endian::native == std::endian::little,
              "NTSR I/O assumes a little-endian host");

constexpr char kMagic[4] = {'N', 'T', 'S', 'R'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint8_t kDtypeF32 = 0;

class Reader {
 public:
  explicit Reader(std::span<const std::byte> bytes) : bytes_(bytes) {}

  template <typename T>
  T read() {
    T value;
    copy_out(&value, sizeof(T));
    return value;
  }

  void copy_out(void* dst, std::size_t n) {
    if (bytes_.size() - pos_ < n) {
      throw Error(ErrorKind::TruncatedFile,
                  "need " + std::to_string(n) + " bytes at offset " +
                      std::to_string(pos_) + ", have " +
                      std::to_string(bytes_.size() - pos_));
    }
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }

 private:
  std::span<const std::byte> bytes_;
  std::size_t pos_ = 0;
};

template <typename T>
void append(std::vector<std::byte>& out, const T& value) {
  const auto* p = reinterpret_cast<const std::byte*>(&value);
  out.insert(out.end(), p, p + sizeof(T));
}

}  // namespace

std::vector<NamedTensor> read_container(std::span<const std::byte> bytes) {
  Reader in(bytes);
  char magic[4];
  if (bytes.size() < 4) throw Error(ErrorKind::BadMagic, "file shorter than magic");
  in.copy_out(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw Error(ErrorKind::BadMagic, "expected NTSR magic");
  }
  auto version = in.read<std::uint32_t>();
  if (version != kVersion) {
    throw Error(ErrorKind::BadMagic, "unsupported version " + std::to_string(version));
  }
  auto count = in.read<std::uint32_t>();

  std::vector<NamedTensor> out;
  std::unordered_set<std::string> seen;
  for (std::uint32_t t = 0; t < count; ++t) {
    auto name_len = in.read<std::uint16_t>();
    std::string name(name_len, '\0');
    in.copy_out(name.data(), name_len);
    auto dtype = in.read<std::uint8_t>();
    if (dtype != kDtypeF32) {
      throw Error(ErrorKind::BadMagic,
                  "tensor '" + name + "' has unsupported dtype " + std::to_string(dtype));
    }
    auto ndim = in.read<std::uint8_t>();
    Shape dims(ndim);
    for (auto& d : dims) d = in.read<std::uint32_t>();
    std::vector<float> data(static_cast<std::size_t>(num_elements(dims)));
    in.copy_out(data.data(), data.size() * sizeof(float));
    if (!seen.insert(name).second) {
      throw Error(ErrorKind::DuplicateName, "tensor '" + name + "' appears twice");
    }
    out.push_back({std::move(name), Tensor(std::move(dims), std::move(data))});
  }
  return out;
}

std::vector<std::byte> write_container(std::span<const NamedTensor> tensors) {
  std::vector<std::byte> out;
  for (char c : kMagic) out.push_back(static_cast<std::byte>(c));
  append(out, kVersion);
  append(out, static_cast<std::uint32_t>(tensors.size()));
  std::unordered_set<std::string> seen;
  for (const auto& [name, tensor] : tensors) {
    if (!seen.insert(name).second) {
      throw Error(ErrorKind::DuplicateName, "tensor '" + name + "' appears twice");
    }
    if (name.size() > 0xFFFF) throw Error(ErrorKind::InvalidArgument, "tensor name too long");
    if (tensor.rank() > 0xFF) throw Error(ErrorKind::InvalidArgument, "tensor rank too large");
    append(out, static_cast<std::uint16_t>(name.size()));
    for (char c : name) out.push_back(static_cast<std::byte>(c));
    append(out, kDtypeF32);
    append(out, static_cast<std::uint8_t>(tensor.rank()));
    for (auto d : tensor.dims()) append(out, static_cast<std::uint32_t>(d));
    auto data = tensor.data();
    const auto* p = reinterpret_cast<const std::byte*>(data.data());
    out.insert(out.end(), p, p + data.size_bytes());
  }
  return out;
}

std::vector<std::byte> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  in.seekg(0, std::ios::end);
  std::vector<std::byte> bytes(static_cast<std::size_t>(in.tellg()));
  in.seekg(0);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<NamedTensor> load_container(const std::filesystem::path& path) {
  return read_container(read_file(path));
}

void save_container(const std::filesystem::path& path, std::span<const NamedTensor> tensors) {
  write_file(path, write_container(tensors));
}

}  // namespace pixrf
