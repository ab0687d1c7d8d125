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

#pragma once

// NTSR tensor container.
//
//   magic "NTSR" | version u32 = 1 | count u32
//   per tensor: name_len u16 | name (UTF-8) | dtype u8 (0 = f32) | ndim u8
//               | ndim x u32 dims | row-major f32 payload
//
// All integers and floats are little-endian.

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pixrf/tensor.hpp"

namespace pixrf {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

std::vector<NamedTensor> read_container(std::span<const std::byte> bytes);
std::vector<std::byte> write_container(std::span<const NamedTensor> tensors);

std::vector<NamedTensor> load_container(const std::filesystem::path& path);
void save_container(const std::filesystem::path& path,
                    std::span<const NamedTensor> tensors);

std::vector<std::byte> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes);

}  // namespace pixrf
