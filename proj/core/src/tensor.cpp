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

#include "pixrf/tensor.hpp"

#include <cstring>
#include <sstream>

#include "pixrf/error.hpp"

namespace pixrf {

std::int64_t num_elements(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ')';
  return os.str();
}

Tensor::Tensor(Shape dims, float fill)
    : dims_(std::move(dims)),
      data_(static_cast<std::size_t>(num_elements(dims_)), fill) {}

Tensor::Tensor(Shape dims, std::vector<float> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
  if (num_elements(dims_) != static_cast<std::int64_t>(data_.size())) {
    throw Error(ErrorKind::ShapeMismatch,
                "tensor dims " + shape_to_string(dims_) + " do not match " +
                    std::to_string(data_.size()) + " values");
  }
}

Tensor Tensor::reshaped(Shape dims) const {
  return Tensor(std::move(dims), data_);
}

bool bit_equal(const Tensor& a, const Tensor& b) {
  if (a.dims() != b.dims()) return false;
  auto da = a.data();
  auto db = b.data();
  return std::memcmp(da.data(), db.data(), da.size_bytes()) == 0;
}

}  // namespace pixrf
