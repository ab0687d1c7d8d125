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

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pixrf/graph_ir.hpp"
#include "pixrf/tensor.hpp"
#include "pixrf/tensor_io.hpp"

namespace pixrf {

/// Parameters keyed by node id, then by parameter name. Container tensors are
/// named "<node_id>.<param>", with param one of weight, bias, running_mean,
/// running_var (the usual framework state-dict naming).
class WeightStore {
 public:
  WeightStore() = default;
  explicit WeightStore(std::span<const NamedTensor> tensors);

  bool has(std::string_view node_id, std::string_view param) const;
  const Tensor& get(std::string_view node_id, std::string_view param) const;  // throws MissingWeights
  void set(const std::string& node_id, const std::string& param, Tensor t);

  std::size_t node_count() const noexcept { return params_.size(); }
  std::size_t tensor_count() const noexcept;
  std::vector<NamedTensor> to_named() const;

 private:
  std::map<std::string, std::map<std::string, Tensor, std::less<>>, std::less<>> params_;
};

WeightStore load_weights(std::span<const std::byte> bytes);
WeightStore load_weights(const std::filesystem::path& path);

/// Throws MissingWeights or ShapeMismatch if any parameterized node lacks
/// a compatible tensor.
void validate_weights(const GraphIR& g, const WeightStore& w);

/// Output of node \p upto for a single (C,H,W) input. Summation order is
/// fixed, so repeated calls are bit-identical.
Tensor forward(const GraphIR& g, const WeightStore& w, const Tensor& x, std::string_view upto);

std::vector<Tensor> forward_batch(const GraphIR& g, const WeightStore& w, std::span<const Tensor> xs,
                                  std::string_view upto);

/// Bundles a sorted graph with its weights so repeated forwards skip validation.
class Network {
 public:
  Network(GraphIR graph, WeightStore weights);

  const GraphIR& graph() const noexcept { return graph_; }
  const WeightStore& weights() const noexcept { return weights_; }

  Tensor run(const Tensor& x, std::string_view upto) const;

 private:
  GraphIR graph_;
  WeightStore weights_;
};

}  // namespace pixrf
