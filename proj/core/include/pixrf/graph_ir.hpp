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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pixrf/tensor.hpp"

namespace pixrf {

enum class OpKind {
  Input,
  Conv2d,
  MaxPool2d,
  AvgPool2d,
  AdaptiveAvgPool2d,
  Relu,
  Sigmoid,
  BatchNorm2d,
  Linear,
  Add,
  Concat,
  Flatten,
  Permute,
  DropoutIdentity,
};

std::string_view to_string(OpKind op) noexcept;
std::optional<OpKind> op_from_string(std::string_view name) noexcept;

struct Extent2 {
  std::int64_t h = 1;
  std::int64_t w = 1;
  friend bool operator==(const Extent2&, const Extent2&) = default;
};

/// Union of every attribute any op accepts. Which keys are legal (and which
/// are required) depends on the op; see parse_graph.
struct NodeAttrs {
  Extent2 kernel{1, 1};
  Extent2 stride{1, 1};
  Extent2 padding{0, 0};
  Extent2 dilation{1, 1};
  std::int64_t out_channels = 0;
  std::int64_t out_features = 0;
  bool bias = true;
  bool ceil_mode = false;
  bool count_include_pad = true;
  std::int64_t axis = 0;
  std::vector<std::int64_t> order;
  Extent2 output_size{1, 1};
  double eps = 1e-5;

  friend bool operator==(const NodeAttrs&, const NodeAttrs&) = default;
};

struct Node {
  std::string id;
  OpKind op = OpKind::Input;
  NodeAttrs attrs;
  std::vector<std::string> inputs;
  /// Inferred output shape; filled in by build_graph.
  Shape shape;

  friend bool operator==(const Node&, const Node&) = default;
};

/// Validated, shape-annotated computation graph. Immutable once built.
class GraphIR {
 public:
  const std::string& name() const noexcept { return name_; }
  /// (channels, height, width)
  const Shape& input_shape() const noexcept { return input_shape_; }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  bool contains(std::string_view id) const;
  std::size_t index_of(std::string_view id) const;  // throws UnknownNode
  const Node& node(std::string_view id) const { return nodes_[index_of(id)]; }
  const Node& input_node() const { return nodes_[input_index_]; }

  friend bool operator==(const GraphIR& a, const GraphIR& b) {
    return a.name_ == b.name_ && a.input_shape_ == b.input_shape_ && a.nodes_ == b.nodes_;
  }

 private:
  friend GraphIR build_graph(std::string, Shape, std::vector<Node>);
  friend GraphIR topo_sort(const GraphIR&);

  std::string name_;
  Shape input_shape_;
  std::vector<Node> nodes_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t input_index_ = 0;

  void reindex();
};

/// Validates nodes, checks acyclicity and infers every node's shape.
/// Declaration order is preserved.
GraphIR build_graph(std::string name, Shape input_shape, std::vector<Node> nodes);

GraphIR parse_graph(std::string_view json_text);
GraphIR load_graph(const std::filesystem::path& path);
std::string serialize_graph(const GraphIR& g);

/// Kahn ordering; among ready nodes the lexicographically smallest id goes first.
GraphIR topo_sort(const GraphIR& g);
bool is_topologically_sorted(const GraphIR& g);

const Shape& output_shape(const GraphIR& g, std::string_view node_id);

/// Indices of \p target and every node it (transitively) depends on, in graph order.
std::vector<std::size_t> ancestors_of(const GraphIR& g, std::string_view target);

}  // namespace pixrf
