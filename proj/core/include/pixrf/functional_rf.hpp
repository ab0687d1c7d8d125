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

// Exact receptive field of every element of every node of a graph.
//
// Fields are (channel, row, col) SliceSets over the input image. The channel
// slice is always the full input channel range. Identical fields are interned
// once in a FieldTable; a node stores, per run of leading-axis indices whose
// trailing-axis grids coincide, one grid of field ids. Conv/pool outputs thus
// cost one grid regardless of channel count.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pixrf/graph_ir.hpp"
#include "pixrf/slice_algebra.hpp"

namespace pixrf {

using FieldId = std::uint32_t;

/// Leading-axis range [begin, end) sharing one grid over the trailing axes.
struct FieldSegment {
  std::int64_t begin = 0;
  std::int64_t end = 0;
  std::vector<FieldId> grid;
};

struct NodeFields {
  Shape shape;
  std::vector<FieldSegment> segments;

  /// Number of elements in the trailing-axes grid of every segment.
  std::int64_t grid_size() const;
  const FieldSegment& segment_for(std::int64_t leading) const;
  FieldId at(std::int64_t flat_index) const;
};

class FieldTable {
 public:
  FieldId intern(SliceSet merged);
  const SliceSet& operator[](FieldId id) const { return fields_[id]; }
  /// Distinct (row, col) pixels covered by the field.
  std::int64_t spatial_area(FieldId id) const { return areas_[id]; }
  std::size_t size() const noexcept { return fields_.size(); }

 private:
  std::vector<SliceSet> fields_;
  std::vector<std::int64_t> areas_;
  std::unordered_multimap<std::size_t, FieldId> lookup_;
};

class RFMap {
 public:
  const Shape& input_shape() const noexcept { return input_shape_; }
  bool contains(std::string_view node_id) const;
  const NodeFields& node(std::string_view node_id) const;  // throws UnknownNode
  const FieldTable& table() const noexcept { return table_; }

  /// Field of the element at a multi-index of the node's output.
  const SliceSet& field_at(std::string_view node_id, std::span<const std::int64_t> index) const;
  FieldId field_id_at(std::string_view node_id, std::span<const std::int64_t> index) const;

 private:
  friend RFMap functional_rf(const GraphIR& g);

  Shape input_shape_;
  std::unordered_map<std::string, NodeFields> nodes_;
  FieldTable table_;
};

RFMap functional_rf(const GraphIR& g);

struct RFStats {
  Shape shape;
  double mean_pct = 0.0;
  double min_pct = 0.0;
  double max_pct = 0.0;
};

/// Mean, min and max over all output elements of covered pixels divided by
/// the image's H*W, in percent.
RFStats mean_receptive_field(const RFMap& rf, std::string_view node_id);

/// Spatial (row, col) projection of a field.
SliceSet spatial_field(const SliceSet& field);

/// Union of the fields of every element in a window of a rank-3 node:
/// all channels, rows [row, row + height), cols [col, col + width).
SliceSet window_field(const RFMap& rf, std::string_view node_id, std::int64_t row, std::int64_t col,
                      std::int64_t height = 1, std::int64_t width = 1);

}  // namespace pixrf
