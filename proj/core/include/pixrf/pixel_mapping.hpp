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

// Pixel-space heat maps and localization regions for a prototype's
// similarity map: the receptive-field mapping and the bicubic upsampling
// baseline.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "pixrf/functional_rf.hpp"
#include "pixrf/protopart.hpp"
#include "pixrf/slice_algebra.hpp"
#include "pixrf/tensor.hpp"

namespace pixrf {

enum class MapMethod { Rf, Upsample };

std::string_view to_string(MapMethod m) noexcept;
MapMethod parse_map_method(std::string_view s);  // "rf" | "upsample"

struct HeatMap {
  Tensor values;  // (H, W)
  MapMethod method = MapMethod::Rf;
  std::int64_t prototype = -1;
  std::string image_id;

  std::int64_t height() const { return values.dim(0); }
  std::int64_t width() const { return values.dim(1); }
  float at(std::int64_t r, std::int64_t c) const { return values[r * values.dim(1) + c]; }
};

/// Gaussian weighting of each score over its receptive-field box, with
/// sigma = max(box height, box width) and peak 1.
struct GaussianKernelCfg {
  bool enabled = true;
};

/// Inclusive pixel box.
struct Box {
  std::int64_t r0 = 0, c0 = 0, r1 = -1, c1 = -1;

  bool empty() const noexcept { return r1 < r0 || c1 < c0; }
  std::int64_t height() const noexcept { return empty() ? 0 : r1 - r0 + 1; }
  std::int64_t width() const noexcept { return empty() ? 0 : c1 - c0 + 1; }
  std::int64_t area() const noexcept { return height() * width(); }
  bool contains(std::int64_t r, std::int64_t c) const noexcept { return r0 <= r && r <= r1 && c0 <= c && c <= c1; }

  friend bool operator==(const Box&, const Box&) = default;
};

/// Bounding box of a 2-D SliceSet; empty Box for an empty set.
Box bounding_box(const SliceSet& s);
SliceSet box_slices(const Box& b);

/// Weight of pixel (r, c) under the kernel for \p box.
double gaussian_weight(const Box& box, std::int64_t r, std::int64_t c);

/// M = 0; for each grid position, M over that position's patch field becomes
/// max(M, score * weight). Grid position (r, c) is the patch of size
/// patch_h x patch_w at (r, c) of \p embed_node. Throws GridMismatch when the
/// map's grid does not match the node.
HeatMap rf_heatmap(const RFMap& rf, std::string_view embed_node, const SimilarityMap& s, std::int64_t patch_h,
                   std::int64_t patch_w, const GaussianKernelCfg& kcfg = {});

/// Exact (row, col) pixel set the embedded patch at (row, col) depends on.
SliceSet rf_localize(const RFMap& rf, std::string_view embed_node, std::int64_t row, std::int64_t col,
                     std::int64_t patch_h = 1, std::int64_t patch_w = 1);

/// Bicubic resize with half-pixel centres and edge replication. \p a is the
/// cubic convolution coefficient (-0.5 Catmull-Rom, -0.75 in some
/// frameworks). Throws DegenerateGrid for an empty grid.
Tensor bicubic_resize(const Tensor& grid, std::int64_t out_h, std::int64_t out_w, double a = -0.5);
HeatMap upsample_heatmap(const SimilarityMap& s, std::int64_t out_h, std::int64_t out_w, double a = -0.5);

/// Smallest box around the k = ceil(percent/100 * H*W) largest values; every
/// value tied with the k-th largest is included.
Box top_percent_bbox(const Tensor& values, double percent = 5.0);
inline Box top_percent_bbox(const HeatMap& m, double percent = 5.0) { return top_percent_bbox(m.values, percent); }

/// Binary 8-bit PGM after min-max normalization (a constant map renders black).
void write_pgm(const std::filesystem::path& path, const Tensor& values);

}  // namespace pixrf
