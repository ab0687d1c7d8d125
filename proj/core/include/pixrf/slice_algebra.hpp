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

// Receptive fields as unions of axis-aligned integer boxes. Intervals are
// closed: [lo, hi] covers lo, lo+1, ..., hi.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace pixrf {

struct Interval {
  std::int64_t lo = 0;
  std::int64_t hi = 0;

  std::int64_t length() const noexcept { return hi - lo + 1; }
  bool contains(std::int64_t x) const noexcept { return lo <= x && x <= hi; }
  bool contains(const Interval& o) const noexcept { return lo <= o.lo && o.hi <= hi; }

  friend auto operator<=>(const Interval&, const Interval&) = default;
};

/// One interval per tensor dimension.
struct HyperRect {
  std::vector<Interval> slices;

  HyperRect() = default;
  HyperRect(std::initializer_list<Interval> s) : slices(s) {}
  explicit HyperRect(std::vector<Interval> s) : slices(std::move(s)) {}

  std::size_t dims() const noexcept { return slices.size(); }
  std::int64_t volume() const noexcept;
  bool contains(const HyperRect& o) const noexcept;
  bool contains_point(std::span<const std::int64_t> p) const noexcept;

  friend auto operator<=>(const HyperRect&, const HyperRect&) = default;
};

/// A set of boxes sharing one dimensionality. After merge() no box is
/// contained in another and no pair is fusable along a single axis.
class SliceSet {
 public:
  SliceSet() = default;
  SliceSet(std::initializer_list<HyperRect> rects);
  explicit SliceSet(std::vector<HyperRect> rects);

  const std::vector<HyperRect>& rects() const noexcept { return rects_; }
  bool empty() const noexcept { return rects_.empty(); }
  std::size_t size() const noexcept { return rects_.size(); }
  std::size_t dims() const noexcept { return rects_.empty() ? 0 : rects_.front().dims(); }

  bool contains_point(std::span<const std::int64_t> p) const noexcept;

  friend bool operator==(const SliceSet&, const SliceSet&) = default;

 private:
  std::vector<HyperRect> rects_;
};

/// Removes contained boxes and fuses boxes that overlap or touch along exactly
/// one axis while agreeing on every other, until nothing changes. Coverage is
/// preserved exactly. The result is sorted, so equal inputs give equal outputs.
SliceSet merge(const SliceSet& s);

/// Union of two sets followed by merge.
SliceSet unite(const SliceSet& a, const SliceSet& b);

/// Exact count of distinct lattice points covered.
std::int64_t union_area(const SliceSet& s);

/// Keeps only the listed axes of every box (e.g. {1, 2} drops the channel
/// axis of a (channel, row, col) field) and merges.
SliceSet project(const SliceSet& s, std::span<const std::size_t> axes);

/// Index window of one axis: position i maps to
/// [i*stride + offset, i*stride + offset + extent - 1].
struct AxisWindow {
  std::int64_t stride = 1;
  std::int64_t offset = 0;
  std::int64_t extent = 1;

  /// Window for output interval [lo, hi] before clipping.
  Interval map(const Interval& iv) const noexcept {
    return {iv.lo * stride + offset, iv.hi * stride + offset + extent - 1};
  }
};

/// Kernel window of a conv/pool layer along one axis.
AxisWindow kernel_window(std::int64_t kernel, std::int64_t stride, std::int64_t padding,
                         std::int64_t dilation = 1);

/// Maps every box through the per-axis windows and clips to bounds. Throws
/// EmptyAfterClip when no box survives and DimMismatch on rank disagreement.
SliceSet take_window(const SliceSet& s, std::span<const AxisWindow> windows,
                     std::span<const Interval> bounds);

std::string to_string(const SliceSet& s);

/// JSON list of boxes, each a list of [lo, hi] pairs: [[[0,3],[2,5]], ...].
std::string slice_set_to_json(const SliceSet& s);
SliceSet slice_set_from_json(const std::string& text);  // throws MalformedInput

}  // namespace pixrf
