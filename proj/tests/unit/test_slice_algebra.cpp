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

#include <doctest.h>

#include "pixrf/error.hpp"
#include "pixrf/slice_algebra.hpp"
#include "test_support.hpp"

using namespace pixrf;
using pixrf::testing::error_kind;
using pixrf::testing::lattice_points;

namespace {

bool no_contained(const SliceSet& s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (i != j && s.rects()[i].contains(s.rects()[j])) return false;
    }
  }
  return true;
}

// Two boxes fuse iff they agree on every axis but one and overlap or touch there.
bool no_fusable(const SliceSet& s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = i + 1; j < s.size(); ++j) {
      const auto& a = s.rects()[i].slices;
      const auto& b = s.rects()[j].slices;
      int differing = 0;
      bool touching = true;
      for (std::size_t d = 0; d < a.size(); ++d) {
        if (a[d] == b[d]) continue;
        ++differing;
        touching = a[d].lo <= b[d].hi + 1 && b[d].lo <= a[d].hi + 1;
      }
      if (differing == 1 && touching) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("merge examples") {
  CHECK(merge(SliceSet{HyperRect{{1, 3}, {1, 5}}, HyperRect{{4, 6}, {1, 5}}}) == SliceSet{HyperRect{{1, 6}, {1, 5}}});
  CHECK(merge(SliceSet{HyperRect{{1, 5}, {1, 5}}, HyperRect{{2, 3}, {2, 3}}}) == SliceSet{HyperRect{{1, 5}, {1, 5}}});
  // Not fusable: differ along both axes.
  auto diag = merge(SliceSet{HyperRect{{0, 1}, {0, 1}}, HyperRect{{2, 3}, {2, 3}}});
  CHECK(diag.size() == 2);
  CHECK(merge(SliceSet{}).empty());
  CHECK(error_kind([] { merge(SliceSet{HyperRect{{0, 1}}, HyperRect{{0, 1}, {0, 1}}}); }) == ErrorKind::DimMismatch);
}

TEST_CASE("merge of 50 random rects preserves covered points") {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 20; ++t) {
    auto s = testing::random_slice_set(rng, 50, 2, 16, 6);
    auto m = merge(s);
    CHECK(lattice_points(m) == lattice_points(s));
    CHECK(no_contained(m));
    CHECK(no_fusable(m));
  }
}

TEST_CASE("union_area examples") {
  CHECK(union_area(SliceSet{HyperRect{{0, 3}, {0, 3}}}) == 16);
  CHECK(union_area(SliceSet{HyperRect{{1, 4}, {1, 4}}, HyperRect{{3, 6}, {3, 6}}}) == 28);
  CHECK(union_area(SliceSet{}) == 0);
  std::mt19937_64 rng(2);
  for (int t = 0; t < 50; ++t) {
    auto s = testing::random_slice_set(rng, 20, 2 + t % 2, 20, 10);
    CHECK(union_area(s) == static_cast<std::int64_t>(lattice_points(s).size()));
  }
}

TEST_CASE("merge is idempotent and coverage-preserving in 1 to 3 dimensions") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 200; ++t) {
    const std::size_t dims = 1 + t % 3;
    auto s = testing::random_slice_set(rng, 1 + t % 30, dims, 32, 12);
    auto m = merge(s);
    CHECK(merge(m) == m);
    CHECK(union_area(m) == union_area(s));
    CHECK(lattice_points(m) == lattice_points(s));
  }
}

TEST_CASE("take_window") {
  // Kernel 5, stride 1, pad 2 at (2,2) 0-indexed -> rows/cols [0,4] (1-indexed [1,5]).
  auto w = kernel_window(5, 1, 2);
  std::vector<AxisWindow> ws{w, w};
  std::vector<Interval> bounds{{0, 31}, {0, 31}};
  CHECK(take_window(SliceSet{HyperRect{{2, 2}, {2, 2}}}, ws, bounds) == SliceSet{HyperRect{{0, 4}, {0, 4}}});
  // Corner position clipped: window [-2, 2] -> [0, 2].
  CHECK(take_window(SliceSet{HyperRect{{0, 0}, {0, 0}}}, ws, bounds) == SliceSet{HyperRect{{0, 2}, {0, 2}}});
  // Pad 0 at the far corner of a 5-wide map: nothing clipped on the near side.
  auto w0 = kernel_window(3, 1, 0);
  std::vector<AxisWindow> ws0{w0, w0};
  std::vector<Interval> b5{{0, 4}, {0, 4}};
  CHECK(take_window(SliceSet{HyperRect{{2, 2}, {2, 2}}}, ws0, b5) == SliceSet{HyperRect{{2, 4}, {2, 4}}});
  // Fully outside.
  std::vector<AxisWindow> far{{1, 100, 1}, {1, 100, 1}};
  CHECK(error_kind([&] { take_window(SliceSet{HyperRect{{0, 0}, {0, 0}}}, far, b5); }) == ErrorKind::EmptyAfterClip);
  // Dilation 2, kernel 3: extent 5.
  CHECK(kernel_window(3, 2, 1, 2).extent == 5);
}

TEST_CASE("composed stride-1 windows equal one window with the composed kernel") {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<std::int64_t> k(1, 5), p(0, 2), pos(0, 9);
  for (int t = 0; t < 100; ++t) {
    auto k1 = k(rng), k2 = k(rng), p1 = p(rng), p2 = p(rng);
    std::vector<Interval> bounds{{0, 19}, {0, 19}};
    auto w1 = kernel_window(k1, 1, p1), w2 = kernel_window(k2, 1, p2);
    auto wc = kernel_window(k1 + k2 - 1, 1, p1 + p2);
    SliceSet s{HyperRect{{pos(rng), pos(rng)}, {pos(rng), pos(rng)}}};
    if (s.rects()[0].slices[0].hi < s.rects()[0].slices[0].lo || s.rects()[0].slices[1].hi < s.rects()[0].slices[1].lo) {
      continue;
    }
    // Intermediate bounds are left wide so only the final clip matters.
    std::vector<Interval> wide{{-100, 100}, {-100, 100}};
    std::vector<AxisWindow> a{w2, w2}, b{w1, w1}, c{wc, wc};
    auto two = take_window(take_window(s, a, wide), b, bounds);
    auto one = take_window(s, c, bounds);
    CHECK(lattice_points(two) == lattice_points(one));
  }
}

TEST_CASE("projection and JSON") {
  SliceSet s{HyperRect{{0, 2}, {1, 3}, {4, 4}}, HyperRect{{0, 2}, {1, 3}, {5, 6}}};
  std::vector<std::size_t> axes{1, 2};
  CHECK(project(s, axes) == SliceSet{HyperRect{{1, 3}, {4, 6}}});
  auto m = merge(s);
  CHECK(slice_set_from_json(slice_set_to_json(m)) == m);
  CHECK(slice_set_to_json(SliceSet{HyperRect{{0, 3}, {2, 5}}}) == "[[[0,3],[2,5]]]");
  CHECK(error_kind([] { slice_set_from_json("[[[3,1]]]"); }) == ErrorKind::MalformedInput);
  CHECK(to_string(SliceSet{HyperRect{{0, 3}, {2, 5}}}) == "{[0,3]x[2,5]}");
}
