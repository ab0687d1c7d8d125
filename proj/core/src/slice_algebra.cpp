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

#include "pixrf/slice_algebra.hpp"

#include <algorithm>
#include <sstream>

#include <json.hpp>

#include "pixrf/error.hpp"

namespace pixrf {

std::int64_t HyperRect::volume() const noexcept {
  std::int64_t v = 1;
  for (const auto& s : slices) v *= s.length();
  return v;
}

bool HyperRect::contains(const HyperRect& o) const noexcept {
  if (o.dims() != dims()) return false;
  for (std::size_t d = 0; d < slices.size(); ++d) {
    if (!slices[d].contains(o.slices[d])) return false;
  }
  return true;
}

bool HyperRect::contains_point(std::span<const std::int64_t> p) const noexcept {
  if (p.size() != dims()) return false;
  for (std::size_t d = 0; d < slices.size(); ++d) {
    if (!slices[d].contains(p[d])) return false;
  }
  return true;
}

SliceSet::SliceSet(std::initializer_list<HyperRect> rects) : rects_(rects) {}
SliceSet::SliceSet(std::vector<HyperRect> rects) : rects_(std::move(rects)) {}

bool SliceSet::contains_point(std::span<const std::int64_t> p) const noexcept {
  return std::any_of(rects_.begin(), rects_.end(), [&](const HyperRect& r) { return r.contains_point(p); });
}

namespace {

void check_rects(const std::vector<HyperRect>& rects) {
  for (const auto& r : rects) {
    if (r.dims() != rects.front().dims()) {
      throw Error(ErrorKind::DimMismatch, "boxes of rank " + std::to_string(rects.front().dims()) +
                                              " and " + std::to_string(r.dims()) + " in one set");
    }
    for (const auto& s : r.slices) {
      if (s.lo > s.hi) {
        throw Error(ErrorKind::InvalidArgument, "interval [" + std::to_string(s.lo) + "," + std::to_string(s.hi) + "] is empty");
      }
    }
  }
}

// Fused box if a and b agree on all axes but one, along which they overlap
// or touch.
bool try_fuse(const HyperRect& a, const HyperRect& b, HyperRect& out) {
  std::size_t differing = a.dims();
  for (std::size_t d = 0; d < a.dims(); ++d) {
    if (a.slices[d] != b.slices[d]) {
      if (differing != a.dims()) return false;
      differing = d;
    }
  }
  if (differing == a.dims()) {
    out = a;
    return true;
  }
  const auto& x = a.slices[differing];
  const auto& y = b.slices[differing];
  if (x.hi + 1 < y.lo || y.hi + 1 < x.lo) return false;
  out = a;
  out.slices[differing] = {std::min(x.lo, y.lo), std::max(x.hi, y.hi)};
  return true;
}

bool drop_contained(std::vector<HyperRect>& rects) {
  std::vector<bool> dead(rects.size(), false);
  bool any = false;
  for (std::size_t i = 0; i < rects.size(); ++i) {
    for (std::size_t j = 0; j < rects.size() && !dead[i]; ++j) {
      if (i == j || dead[j]) continue;
      if (rects[j].contains(rects[i])) {
        dead[i] = true;
        any = true;
      }
    }
  }
  if (any) {
    std::size_t k = 0;
    for (std::size_t i = 0; i < rects.size(); ++i) {
      if (dead[i]) continue;
      if (k != i) rects[k] = std::move(rects[i]);
      ++k;
    }
    rects.resize(k);
  }
  return any;
}

bool fuse_pass(std::vector<HyperRect>& rects) {
  bool any = false;
  HyperRect fused;
  for (std::size_t i = 0; i < rects.size(); ++i) {
    for (std::size_t j = i + 1; j < rects.size();) {
      if (try_fuse(rects[i], rects[j], fused)) {
        rects[i] = fused;
        rects.erase(rects.begin() + static_cast<std::ptrdiff_t>(j));
        any = true;
        j = i + 1;
      } else {
        ++j;
      }
    }
  }
  return any;
}

std::int64_t area_along(std::vector<const HyperRect*>& rects, std::size_t dim) {
  if (rects.empty()) return 0;
  const std::size_t last = rects.front()->dims() - 1;
  if (dim == last) {
    std::vector<Interval> ivs;
    ivs.reserve(rects.size());
    for (const auto* r : rects) ivs.push_back(r->slices[dim]);
    std::sort(ivs.begin(), ivs.end());
    std::int64_t total = 0;
    Interval cur = ivs.front();
    for (std::size_t i = 1; i < ivs.size(); ++i) {
      if (ivs[i].lo <= cur.hi + 1) {
        cur.hi = std::max(cur.hi, ivs[i].hi);
      } else {
        total += cur.length();
        cur = ivs[i];
      }
    }
    return total + cur.length();
  }

  std::vector<std::int64_t> cuts;
  cuts.reserve(rects.size() * 2);
  for (const auto* r : rects) {
    cuts.push_back(r->slices[dim].lo);
    cuts.push_back(r->slices[dim].hi + 1);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::int64_t total = 0;
  std::vector<const HyperRect*> active, previous;
  std::int64_t previous_area = 0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    active.clear();
    for (const auto* r : rects) {
      if (r->slices[dim].lo <= cuts[k] && r->slices[dim].hi >= cuts[k + 1] - 1) active.push_back(r);
    }
    if (active.empty()) continue;
    std::int64_t slab_area;
    if (active == previous) {
      slab_area = previous_area;
    } else {
      slab_area = area_along(active, dim + 1);
      previous = active;
      previous_area = slab_area;
    }
    total += (cuts[k + 1] - cuts[k]) * slab_area;
  }
  return total;
}

}  // namespace

SliceSet merge(const SliceSet& s) {
  std::vector<HyperRect> rects = s.rects();
  if (rects.empty()) return {};
  check_rects(rects);
  std::sort(rects.begin(), rects.end());
  rects.erase(std::unique(rects.begin(), rects.end()), rects.end());
  bool changed = true;
  while (changed) {
    bool a = drop_contained(rects);
    bool b = fuse_pass(rects);
    changed = a || b;
  }
  std::sort(rects.begin(), rects.end());
  return SliceSet(std::move(rects));
}

SliceSet unite(const SliceSet& a, const SliceSet& b) {
  std::vector<HyperRect> rects = a.rects();
  rects.insert(rects.end(), b.rects().begin(), b.rects().end());
  return merge(SliceSet(std::move(rects)));
}

std::int64_t union_area(const SliceSet& s) {
  if (s.empty()) return 0;
  check_rects(s.rects());
  if (s.dims() == 0) return 1;
  std::vector<const HyperRect*> ptrs;
  ptrs.reserve(s.size());
  for (const auto& r : s.rects()) ptrs.push_back(&r);
  return area_along(ptrs, 0);
}

SliceSet project(const SliceSet& s, std::span<const std::size_t> axes) {
  std::vector<HyperRect> out;
  out.reserve(s.size());
  for (const auto& r : s.rects()) {
    HyperRect p;
    for (auto a : axes) {
      if (a >= r.dims()) throw Error(ErrorKind::DimMismatch, "projection axis out of range");
      p.slices.push_back(r.slices[a]);
    }
    out.push_back(std::move(p));
  }
  return merge(SliceSet(std::move(out)));
}

AxisWindow kernel_window(std::int64_t kernel, std::int64_t stride, std::int64_t padding,
                         std::int64_t dilation) {
  return {stride, -padding, dilation * (kernel - 1) + 1};
}

SliceSet take_window(const SliceSet& s, std::span<const AxisWindow> windows,
                     std::span<const Interval> bounds) {
  if (windows.size() != bounds.size()) throw Error(ErrorKind::DimMismatch, "windows and bounds differ in rank");
  std::vector<HyperRect> out;
  for (const auto& r : s.rects()) {
    if (r.dims() != windows.size()) {
      throw Error(ErrorKind::DimMismatch, "box of rank " + std::to_string(r.dims()) + " vs window rank " +
                                              std::to_string(windows.size()));
    }
    HyperRect m;
    bool empty = false;
    for (std::size_t d = 0; d < r.dims() && !empty; ++d) {
      auto iv = windows[d].map(r.slices[d]);
      iv.lo = std::max(iv.lo, bounds[d].lo);
      iv.hi = std::min(iv.hi, bounds[d].hi);
      empty = iv.lo > iv.hi;
      m.slices.push_back(iv);
    }
    if (!empty) out.push_back(std::move(m));
  }
  if (out.empty()) throw Error(ErrorKind::EmptyAfterClip, "window lies entirely outside the bounds");
  return merge(SliceSet(std::move(out)));
}

std::string to_string(const SliceSet& s) {
  std::ostringstream os;
  os << '{';
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << ", ";
    const auto& r = s.rects()[i];
    for (std::size_t d = 0; d < r.dims(); ++d) {
      if (d) os << 'x';
      os << '[' << r.slices[d].lo << ',' << r.slices[d].hi << ']';
    }
  }
  os << '}';
  return os.str();
}

std::string slice_set_to_json(const SliceSet& s) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : s.rects()) {
    nlohmann::json box = nlohmann::json::array();
    for (const auto& iv : r.slices) box.push_back({iv.lo, iv.hi});
    j.push_back(std::move(box));
  }
  return j.dump();
}

SliceSet slice_set_from_json(const std::string& text) {
  try {
    auto j = nlohmann::json::parse(text);
    std::vector<HyperRect> rects;
    for (const auto& box : j) {
      std::vector<Interval> slices;
      for (const auto& iv : box) {
        if (iv.size() != 2) throw Error(ErrorKind::MalformedInput, "interval must be [lo, hi]");
        Interval v{iv[0].get<std::int64_t>(), iv[1].get<std::int64_t>()};
        if (v.hi < v.lo) throw Error(ErrorKind::MalformedInput, "interval with hi < lo");
        slices.push_back(v);
      }
      rects.emplace_back(std::move(slices));
    }
    return SliceSet(std::move(rects));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedInput, std::string("slice set: ") + e.what());
  }
}

}  // namespace pixrf
