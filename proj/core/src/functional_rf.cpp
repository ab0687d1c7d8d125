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

#include "pixrf/functional_rf.hpp"

#include <algorithm>
#include <limits>

#include "pixrf/error.hpp"

namespace pixrf {

std::int64_t NodeFields::grid_size() const {
  std::int64_t n = 1;
  for (std::size_t d = 1; d < shape.size(); ++d) n *= shape[d];
  return n;
}

const FieldSegment& NodeFields::segment_for(std::int64_t leading) const {
  auto it = std::upper_bound(segments.begin(), segments.end(), leading,
                             [](std::int64_t v, const FieldSegment& s) { return v < s.end; });
  if (it == segments.end() || leading < it->begin) {
    throw Error(ErrorKind::UnknownPosition, "leading index " + std::to_string(leading) + " out of range");
  }
  return *it;
}

FieldId NodeFields::at(std::int64_t flat_index) const {
  auto g = grid_size();
  return segment_for(flat_index / g).grid[static_cast<std::size_t>(flat_index % g)];
}

namespace {

std::size_t hash_set(const SliceSet& s) {
  std::size_t h = 1469598103934665603ull;
  for (const auto& r : s.rects()) {
    for (const auto& iv : r.slices) {
      h = (h ^ static_cast<std::size_t>(iv.lo)) * 1099511628211ull;
      h = (h ^ static_cast<std::size_t>(iv.hi)) * 1099511628211ull;
    }
    h = (h ^ 0x9e3779b97f4a7c15ull) * 1099511628211ull;
  }
  return h;
}

}  // namespace

FieldId FieldTable::intern(SliceSet merged) {
  auto h = hash_set(merged);
  auto [lo, hi] = lookup_.equal_range(h);
  for (auto it = lo; it != hi; ++it) {
    if (fields_[it->second] == merged) return it->second;
  }
  auto id = static_cast<FieldId>(fields_.size());
  static constexpr std::size_t kSpatial[] = {1, 2};
  areas_.push_back(merged.empty() ? 0 : union_area(project(merged, kSpatial)));
  fields_.push_back(std::move(merged));
  lookup_.emplace(h, id);
  return id;
}

bool RFMap::contains(std::string_view node_id) const {
  return nodes_.find(std::string(node_id)) != nodes_.end();
}

const NodeFields& RFMap::node(std::string_view node_id) const {
  auto it = nodes_.find(std::string(node_id));
  if (it == nodes_.end()) throw Error(ErrorKind::UnknownNode, "no receptive fields for '" + std::string(node_id) + "'");
  return it->second;
}

FieldId RFMap::field_id_at(std::string_view node_id, std::span<const std::int64_t> index) const {
  const auto& nf = node(node_id);
  if (index.size() != nf.shape.size()) {
    throw Error(ErrorKind::UnknownPosition, "index rank differs from node rank");
  }
  std::int64_t flat = 0;
  for (std::size_t d = 0; d < index.size(); ++d) {
    if (index[d] < 0 || index[d] >= nf.shape[d]) {
      throw Error(ErrorKind::UnknownPosition, "index out of range for " + shape_to_string(nf.shape));
    }
    flat = flat * nf.shape[d] + index[d];
  }
  return nf.at(flat);
}

const SliceSet& RFMap::field_at(std::string_view node_id, std::span<const std::int64_t> index) const {
  return table_[field_id_at(node_id, index)];
}

namespace {

class Builder {
 public:
  explicit Builder(FieldTable& table) : table_(table) {}

  FieldId unite(std::vector<FieldId>& ids) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    if (ids.empty()) return empty_id();
    if (ids.size() == 1) return ids.front();
    rects_.clear();
    for (auto id : ids) {
      const auto& r = table_[id].rects();
      rects_.insert(rects_.end(), r.begin(), r.end());
    }
    return table_.intern(merge(SliceSet(rects_)));
  }

  FieldId empty_id() {
    if (empty_ == kNone) empty_ = table_.intern(SliceSet{});
    return empty_;
  }

 private:
  static constexpr FieldId kNone = std::numeric_limits<FieldId>::max();
  FieldTable& table_;
  std::vector<HyperRect> rects_;
  FieldId empty_ = kNone;
};

std::vector<FieldId> dense(const NodeFields& nf) {
  std::vector<FieldId> out;
  out.reserve(static_cast<std::size_t>(num_elements(nf.shape)));
  for (const auto& seg : nf.segments) {
    for (auto i = seg.begin; i < seg.end; ++i) out.insert(out.end(), seg.grid.begin(), seg.grid.end());
  }
  return out;
}

NodeFields from_dense(Shape shape, const std::vector<FieldId>& ids) {
  NodeFields nf;
  nf.shape = std::move(shape);
  auto g = static_cast<std::size_t>(nf.grid_size());
  for (std::int64_t i = 0; i < nf.shape[0]; ++i) {
    auto first = ids.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(i) * g);
    if (!nf.segments.empty() && std::equal(first, first + static_cast<std::ptrdiff_t>(g), nf.segments.back().grid.begin())) {
      nf.segments.back().end = i + 1;
    } else {
      nf.segments.push_back({i, i + 1, std::vector<FieldId>(first, first + static_cast<std::ptrdiff_t>(g))});
    }
  }
  return nf;
}

struct Window2d {
  std::int64_t kh, kw, sh, sw, ph, pw, dh, dw;
};

// Fields of a (out_h, out_w) grid of sliding windows over the given input
// segments; every output position unites the window across all of them.
std::vector<FieldId> window_grid(Builder& b, const std::vector<const FieldSegment*>& segs,
                                 std::int64_t in_h, std::int64_t in_w, std::int64_t out_h,
                                 std::int64_t out_w, const Window2d& k) {
  std::vector<FieldId> grid(static_cast<std::size_t>(out_h * out_w));
  std::vector<FieldId> ids;
  for (std::int64_t oh = 0; oh < out_h; ++oh) {
    for (std::int64_t ow = 0; ow < out_w; ++ow) {
      ids.clear();
      for (const auto* seg : segs) {
        for (std::int64_t a = 0; a < k.kh; ++a) {
          auto ih = oh * k.sh - k.ph + a * k.dh;
          if (ih < 0 || ih >= in_h) continue;
          for (std::int64_t c = 0; c < k.kw; ++c) {
            auto iw = ow * k.sw - k.pw + c * k.dw;
            if (iw < 0 || iw >= in_w) continue;
            ids.push_back(seg->grid[static_cast<std::size_t>(ih * in_w + iw)]);
          }
        }
      }
      grid[static_cast<std::size_t>(oh * out_w + ow)] = b.unite(ids);
    }
  }
  return grid;
}

Window2d window_of(const Node& n, const Shape& in) {
  const auto& a = n.attrs;
  if (n.op == OpKind::AdaptiveAvgPool2d) {
    auto kh = in[1] / a.output_size.h;
    auto kw = in[2] / a.output_size.w;
    return {kh, kw, kh, kw, 0, 0, 1, 1};
  }
  std::int64_t dh = n.op == OpKind::AvgPool2d ? 1 : a.dilation.h;
  std::int64_t dw = n.op == OpKind::AvgPool2d ? 1 : a.dilation.w;
  return {a.kernel.h, a.kernel.w, a.stride.h, a.stride.w, a.padding.h, a.padding.w, dh, dw};
}

NodeFields input_fields(FieldTable& table, const Shape& s) {
  NodeFields nf;
  nf.shape = s;
  FieldSegment seg{0, s[0], {}};
  seg.grid.reserve(static_cast<std::size_t>(s[1] * s[2]));
  for (std::int64_t i = 0; i < s[1]; ++i) {
    for (std::int64_t j = 0; j < s[2]; ++j) {
      seg.grid.push_back(table.intern(SliceSet{HyperRect{{0, s[0] - 1}, {i, i}, {j, j}}}));
    }
  }
  nf.segments.push_back(std::move(seg));
  return nf;
}

NodeFields add_fields(Builder& b, const Shape& shape, const std::vector<const NodeFields*>& in) {
  std::vector<std::int64_t> cuts;
  for (const auto* nf : in) {
    for (const auto& s : nf->segments) {
      cuts.push_back(s.begin);
      cuts.push_back(s.end);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  NodeFields out;
  out.shape = shape;
  auto g = static_cast<std::size_t>(out.grid_size());
  std::vector<FieldId> ids;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    std::vector<const FieldSegment*> segs;
    for (const auto* nf : in) segs.push_back(&nf->segment_for(cuts[k]));
    FieldSegment seg{cuts[k], cuts[k + 1], std::vector<FieldId>(g)};
    for (std::size_t p = 0; p < g; ++p) {
      ids.clear();
      for (const auto* s : segs) ids.push_back(s->grid[p]);
      seg.grid[p] = b.unite(ids);
    }
    if (!out.segments.empty() && out.segments.back().grid == seg.grid) {
      out.segments.back().end = seg.end;
    } else {
      out.segments.push_back(std::move(seg));
    }
  }
  return out;
}

NodeFields permute_fields(const NodeFields& in, const std::vector<std::int64_t>& order, const Shape& out_shape) {
  auto src = dense(in);
  const auto rank = in.shape.size();
  std::vector<std::int64_t> in_strides(rank, 1);
  for (std::size_t d = rank - 1; d-- > 0;) in_strides[d] = in_strides[d + 1] * in.shape[d + 1];
  std::vector<FieldId> dst(src.size());
  std::vector<std::int64_t> idx(rank, 0);
  for (std::size_t flat = 0; flat < dst.size(); ++flat) {
    std::int64_t s = 0;
    for (std::size_t d = 0; d < rank; ++d) s += idx[d] * in_strides[static_cast<std::size_t>(order[d])];
    dst[flat] = src[static_cast<std::size_t>(s)];
    for (std::size_t d = rank; d-- > 0;) {
      if (++idx[d] < out_shape[d]) break;
      idx[d] = 0;
    }
  }
  return from_dense(out_shape, dst);
}

}  // namespace

RFMap functional_rf(const GraphIR& graph) {
  const GraphIR g = is_topologically_sorted(graph) ? graph : topo_sort(graph);
  RFMap rf;
  rf.input_shape_ = g.input_shape();
  Builder b(rf.table_);

  for (const auto& n : g.nodes()) {
    std::vector<const NodeFields*> in;
    for (const auto& id : n.inputs) in.push_back(&rf.nodes_.at(id));
    NodeFields out;
    switch (n.op) {
      case OpKind::Input:
        out = input_fields(rf.table_, n.shape);
        break;
      case OpKind::Conv2d: {
        const auto& src = *in[0];
        std::vector<const FieldSegment*> segs;
        for (const auto& s : src.segments) segs.push_back(&s);
        out.shape = n.shape;
        out.segments.push_back({0, n.shape[0],
                                window_grid(b, segs, src.shape[1], src.shape[2], n.shape[1], n.shape[2],
                                            window_of(n, src.shape))});
        break;
      }
      case OpKind::MaxPool2d:
      case OpKind::AvgPool2d:
      case OpKind::AdaptiveAvgPool2d: {
        const auto& src = *in[0];
        out.shape = n.shape;
        auto win = window_of(n, src.shape);
        for (const auto& s : src.segments) {
          out.segments.push_back({s.begin, s.end,
                                  window_grid(b, {&s}, src.shape[1], src.shape[2], n.shape[1], n.shape[2], win)});
        }
        break;
      }
      case OpKind::Relu:
      case OpKind::Sigmoid:
      case OpKind::BatchNorm2d:
      case OpKind::DropoutIdentity:
        out = *in[0];
        break;
      case OpKind::Add:
        out = add_fields(b, n.shape, in);
        break;
      case OpKind::Concat: {
        out.shape = n.shape;
        std::int64_t offset = 0;
        for (const auto* src : in) {
          for (const auto& s : src->segments) {
            out.segments.push_back({s.begin + offset, s.end + offset, s.grid});
          }
          offset += src->shape[0];
        }
        break;
      }
      case OpKind::Flatten:
        out = from_dense(n.shape, dense(*in[0]));
        break;
      case OpKind::Linear: {
        std::vector<FieldId> ids;
        for (const auto& s : in[0]->segments) ids.insert(ids.end(), s.grid.begin(), s.grid.end());
        out.shape = n.shape;
        out.segments.push_back({0, n.shape[0], {b.unite(ids)}});
        break;
      }
      case OpKind::Permute:
        out = permute_fields(*in[0], n.attrs.order, n.shape);
        break;
    }
    rf.nodes_.emplace(n.id, std::move(out));
  }
  return rf;
}

RFStats mean_receptive_field(const RFMap& rf, std::string_view node_id) {
  const auto& nf = rf.node(node_id);
  const auto pixels = static_cast<double>(rf.input_shape()[1] * rf.input_shape()[2]);
  RFStats st;
  st.shape = nf.shape;
  double sum = 0.0;
  std::int64_t lo = std::numeric_limits<std::int64_t>::max();
  std::int64_t hi = 0;
  for (const auto& seg : nf.segments) {
    std::int64_t seg_sum = 0;
    for (auto id : seg.grid) {
      auto a = rf.table().spatial_area(id);
      seg_sum += a;
      lo = std::min(lo, a);
      hi = std::max(hi, a);
    }
    sum += static_cast<double>(seg_sum) * static_cast<double>(seg.end - seg.begin);
  }
  auto count = static_cast<double>(num_elements(nf.shape));
  st.mean_pct = 100.0 * sum / count / pixels;
  st.min_pct = 100.0 * static_cast<double>(lo) / pixels;
  st.max_pct = 100.0 * static_cast<double>(hi) / pixels;
  return st;
}

SliceSet spatial_field(const SliceSet& field) {
  static constexpr std::size_t kSpatial[] = {1, 2};
  return project(field, kSpatial);
}

SliceSet window_field(const RFMap& rf, std::string_view node_id, std::int64_t row, std::int64_t col,
                      std::int64_t height, std::int64_t width) {
  const auto& nf = rf.node(node_id);
  if (nf.shape.size() != 3) throw Error(ErrorKind::UnknownPosition, "window fields need a (C,H,W) node");
  if (row < 0 || col < 0 || height < 1 || width < 1 || row + height > nf.shape[1] || col + width > nf.shape[2]) {
    throw Error(ErrorKind::UnknownPosition, "window (" + std::to_string(row) + "," + std::to_string(col) +
                                                ") size " + std::to_string(height) + "x" + std::to_string(width) +
                                                " outside " + shape_to_string(nf.shape));
  }
  std::vector<FieldId> ids;
  for (const auto& seg : nf.segments) {
    for (auto r = row; r < row + height; ++r) {
      for (auto c = col; c < col + width; ++c) ids.push_back(seg.grid[static_cast<std::size_t>(r * nf.shape[2] + c)]);
    }
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (ids.size() == 1) return rf.table()[ids.front()];
  std::vector<HyperRect> rects;
  for (auto id : ids) {
    const auto& r = rf.table()[id].rects();
    rects.insert(rects.end(), r.begin(), r.end());
  }
  return merge(SliceSet(std::move(rects)));
}

}  // namespace pixrf
