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

// Fixture lookup and independent oracles shared by the test binaries.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "pixrf/error.hpp"
#include "pixrf/functional_rf.hpp"
#include "pixrf/graph_ir.hpp"
#include "pixrf/inference.hpp"
#include "pixrf/slice_algebra.hpp"
#include "pixrf/tensor.hpp"

namespace pixrf::testing {

inline std::filesystem::path fixture(const std::string& rel) {
  return std::filesystem::path(PIXRF_FIXTURE_DIR) / rel;
}

using Point = std::vector<std::int64_t>;

/// Kind of the pixrf::Error thrown by fn, or nullopt if it returns normally.
template <typename Fn>
std::optional<ErrorKind> error_kind(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

/// Every lattice point covered, by enumeration.
inline void enumerate_rect(const HyperRect& r, std::size_t d, Point& p, std::set<Point>& out) {
  if (d == r.dims()) {
    out.insert(p);
    return;
  }
  for (auto v = r.slices[d].lo; v <= r.slices[d].hi; ++v) {
    p[d] = v;
    enumerate_rect(r, d + 1, p, out);
  }
}

inline std::set<Point> lattice_points(const SliceSet& s) {
  std::set<Point> pts;
  for (const auto& r : s.rects()) {
    Point p(r.dims());
    enumerate_rect(r, 0, p, pts);
  }
  return pts;
}

inline SliceSet random_slice_set(std::mt19937_64& rng, std::size_t count, std::size_t dims, std::int64_t max_coord,
                                 std::int64_t max_len = 8) {
  std::uniform_int_distribution<std::int64_t> coord(0, max_coord - 1), len(1, max_len);
  std::vector<HyperRect> rects;
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<Interval> sl;
    for (std::size_t d = 0; d < dims; ++d) {
      auto lo = coord(rng);
      sl.push_back({lo, std::min(max_coord - 1, lo + len(rng) - 1)});
    }
    rects.emplace_back(std::move(sl));
  }
  return SliceSet(std::move(rects));
}

inline Tensor random_tensor(std::mt19937_64& rng, Shape dims, float lo = -1.0f, float hi = 1.0f) {
  std::uniform_real_distribution<float> u(lo, hi);
  Tensor t(std::move(dims));
  for (auto& v : t.data()) v = u(rng);
  return t;
}

struct RandomNet {
  GraphIR graph;
  WeightStore weights;
  std::string output;
};

/// Chain of 1..4 conv/pool layers on an input of at most 3x16x16, with relu
/// after convs and an optional same-shape residual add. Weights are drawn
/// from [lo, hi].
inline RandomNet random_net(std::mt19937_64& rng, float lo, float hi) {
  std::uniform_int_distribution<int> pick(0, 99);
  for (;;) {
    const std::int64_t c = 1 + pick(rng) % 3, h = 6 + pick(rng) % 11, w = 6 + pick(rng) % 11;
    std::vector<Node> nodes;
    Node in;
    in.id = "input";
    nodes.push_back(in);
    std::string prev = "input";
    std::int64_t channels = c;
    const int layers = 1 + pick(rng) % 4;
    WeightStore ws;
    for (int l = 0; l < layers; ++l) {
      Node n;
      n.id = "l" + std::to_string(l);
      n.inputs = {prev};
      const int kind = pick(rng) % 3;
      const std::int64_t kh = 1 + pick(rng) % 4, kw = 1 + pick(rng) % 4;
      n.attrs.kernel = {kh, kw};
      n.attrs.stride = {1 + pick(rng) % 2, 1 + pick(rng) % 3};
      if (kind == 0) {
        n.op = OpKind::Conv2d;
        n.attrs.dilation = {1 + pick(rng) % 2, 1 + pick(rng) % 2};
        n.attrs.padding = {pick(rng) % 3, pick(rng) % 3};
        n.attrs.out_channels = 1 + pick(rng) % 3;
        n.attrs.bias = pick(rng) % 2 == 0;
        ws.set(n.id, "weight", random_tensor(rng, {n.attrs.out_channels, channels, kh, kw}, lo, hi));
        if (n.attrs.bias) ws.set(n.id, "bias", random_tensor(rng, {n.attrs.out_channels}, lo, hi));
        channels = n.attrs.out_channels;
      } else {
        n.op = kind == 1 ? OpKind::MaxPool2d : OpKind::AvgPool2d;
        n.attrs.padding = {pick(rng) % (kh / 2 + 1), pick(rng) % (kw / 2 + 1)};
        n.attrs.ceil_mode = pick(rng) % 2 == 0;
        n.attrs.count_include_pad = pick(rng) % 2 == 0;
      }
      nodes.push_back(n);
      prev = n.id;
      if (kind == 0) {
        Node r;
        r.id = "r" + std::to_string(l);
        r.op = OpKind::Relu;
        r.inputs = {prev};
        nodes.push_back(r);
        prev = r.id;
      }
    }
    if (pick(rng) % 3 == 0) {
      // Residual: prev + conv3x3(prev, padding 1).
      Node cv;
      cv.id = "res_conv";
      cv.op = OpKind::Conv2d;
      cv.inputs = {prev};
      cv.attrs.kernel = {3, 3};
      cv.attrs.padding = {1, 1};
      cv.attrs.out_channels = channels;
      cv.attrs.bias = false;
      ws.set(cv.id, "weight", random_tensor(rng, {channels, channels, 3, 3}, lo, hi));
      Node add;
      add.id = "res_add";
      add.op = OpKind::Add;
      add.inputs = {prev, cv.id};
      nodes.push_back(cv);
      nodes.push_back(add);
      prev = add.id;
    }
    try {
      auto g = build_graph("random", {c, h, w}, nodes);
      return {std::move(g), std::move(ws), prev};
    } catch (const Error&) {
      // Window larger than the feature map; draw again.
    }
  }
}

/// Direct convolution in double, one output element at a time.
inline Tensor naive_conv2d(const Tensor& x, const Tensor& weight, const Tensor* bias, Extent2 stride, Extent2 pad,
                           Extent2 dil) {
  const auto ci = x.dim(0), h = x.dim(1), w = x.dim(2);
  const auto co = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
  const auto oh = (h + 2 * pad.h - dil.h * (kh - 1) - 1) / stride.h + 1;
  const auto ow = (w + 2 * pad.w - dil.w * (kw - 1) - 1) / stride.w + 1;
  Tensor out({co, oh, ow});
  for (std::int64_t o = 0; o < co; ++o) {
    for (std::int64_t i = 0; i < oh; ++i) {
      for (std::int64_t j = 0; j < ow; ++j) {
        double acc = bias ? (*bias)[o] : 0.0;
        for (std::int64_t c = 0; c < ci; ++c) {
          for (std::int64_t a = 0; a < kh; ++a) {
            for (std::int64_t b = 0; b < kw; ++b) {
              const auto r = i * stride.h - pad.h + a * dil.h, q = j * stride.w - pad.w + b * dil.w;
              if (r < 0 || r >= h || q < 0 || q >= w) continue;
              acc += static_cast<double>(x.at(c, r, q)) * weight[((o * ci + c) * kh + a) * kw + b];
            }
          }
        }
        out.at(o, i, j) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

/// Spatial dependence by perturbation: starting from an all-zero input,
/// pixel (r, c) belongs to element e's set iff raising every channel of that
/// pixel changes e. Exact for nets with positive weights and no bias, where
/// every activation is a strictly increasing function of each input it
/// depends on.
inline std::vector<std::set<Point>> dependence_oracle(const GraphIR& g, const WeightStore& w, const std::string& node) {
  const auto& in = g.input_shape();
  const Tensor zero(in, 0.0f);
  const Tensor base = forward(g, w, zero, node);
  std::vector<std::set<Point>> deps(static_cast<std::size_t>(base.size()));
  for (std::int64_t r = 0; r < in[1]; ++r) {
    for (std::int64_t c = 0; c < in[2]; ++c) {
      Tensor x = zero;
      for (std::int64_t ch = 0; ch < in[0]; ++ch) x.at(ch, r, c) = 1.0f;
      const Tensor y = forward(g, w, x, node);
      for (std::int64_t e = 0; e < y.size(); ++e) {
        if (y[e] != base[e]) deps[static_cast<std::size_t>(e)].insert({r, c});
      }
    }
  }
  return deps;
}

/// Zero-bias copy of a weight store (biases dropped, weights kept).
inline WeightStore without_bias(const GraphIR& g, const WeightStore& w) {
  WeightStore out;
  for (const auto& n : g.nodes()) {
    if (w.has(n.id, "weight")) out.set(n.id, "weight", w.get(n.id, "weight"));
    if (w.has(n.id, "bias")) out.set(n.id, "bias", Tensor(w.get(n.id, "bias").dims(), 0.0f));
  }
  return out;
}

}  // namespace pixrf::testing
