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

#include "pixrf/pixel_mapping.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>

#include "pixrf/error.hpp"

namespace pixrf {

std::string_view to_string(MapMethod m) noexcept { return m == MapMethod::Rf ? "rf" : "upsample"; }

MapMethod parse_map_method(std::string_view s) {
  if (s == "rf") return MapMethod::Rf;
  if (s == "upsample") return MapMethod::Upsample;
  throw Error(ErrorKind::InvalidArgument, "unknown mapping method '" + std::string(s) + "'");
}

Box bounding_box(const SliceSet& s) {
  Box b;
  if (s.empty()) return b;
  if (s.dims() != 2) throw Error(ErrorKind::DimMismatch, "bounding box of a " + std::to_string(s.dims()) + "-D set");
  b = {std::numeric_limits<std::int64_t>::max(), std::numeric_limits<std::int64_t>::max(),
       std::numeric_limits<std::int64_t>::min(), std::numeric_limits<std::int64_t>::min()};
  for (const auto& r : s.rects()) {
    b.r0 = std::min(b.r0, r.slices[0].lo);
    b.r1 = std::max(b.r1, r.slices[0].hi);
    b.c0 = std::min(b.c0, r.slices[1].lo);
    b.c1 = std::max(b.c1, r.slices[1].hi);
  }
  return b;
}

SliceSet box_slices(const Box& b) {
  if (b.empty()) return {};
  return SliceSet{HyperRect{{b.r0, b.r1}, {b.c0, b.c1}}};
}

double gaussian_weight(const Box& box, std::int64_t r, std::int64_t c) {
  const double sigma = static_cast<double>(std::max(box.height(), box.width()));
  const double cr = 0.5 * static_cast<double>(box.r0 + box.r1);
  const double cc = 0.5 * static_cast<double>(box.c0 + box.c1);
  // Pixel nearest the centre; offsets from it are 0 or 0.5 along each axis.
  const double pr = 0.5 * static_cast<double>((box.r1 - box.r0) % 2);
  const double pc = 0.5 * static_cast<double>((box.c1 - box.c0) % 2);
  auto g = [&](double dr, double dc) { return std::exp(-(dr * dr + dc * dc) / (2.0 * sigma * sigma)); };
  return g(static_cast<double>(r) - cr, static_cast<double>(c) - cc) / g(pr, pc);
}

SliceSet rf_localize(const RFMap& rf, std::string_view embed_node, std::int64_t row, std::int64_t col,
                     std::int64_t patch_h, std::int64_t patch_w) {
  return spatial_field(window_field(rf, embed_node, row, col, patch_h, patch_w));
}

HeatMap rf_heatmap(const RFMap& rf, std::string_view embed_node, const SimilarityMap& s, std::int64_t patch_h,
                   std::int64_t patch_w, const GaussianKernelCfg& kcfg) {
  const auto& shape = rf.node(embed_node).shape;
  if (shape.size() != 3 || s.rows != shape[1] - patch_h + 1 || s.cols != shape[2] - patch_w + 1 ||
      s.scores.size() != static_cast<std::size_t>(s.rows * s.cols)) {
    throw Error(ErrorKind::GridMismatch, "similarity grid " + std::to_string(s.rows) + "x" + std::to_string(s.cols) +
                                             " does not match node '" + std::string(embed_node) + "' " +
                                             shape_to_string(shape) + " with " + std::to_string(patch_h) + "x" +
                                             std::to_string(patch_w) + " patches");
  }
  const auto& in = rf.input_shape();
  const auto h = in[1], w = in[2];
  HeatMap m{Tensor({h, w}, 0.0f), MapMethod::Rf, -1, {}};
  auto vals = m.values.data();
  for (std::int64_t r = 0; r < s.rows; ++r) {
    for (std::int64_t c = 0; c < s.cols; ++c) {
      const double score = s.score(r, c);
      auto field = rf_localize(rf, embed_node, r, c, patch_h, patch_w);
      const Box box = bounding_box(field);
      for (const auto& rect : field.rects()) {
        for (auto y = rect.slices[0].lo; y <= rect.slices[0].hi; ++y) {
          for (auto x = rect.slices[1].lo; x <= rect.slices[1].hi; ++x) {
            double v = kcfg.enabled ? score * gaussian_weight(box, y, x) : score;
            float& dst = vals[static_cast<std::size_t>(y * w + x)];
            dst = std::max(dst, static_cast<float>(v));
          }
        }
      }
    }
  }
  return m;
}

namespace {

double cubic(double x, double a) {
  x = std::abs(x);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

struct Taps {
  std::array<std::int64_t, 4> index;
  std::array<double, 4> weight;
};

std::vector<Taps> taps(std::int64_t in, std::int64_t out, double a) {
  std::vector<Taps> t(static_cast<std::size_t>(out));
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (std::int64_t o = 0; o < out; ++o) {
    const double src = (static_cast<double>(o) + 0.5) * scale - 0.5;
    const double base = std::floor(src);
    const double frac = src - base;
    auto& tp = t[static_cast<std::size_t>(o)];
    for (int k = 0; k < 4; ++k) {
      tp.index[k] = std::clamp(static_cast<std::int64_t>(base) - 1 + k, std::int64_t{0}, in - 1);
      tp.weight[k] = cubic(frac - (k - 1), a);
    }
  }
  return t;
}

}  // namespace

Tensor bicubic_resize(const Tensor& grid, std::int64_t out_h, std::int64_t out_w, double a) {
  if (grid.rank() != 2 || grid.dim(0) < 1 || grid.dim(1) < 1) {
    throw Error(ErrorKind::DegenerateGrid, "cannot interpolate grid " + shape_to_string(grid.dims()));
  }
  if (out_h < 1 || out_w < 1) throw Error(ErrorKind::InvalidArgument, "output size must be positive");
  const auto in_h = grid.dim(0), in_w = grid.dim(1);
  const auto ty = taps(in_h, out_h, a), tx = taps(in_w, out_w, a);
  // Horizontal pass, then vertical.
  std::vector<double> mid(static_cast<std::size_t>(in_h * out_w));
  for (std::int64_t r = 0; r < in_h; ++r) {
    for (std::int64_t c = 0; c < out_w; ++c) {
      const auto& t = tx[static_cast<std::size_t>(c)];
      double v = 0.0;
      for (int k = 0; k < 4; ++k) v += t.weight[k] * grid[r * in_w + t.index[k]];
      mid[static_cast<std::size_t>(r * out_w + c)] = v;
    }
  }
  Tensor out({out_h, out_w});
  for (std::int64_t r = 0; r < out_h; ++r) {
    const auto& t = ty[static_cast<std::size_t>(r)];
    for (std::int64_t c = 0; c < out_w; ++c) {
      double v = 0.0;
      for (int k = 0; k < 4; ++k) v += t.weight[k] * mid[static_cast<std::size_t>(t.index[k] * out_w + c)];
      out[r * out_w + c] = static_cast<float>(v);
    }
  }
  return out;
}

HeatMap upsample_heatmap(const SimilarityMap& s, std::int64_t out_h, std::int64_t out_w, double a) {
  if (s.rows < 1 || s.cols < 1) throw Error(ErrorKind::DegenerateGrid, "empty similarity map");
  std::vector<float> g(s.scores.begin(), s.scores.end());
  return {bicubic_resize(Tensor({s.rows, s.cols}, std::move(g)), out_h, out_w, a), MapMethod::Upsample, -1, {}};
}

Box top_percent_bbox(const Tensor& values, double percent) {
  if (values.rank() != 2 || values.size() == 0) {
    throw Error(ErrorKind::InvalidArgument, "heat map must be a non-empty (H,W) tensor");
  }
  if (!(percent > 0.0 && percent <= 100.0)) throw Error(ErrorKind::InvalidArgument, "percent must be in (0, 100]");
  const auto n = static_cast<std::int64_t>(values.size());
  // Tolerance keeps e.g. 5% of 100 pixels at 5, not 6.
  auto k = static_cast<std::int64_t>(std::ceil(percent * static_cast<double>(n) / 100.0 - 1e-9));
  k = std::clamp<std::int64_t>(k, 1, n);
  std::vector<float> sorted(values.data().begin(), values.data().end());
  std::nth_element(sorted.begin(), sorted.begin() + (k - 1), sorted.end(), std::greater<>());
  const float threshold = sorted[static_cast<std::size_t>(k - 1)];
  const auto w = values.dim(1);
  Box b{n, n, -1, -1};
  for (std::int64_t i = 0; i < n; ++i) {
    if (values[i] >= threshold) {
      const auto r = i / w, c = i % w;
      b.r0 = std::min(b.r0, r);
      b.r1 = std::max(b.r1, r);
      b.c0 = std::min(b.c0, c);
      b.c1 = std::max(b.c1, c);
    }
  }
  return b;
}

void write_pgm(const std::filesystem::path& path, const Tensor& values) {
  if (values.rank() != 2) throw Error(ErrorKind::InvalidArgument, "PGM needs an (H,W) tensor");
  auto [lo, hi] = std::minmax_element(values.data().begin(), values.data().end());
  const double mn = values.size() ? *lo : 0.0, mx = values.size() ? *hi : 0.0;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << "P5\n" << values.dim(1) << ' ' << values.dim(0) << "\n255\n";
  for (float v : values.data()) {
    double t = mx > mn ? (v - mn) / (mx - mn) : 0.0;
    out.put(static_cast<char>(static_cast<unsigned char>(std::lround(t * 255.0))));
  }
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

}  // namespace pixrf
