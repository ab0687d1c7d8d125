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

#include "pixrf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "pixrf/error.hpp"
#include "pixrf/parallel.hpp"
#include "pixrf/random.hpp"

namespace pixrf {

// ---------------------------------------------------------------------------
// Relevance ordering test

std::vector<std::int64_t> rot_steps(std::int64_t pixels, const RotConfig& cfg) {
  if (pixels < 1) throw Error(ErrorKind::InvalidArgument, "image has no pixels");
  std::vector<std::int64_t> steps;
  if (cfg.per_pixel) {
    steps.resize(static_cast<std::size_t>(pixels + 1));
    std::iota(steps.begin(), steps.end(), std::int64_t{0});
    return steps;
  }
  if (!(cfg.stride > 0.0 && cfg.stride <= 1.0)) throw Error(ErrorKind::InvalidArgument, "stride must be in (0, 1]");
  for (std::int64_t i = 0;; ++i) {
    auto k = static_cast<std::int64_t>(std::llround(static_cast<double>(i) * cfg.stride * static_cast<double>(pixels)));
    if (k >= pixels) break;
    if (steps.empty() || k > steps.back()) steps.push_back(k);
  }
  steps.push_back(pixels);
  return steps;
}

std::vector<std::int64_t> restore_order(const HeatMap& heat) {
  std::vector<std::int64_t> order(heat.values.size());
  std::iota(order.begin(), order.end(), std::int64_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::int64_t a, std::int64_t b) { return heat.values[a] > heat.values[b]; });
  return order;
}

Tensor random_baseline(const Tensor& image, std::uint64_t seed) {
  if (image.size() == 0) throw Error(ErrorKind::InvalidArgument, "empty image");
  auto [lo_it, hi_it] = std::minmax_element(image.data().begin(), image.data().end());
  const double lo = *lo_it, hi = *hi_it;
  std::mt19937_64 rng(seed);
  Tensor out(image.dims());
  for (auto& v : out.data()) v = static_cast<float>(lo + (hi - lo) * uniform01(rng));
  return out;
}

namespace {

Tensor restored(const Tensor& image, const Tensor& baseline, std::span<const std::int64_t> order, std::int64_t count) {
  Tensor x = baseline;
  const auto channels = image.dim(0);
  const auto plane = image.dim(1) * image.dim(2);
  for (std::int64_t i = 0; i < count; ++i) {
    const auto p = order[static_cast<std::size_t>(i)];
    for (std::int64_t c = 0; c < channels; ++c) x[c * plane + p] = image[c * plane + p];
  }
  return x;
}

void check_heat(const Tensor& image, const HeatMap& heat) {
  if (image.rank() != 3 || heat.values.rank() != 2 || heat.height() != image.dim(1) ||
      heat.width() != image.dim(2)) {
    throw Error(ErrorKind::GridMismatch, "heat map " + shape_to_string(heat.values.dims()) + " vs image " +
                                             shape_to_string(image.dims()));
  }
}

void summarize(ROTCurve& c) {
  const double span = c.s_orig - c.s_base;
  if (span == 0.0) throw Error(ErrorKind::DegenerateNormalization, "original and baseline scores coincide");
  double acc = 0.0;
  for (double s : c.scores) acc += (s - c.s_base) / span;
  c.ausc = acc / static_cast<double>(c.scores.size());
  c.pct_to_recovery.reset();
  for (std::size_t i = 0; i < c.scores.size(); ++i) {
    if (c.scores[i] >= c.s_orig - 1e-6) {
      c.pct_to_recovery = c.fractions[i];
      break;
    }
  }
}

}  // namespace

ROTCurve rot_single(const ProtoModel& model, const Tensor& image, std::size_t proto, const HeatMap& heat,
                    const Tensor& baseline, const RotConfig& cfg) {
  check_heat(image, heat);
  if (baseline.dims() != image.dims()) throw Error(ErrorKind::ShapeMismatch, "baseline and image differ in shape");
  const auto pixels = image.dim(1) * image.dim(2);
  const auto order = restore_order(heat);
  const auto steps = rot_steps(pixels, cfg);
  ROTCurve c;
  c.fractions.resize(steps.size());
  c.scores.resize(steps.size());
  parallel_for(
      steps.size(),
      [&](std::size_t i) {
        c.fractions[i] = static_cast<double>(steps[i]) / static_cast<double>(pixels);
        c.scores[i] = model.prototype_score(restored(image, baseline, order, steps[i]), proto);
      },
      cfg.threads);
  c.s_base = c.scores.front();
  c.s_orig = c.scores.back();
  summarize(c);
  return c;
}

ROTCurve relevance_ordering_test(const ProtoModel& model, const Tensor& image, std::size_t proto,
                                 const HeatMap& heat, const RotConfig& cfg, std::uint64_t image_key) {
  if (cfg.samples < 1) throw Error(ErrorKind::InvalidArgument, "ROT needs at least one sample");
  ROTCurve mean;
  double ausc = 0.0, recovery = 0.0, base = 0.0;
  for (int k = 0; k < cfg.samples; ++k) {
    auto baseline = random_baseline(image, derive_seed(cfg.seed, {proto, image_key, static_cast<std::uint64_t>(k)}));
    auto run = rot_single(model, image, proto, heat, baseline, cfg);
    if (k == 0) {
      mean.fractions = run.fractions;
      mean.s_orig = run.s_orig;
      mean.scores.assign(run.scores.size(), 0.0);
    }
    for (std::size_t i = 0; i < run.scores.size(); ++i) mean.scores[i] += run.scores[i] - run.s_orig;
    ausc += run.ausc;
    recovery += *run.pct_to_recovery;
    base += run.s_base;
  }
  const double n = cfg.samples;
  for (auto& s : mean.scores) s = mean.s_orig + s / n;
  mean.s_base = base / n;
  mean.ausc = ausc / n;
  mean.pct_to_recovery = recovery / n;
  return mean;
}

namespace {

HeatMap heatmap_from_embedding(const ProtoModel& model, const Tensor& z, std::size_t proto, MapMethod method,
                               const GaussianKernelCfg& kcfg) {
  auto s = model.similarity_map(z, proto);
  const auto& pd = model.bank().proto_dims();
  HeatMap m = method == MapMethod::Rf ? rf_heatmap(model.rf(), model.embed_node(), s, pd[1], pd[2], kcfg)
                                      : upsample_heatmap(s, model.input_shape()[1], model.input_shape()[2]);
  m.prototype = static_cast<std::int64_t>(proto);
  return m;
}

Box box_from_embedding(const ProtoModel& model, const Tensor& z, std::size_t proto, MapMethod method) {
  if (method == MapMethod::Rf) {
    auto unit = prototype_unit(model.similarity_map(z, proto));
    const auto& pd = model.bank().proto_dims();
    return bounding_box(rf_localize(model.rf(), model.embed_node(), unit.row, unit.col, pd[1], pd[2]));
  }
  return top_percent_bbox(heatmap_from_embedding(model, z, proto, method, {}));
}

}  // namespace

HeatMap prototype_heatmap(const ProtoModel& model, const Tensor& image, std::size_t proto, MapMethod method,
                          const GaussianKernelCfg& kcfg) {
  return heatmap_from_embedding(model, model.embed(image), proto, method, kcfg);
}

Box localization_box(const ProtoModel& model, const Tensor& image, std::size_t proto, MapMethod method) {
  return box_from_embedding(model, model.embed(image), proto, method);
}

// ---------------------------------------------------------------------------
// Annotations

const ImageAnnotation& Annotations::at(const std::string& image_id) const {
  auto it = images.find(image_id);
  if (it == images.end()) throw Error(ErrorKind::InvalidArgument, "no annotation for image '" + image_id + "'");
  return it->second;
}

Annotations parse_annotations(const std::string& json_text) {
  using nlohmann::json;
  auto fail = [](const std::string& m) { return Error(ErrorKind::MalformedInput, "annotations: " + m); };
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw fail(e.what());
  }
  Annotations a;
  try {
    a.parts = j.at("parts").get<std::vector<std::string>>();
    const auto k = a.parts.size();
    for (const auto& [id, entry] : j.at("images").items()) {
      ImageAnnotation ia;
      ia.visible = entry.at("visible").get<std::vector<bool>>();
      const auto& centers = entry.at("centers");
      if (ia.visible.size() != k || centers.size() != k) {
        throw fail("image '" + id + "' must list " + std::to_string(k) + " visibility flags and centres");
      }
      ia.centers.resize(k);
      for (std::size_t p = 0; p < k; ++p) {
        const auto& c = centers[p];
        if (c.is_null()) {
          if (ia.visible[p]) throw fail("image '" + id + "' part '" + a.parts[p] + "' is visible but has no centre");
          continue;
        }
        if (!ia.visible[p]) continue;
        if (c.size() == 2 && c[0].is_number()) {
          ia.centers[p].push_back({c[0].get<std::int64_t>(), c[1].get<std::int64_t>()});
        } else {
          for (const auto& pt : c) ia.centers[p].push_back({pt.at(0).get<std::int64_t>(), pt.at(1).get<std::int64_t>()});
        }
      }
      a.images.emplace(id, std::move(ia));
    }
  } catch (const json::exception& e) {
    throw fail(e.what());
  }
  return a;
}

Annotations load_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_annotations(ss.str());
}

// ---------------------------------------------------------------------------
// Consistency and stability

Box centered_window(const Box& box, std::int64_t window_h, std::int64_t window_w, std::int64_t height,
                    std::int64_t width) {
  if (window_h < 1 || window_w < 1) throw Error(ErrorKind::InvalidArgument, "window must be positive");
  // Midpoint rounded down; an even window extends one pixel further up/left.
  const auto mr = (box.r0 + box.r1) / 2, mc = (box.c0 + box.c1) / 2;
  Box w{mr - window_h / 2, mc - window_w / 2, 0, 0};
  w.r1 = w.r0 + window_h - 1;
  w.c1 = w.c0 + window_w - 1;
  w.r0 = std::max<std::int64_t>(w.r0, 0);
  w.c0 = std::max<std::int64_t>(w.c0, 0);
  w.r1 = std::min(w.r1, height - 1);
  w.c1 = std::min(w.c1, width - 1);
  return w;
}

std::vector<bool> parts_in_region(const ImageAnnotation& ann, const Box& region) {
  std::vector<bool> o(ann.visible.size(), false);
  for (std::size_t k = 0; k < o.size(); ++k) {
    if (!ann.visible[k]) continue;
    for (const auto& c : ann.centers[k]) {
      if (region.contains(c[0], c[1])) o[k] = true;
    }
  }
  return o;
}

ConsistencyReport consistency_from_observations(std::span<const PartObservations> per_proto, double mu) {
  if (!(mu > 0.0 && mu <= 1.0)) throw Error(ErrorKind::InvalidArgument, "mu must be in (0, 1]");
  ConsistencyReport r;
  if (per_proto.empty()) throw Error(ErrorKind::NoVisibleParts, "no prototypes");
  std::size_t consistent = 0;
  for (std::size_t j = 0; j < per_proto.size(); ++j) {
    const auto& obs = per_proto[j];
    std::vector<double> hits, seen;
    for (std::size_t i = 0; i < obs.u.size(); ++i) {
      hits.resize(obs.u[i].size(), 0.0);
      seen.resize(obs.u[i].size(), 0.0);
      for (std::size_t k = 0; k < obs.u[i].size(); ++k) {
        if (!obs.u[i][k]) continue;
        seen[k] += 1.0;
        if (obs.o[i][k]) hits[k] += 1.0;
      }
    }
    double best = -1.0;
    int best_k = -1;
    for (std::size_t k = 0; k < seen.size(); ++k) {
      if (seen[k] == 0.0) continue;
      double f = hits[k] / seen[k];
      if (f > best) {
        best = f;
        best_k = static_cast<int>(k);
      }
    }
    if (best_k < 0) throw Error(ErrorKind::NoVisibleParts, "prototype " + std::to_string(j) + " sees no visible part");
    r.max_frequency.push_back(best);
    r.best_part.push_back(best_k);
    if (best >= mu) ++consistent;
  }
  const double n = static_cast<double>(per_proto.size());
  r.s_con = static_cast<double>(consistent) / n;
  r.soft = std::accumulate(r.max_frequency.begin(), r.max_frequency.end(), 0.0) / n;
  return r;
}

namespace {

/// o of every (prototype, image-of-its-class) pair, images optionally
/// perturbed. Result is indexed [prototype][image order within class].
std::vector<PartObservations> observe(const ProtoModel& model, std::span<const LabeledImage> data,
                                      const Annotations& ann, const MetricConfig& cfg, bool noisy) {
  const auto& bank = model.bank();
  const auto h = model.input_shape()[1], w = model.input_shape()[2];
  // Per image: o for each prototype of its class.
  std::vector<std::vector<std::vector<bool>>> per_image(data.size());
  parallel_for(
      data.size(),
      [&](std::size_t i) {
        const auto& item = data[i];
        const auto& a = ann.at(item.id);
        const auto protos = bank.prototypes_of(item.label);
        // Without noise every prototype sees the same embedding.
        Tensor z = noisy ? Tensor{} : model.embed(item.image);
        for (auto j : protos) {
          if (noisy) z = model.embed(add_gaussian_noise(item.image, cfg.sigma, stability_seed(cfg.seed, j, item.id)));
          Box box = box_from_embedding(model, z, j, cfg.method);
          per_image[i].push_back(parts_in_region(a, centered_window(box, cfg.window_h, cfg.window_w, h, w)));
        }
      },
      cfg.threads);
  std::vector<PartObservations> out(bank.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto protos = bank.prototypes_of(data[i].label);
    const auto& a = ann.at(data[i].id);
    for (std::size_t t = 0; t < protos.size(); ++t) {
      out[protos[t]].o.push_back(per_image[i][t]);
      out[protos[t]].u.push_back(a.visible);
    }
  }
  for (std::size_t j = 0; j < bank.size(); ++j) {
    if (out[j].o.empty()) {
      throw Error(ErrorKind::NoVisibleParts, "class " + std::to_string(bank.class_of(j)) + " of prototype " +
                                                 std::to_string(j) + " has no annotated images");
    }
  }
  return out;
}

}  // namespace

ConsistencyReport consistency(const ProtoModel& model, std::span<const LabeledImage> data, const Annotations& ann,
                              const MetricConfig& cfg) {
  return consistency_from_observations(observe(model, data, ann, cfg, false), cfg.mu);
}

std::uint64_t stability_seed(std::uint64_t master, std::size_t proto, const std::string& image_id) {
  return derive_seed(master, {static_cast<std::uint64_t>(proto), fnv1a(image_id)});
}

Tensor add_gaussian_noise(const Tensor& image, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw Error(ErrorKind::InvalidArgument, "sigma must be >= 0");
  if (sigma == 0.0) return image;
  std::mt19937_64 rng(seed);
  Tensor out = image;
  // Box-Muller on platform-independent uniforms.
  for (auto& v : out.data()) {
    const double u1 = 1.0 - uniform01(rng);  // (0, 1]
    const double u2 = uniform01(rng);
    const double n = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    v = static_cast<float>(v + sigma * n);
  }
  return out;
}

StabilityReport stability(const ProtoModel& model, std::span<const LabeledImage> data, const Annotations& ann,
                          const MetricConfig& cfg) {
  if (!(cfg.sigma >= 0.0)) throw Error(ErrorKind::InvalidArgument, "sigma must be >= 0");
  auto clean = observe(model, data, ann, cfg, false);
  auto noisy = cfg.sigma == 0.0 ? clean : observe(model, data, ann, cfg, true);
  StabilityReport r;
  for (std::size_t j = 0; j < clean.size(); ++j) {
    std::size_t agree = 0;
    for (std::size_t i = 0; i < clean[j].o.size(); ++i) {
      if (clean[j].o[i] == noisy[j].o[i]) ++agree;
    }
    r.per_prototype.push_back(static_cast<double>(agree) / static_cast<double>(clean[j].o.size()));
  }
  r.s_sta = std::accumulate(r.per_prototype.begin(), r.per_prototype.end(), 0.0) /
            static_cast<double>(r.per_prototype.size());
  return r;
}

// ---------------------------------------------------------------------------
// Pareto front

bool dominates(const ParetoPoint& a, const ParetoPoint& b) {
  return a.mrf <= b.mrf && a.accuracy >= b.accuracy && (a.mrf < b.mrf || a.accuracy > b.accuracy);
}

std::vector<ParetoPoint> pareto_front(std::span<const ParetoPoint> points) {
  if (points.empty()) throw Error(ErrorKind::InvalidArgument, "empty point set");
  for (const auto& p : points) {
    if (!(p.mrf >= 0.0 && p.mrf <= 100.0 && p.accuracy >= 0.0 && p.accuracy <= 100.0)) {
      throw Error(ErrorKind::InvalidArgument, "point '" + p.label + "' outside [0, 100]");
    }
  }
  std::vector<std::size_t> idx(points.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return points[a].mrf < points[b].mrf; });
  // Sweep groups of equal mrf: a point survives iff it has the group's best
  // accuracy and beats every point with strictly smaller mrf.
  std::vector<bool> keep(points.size(), false);
  double best_before = -1.0;
  for (std::size_t g = 0; g < idx.size();) {
    std::size_t e = g;
    double group_best = -1.0;
    while (e < idx.size() && points[idx[e]].mrf == points[idx[g]].mrf) {
      group_best = std::max(group_best, points[idx[e]].accuracy);
      ++e;
    }
    if (group_best > best_before) {
      for (std::size_t t = g; t < e; ++t) keep[idx[t]] = points[idx[t]].accuracy == group_best;
    }
    best_before = std::max(best_before, group_best);
    g = e;
  }
  std::vector<ParetoPoint> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (keep[i]) out.push_back(points[i]);
  }
  return out;
}

std::vector<ParetoPoint> parse_pareto_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  auto fail = [](const std::string& m) { return Error(ErrorKind::MalformedInput, "pareto csv: " + m); };
  auto trim = [](std::string s) {
    auto b = s.find_first_not_of(" \t\r"), e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
  };
  auto split = [&](const std::string& l) {
    std::vector<std::string> f;
    std::stringstream ss(l);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(trim(cell));
    return f;
  };
  if (!std::getline(in, line)) throw fail("empty input");
  auto header = split(line);
  auto col = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw fail("missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto cl = col("label"), cm = col("mrf"), ca = col("accuracy");
  std::vector<ParetoPoint> pts;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto f = split(line);
    if (f.size() != header.size()) throw fail("line " + std::to_string(lineno) + " has " + std::to_string(f.size()) + " fields");
    try {
      std::size_t used_m = 0, used_a = 0;
      double m = std::stod(f[cm], &used_m), a = std::stod(f[ca], &used_a);
      if (used_m != f[cm].size() || used_a != f[ca].size()) throw std::invalid_argument("trailing");
      pts.push_back({f[cl], m, a});
    } catch (const std::logic_error&) {
      throw fail("line " + std::to_string(lineno) + ": bad number");
    }
  }
  return pts;
}

}  // namespace pixrf
