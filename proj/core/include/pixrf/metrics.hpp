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

// Interpretability metrics: relevance ordering test (AUSC, %2R),
// part consistency, stability under input noise, and the Pareto front of
// (receptive field, accuracy) points.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pixrf/model.hpp"
#include "pixrf/pixel_mapping.hpp"

namespace pixrf {

struct RotConfig {
  int samples = 50;
  double stride = 0.01;    // fraction of pixels between evaluations
  bool per_pixel = false;  // evaluate after every restored pixel
  std::uint64_t seed = 0;
  unsigned threads = 0;  // 0 = hardware concurrency
};

struct ROTCurve {
  std::vector<double> fractions;
  std::vector<double> scores;
  double s_orig = 0.0;
  double s_base = 0.0;
  double ausc = 0.0;
  std::optional<double> pct_to_recovery;
};

/// Number of restored pixels at each evaluation: 0, then every stride of
/// the pixel count, then all pixels.
std::vector<std::int64_t> rot_steps(std::int64_t pixels, const RotConfig& cfg);

/// Pixel indices (row-major) sorted by descending heat, ties by index.
std::vector<std::int64_t> restore_order(const HeatMap& heat);

/// Seeded per-pixel uniform noise over [min(image), max(image)].
Tensor random_baseline(const Tensor& image, std::uint64_t seed);

/// One ROT run against one baseline image.
ROTCurve rot_single(const ProtoModel& model, const Tensor& image, std::size_t proto, const HeatMap& heat,
                    const Tensor& baseline, const RotConfig& cfg);

/// Mean of \p cfg.samples runs, baseline k seeded from (seed, proto, image
/// key, k). The mean curve is s_orig plus the mean offset from s_orig, so
/// its last point equals s_orig exactly; AUSC and %2R are means of the
/// per-run values. Throws DegenerateNormalization if s_orig == s_base.
ROTCurve relevance_ordering_test(const ProtoModel& model, const Tensor& image, std::size_t proto,
                                 const HeatMap& heat, const RotConfig& cfg, std::uint64_t image_key = 0);

/// Heat map of prototype \p proto on \p image using \p method.
HeatMap prototype_heatmap(const ProtoModel& model, const Tensor& image, std::size_t proto, MapMethod method,
                          const GaussianKernelCfg& kcfg = {});

/// Localization box of prototype \p proto on \p image: bounding box of the
/// argmin patch's field (rf) or the top-5% box (upsample).
Box localization_box(const ProtoModel& model, const Tensor& image, std::size_t proto, MapMethod method);

struct ImageAnnotation {
  std::vector<bool> visible;
  std::vector<std::vector<std::array<std::int64_t, 2>>> centers;  // per part; left/right parts may give two
};

struct Annotations {
  std::vector<std::string> parts;
  std::map<std::string, ImageAnnotation> images;

  const ImageAnnotation& at(const std::string& image_id) const;
};

Annotations parse_annotations(const std::string& json_text);
Annotations load_annotations(const std::filesystem::path& path);

struct MetricConfig {
  double mu = 0.8;
  double sigma = 0.2;
  std::int64_t window_h = 72;
  std::int64_t window_w = 72;
  MapMethod method = MapMethod::Rf;
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

/// window_h x window_w box centred on \p box's midpoint, clipped to the image.
Box centered_window(const Box& box, std::int64_t window_h, std::int64_t window_w, std::int64_t height,
                    std::int64_t width);

/// o: visible parts with a centre inside \p region.
std::vector<bool> parts_in_region(const ImageAnnotation& ann, const Box& region);

struct LabeledImage {
  std::string id;
  int label = 0;
  Tensor image;  // (C, H, W)
};

/// o and u of one prototype on each image of its class.
struct PartObservations {
  std::vector<std::vector<bool>> o;
  std::vector<std::vector<bool>> u;
};

struct ConsistencyReport {
  double s_con = 0.0;
  double soft = 0.0;
  std::vector<double> max_frequency;  // per prototype
  std::vector<int> best_part;         // per prototype
};

/// Per-part frequency sum(o_k) / sum(u_k) over images where part k is
/// visible; a prototype is consistent iff its max frequency >= mu. Throws
/// NoVisibleParts if no part is ever visible for some prototype.
ConsistencyReport consistency_from_observations(std::span<const PartObservations> per_proto, double mu);

ConsistencyReport consistency(const ProtoModel& model, std::span<const LabeledImage> data, const Annotations& ann,
                              const MetricConfig& cfg);

/// Noise seed for (prototype, image); image ids are hashed with FNV-1a.
std::uint64_t stability_seed(std::uint64_t master, std::size_t proto, const std::string& image_id);
Tensor add_gaussian_noise(const Tensor& image, double sigma, std::uint64_t seed);

struct StabilityReport {
  double s_sta = 0.0;
  std::vector<double> per_prototype;
};

StabilityReport stability(const ProtoModel& model, std::span<const LabeledImage> data, const Annotations& ann,
                          const MetricConfig& cfg);

struct ParetoPoint {
  std::string label;
  double mrf = 0.0;
  double accuracy = 0.0;
};

/// True iff \p a has mrf <= and accuracy >= those of \p b, strictly better in one.
bool dominates(const ParetoPoint& a, const ParetoPoint& b);

/// Non-dominated points in input order.
std::vector<ParetoPoint> pareto_front(std::span<const ParetoPoint> points);

/// CSV with header label,mrf,accuracy.
std::vector<ParetoPoint> parse_pareto_csv(const std::string& text);

}  // namespace pixrf
