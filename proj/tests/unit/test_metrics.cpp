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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pixrf/error.hpp"
#include "pixrf/metrics.hpp"
#include "pixrf/tensor_io.hpp"
#include "test_support.hpp"

using namespace pixrf;
using pixrf::testing::error_kind;
using pixrf::testing::fixture;

namespace {

const ProtoModel& toy_model() {
  static const ProtoModel m = load_model(fixture("toy/graph.json"), fixture("toy/weights.ntsr"),
                                         fixture("toy/bank.ntsr"), "embed");
  return m;
}

std::vector<LabeledImage> toy_images() {
  std::vector<LabeledImage> out;
  for (auto& t : load_container(fixture("toy/images.ntsr"))) {
    int label = t.name.rfind("c1_", 0) == 0 ? 1 : 0;
    out.push_back({t.name, label, std::move(t.tensor)});
  }
  return out;
}

// Embedding ignores the image: 1x1 conv with zero weights and a bias.
ProtoModel constant_model() {
  Node in;
  in.id = "input";
  Node c;
  c.id = "embed";
  c.op = OpKind::Conv2d;
  c.inputs = {"input"};
  c.attrs.out_channels = 2;
  auto g = build_graph("const", {1, 8, 8}, {in, c});
  WeightStore w;
  w.set("embed", "weight", Tensor({2, 1, 1, 1}));
  w.set("embed", "bias", Tensor({2}, std::vector<float>{0.5f, 0.25f}));
  PrototypeBank bank({Tensor({2, 1, 1}, std::vector<float>{1.0f, 0.0f}), Tensor({2, 1, 1}, std::vector<float>{0.0f, 1.0f})},
                     {0, 1}, 2);
  return ProtoModel(Network(g, w), "embed", bank);
}

PartObservations obs(std::vector<std::vector<bool>> o, std::vector<std::vector<bool>> u) { return {o, u}; }

}  // namespace

TEST_CASE("rot grid and restore order") {
  RotConfig cfg;
  cfg.stride = 0.1;
  CHECK(rot_steps(100, cfg) == std::vector<std::int64_t>{0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100});
  cfg.stride = 0.3;
  CHECK(rot_steps(10, cfg) == std::vector<std::int64_t>{0, 3, 6, 9, 10});
  cfg.per_pixel = true;
  CHECK(rot_steps(4, cfg) == std::vector<std::int64_t>{0, 1, 2, 3, 4});

  HeatMap h{Tensor({2, 3}, std::vector<float>{1, 3, 1, 3, 2, 1}), MapMethod::Rf, 0, ""};
  CHECK(restore_order(h) == std::vector<std::int64_t>{1, 3, 4, 0, 2, 5});
}

TEST_CASE("random baseline stays within the image range and is seeded") {
  std::mt19937_64 rng(1);
  auto img = testing::random_tensor(rng, {3, 5, 5}, -2.0f, 0.5f);
  auto a = random_baseline(img, 7);
  CHECK(bit_equal(a, random_baseline(img, 7)));
  CHECK_FALSE(bit_equal(a, random_baseline(img, 8)));
  for (float v : a.data()) {
    CHECK(v >= *std::min_element(img.data().begin(), img.data().end()));
    CHECK(v <= *std::max_element(img.data().begin(), img.data().end()));
  }
}

TEST_CASE("rot_single matches a brute-force restore loop") {
  const auto& model = toy_model();
  auto images = toy_images();
  const auto& img = images[3].image;
  const std::size_t proto = 1;
  auto heat = prototype_heatmap(model, img, proto, MapMethod::Rf);
  auto base = random_baseline(img, 99);
  RotConfig cfg;
  cfg.stride = 0.05;
  auto curve = rot_single(model, img, proto, heat, base, cfg);

  const std::int64_t n = 24 * 24;
  std::vector<std::int64_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return heat.values[a] > heat.values[b]; });
  REQUIRE(curve.fractions.size() == curve.scores.size());
  for (std::size_t i = 0; i < curve.fractions.size(); ++i) {
    const auto k = static_cast<std::int64_t>(std::llround(curve.fractions[i] * n));
    Tensor x = base;
    for (std::int64_t t = 0; t < k; ++t)
      for (std::int64_t c = 0; c < 3; ++c) x[c * n + order[t]] = img[c * n + order[t]];
    CHECK(curve.scores[i] == model.prototype_score(x, proto));
    if (i > 0) CHECK(curve.fractions[i] > curve.fractions[i - 1]);
  }
  CHECK(curve.fractions.front() == 0.0);
  CHECK(curve.fractions.back() == 1.0);
  CHECK(curve.scores.back() == model.prototype_score(img, proto));
  CHECK(curve.s_orig == curve.scores.back());
  CHECK(curve.s_base == model.prototype_score(base, proto));

  double ausc = 0.0;
  for (double s : curve.scores) ausc += (s - curve.s_base) / (curve.s_orig - curve.s_base);
  CHECK(curve.ausc == doctest::Approx(ausc / curve.scores.size()));
  REQUIRE(curve.pct_to_recovery.has_value());
  for (std::size_t i = 0; i < curve.scores.size(); ++i) {
    if (curve.fractions[i] < *curve.pct_to_recovery) CHECK(curve.scores[i] < curve.s_orig - 1e-6);
  }
}

TEST_CASE("rot is deterministic and thread-count independent") {
  const auto& model = toy_model();
  auto images = toy_images();
  const auto& img = images[14].image;
  auto heat = prototype_heatmap(model, img, 4, MapMethod::Upsample);
  RotConfig cfg;
  cfg.samples = 3;
  cfg.stride = 0.05;
  cfg.seed = 5;
  auto a = relevance_ordering_test(model, img, 4, heat, cfg, 14);
  cfg.threads = 1;
  auto b = relevance_ordering_test(model, img, 4, heat, cfg, 14);
  CHECK(a.scores == b.scores);
  CHECK(a.ausc == b.ausc);
  CHECK(a.pct_to_recovery == b.pct_to_recovery);
  CHECK(a.scores.back() == a.s_orig);
}

TEST_CASE("rf mapping recovers within the argmin field fraction") {
  const auto& model = toy_model();
  auto images = toy_images();
  RotConfig cfg;
  cfg.samples = 2;
  cfg.stride = 0.01;
  for (std::size_t i : {0u, 7u, 13u, 20u}) {
    for (std::size_t j : {0u, 3u}) {
      const auto& img = images[i].image;
      auto heat = prototype_heatmap(model, img, j, MapMethod::Rf, {false});
      auto unit = prototype_unit(model.similarity_map(model.embed(img), j));
      auto field = rf_localize(model.rf(), "embed", unit.row, unit.col);
      const double frac = static_cast<double>(union_area(field)) / (24.0 * 24.0);
      auto curve = relevance_ordering_test(model, img, j, heat, cfg, i);
      CHECK(*curve.pct_to_recovery <= frac + cfg.stride + 1e-12);
    }
  }
}

TEST_CASE("constant embedding: degenerate ROT, perfect stability") {
  auto model = constant_model();
  Tensor img({1, 8, 8});
  for (std::int64_t i = 0; i < 64; ++i) img[i] = static_cast<float>(i % 7);
  auto heat = prototype_heatmap(model, img, 0, MapMethod::Rf);
  RotConfig cfg;
  cfg.samples = 1;
  CHECK(error_kind([&] { relevance_ordering_test(model, img, 0, heat, cfg); }) ==
        ErrorKind::DegenerateNormalization);

  auto ann = parse_annotations(R"({"parts":["a","b"],"images":{
    "x":{"visible":[true,true],"centers":[[1,1],[6,6]]},
    "y":{"visible":[true,false],"centers":[[2,5],null]}}})");
  std::vector<LabeledImage> data{{"x", 0, img}, {"y", 1, img}};
  MetricConfig mc;
  mc.window_h = mc.window_w = 4;
  mc.seed = 3;
  CHECK(stability(model, data, ann, mc).s_sta == 1.0);
}

TEST_CASE("consistency from observations") {
  // Always covering part 1 whenever visible.
  auto always = obs({{false, true}, {false, false}, {true, true}}, {{true, true}, {true, false}, {true, true}});
  auto r = consistency_from_observations(std::span(&always, 1), 0.8);
  CHECK(r.max_frequency[0] == 1.0);
  CHECK(r.best_part[0] == 1);
  CHECK(r.s_con == 1.0);

  auto alt = obs({{true, false}, {false, true}, {true, false}, {false, true}},
                 {{true, true}, {true, true}, {true, true}, {true, true}});
  auto a = consistency_from_observations(std::span(&alt, 1), 0.8);
  CHECK(a.s_con == 0.0);
  CHECK(a.soft == 0.5);

  // Hand count: part 0 hit 2 of 3 visible, part 1 hit 1 of 1, part 2 never visible.
  auto hand = obs({{true, false, false}, {true, true, false}, {false, false, false}},
                  {{true, false, false}, {true, true, false}, {true, false, false}});
  std::vector<PartObservations> two{hand, alt};
  two[1].o = {{true, false, false}, {false, false, false}, {false, false, false}};
  two[1].u = {{true, true, true}, {true, true, true}, {true, true, true}};
  auto h = consistency_from_observations(two, 0.8);
  CHECK(h.max_frequency[0] == 1.0);
  CHECK(h.best_part[0] == 1);
  CHECK(h.max_frequency[1] == doctest::Approx(1.0 / 3.0));
  CHECK(h.s_con == 0.5);
  CHECK(h.soft == doctest::Approx((1.0 + 1.0 / 3.0) / 2.0));

  auto blind = obs({{false}}, {{false}});
  CHECK(error_kind([&] { consistency_from_observations(std::span(&blind, 1), 0.8); }) == ErrorKind::NoVisibleParts);
}

TEST_CASE("windows and containment") {
  CHECK(centered_window(Box{10, 10, 20, 20}, 4, 4, 100, 100) == Box{13, 13, 16, 16});
  CHECK(centered_window(Box{0, 0, 3, 3}, 10, 10, 100, 100) == Box{0, 0, 5, 5});
  CHECK(centered_window(Box{98, 0, 99, 1}, 6, 6, 100, 100) == Box{95, 0, 99, 2});
  ImageAnnotation ia{{true, false, true}, {{{5, 5}}, {}, {{0, 0}, {9, 9}}}};
  CHECK(parts_in_region(ia, Box{4, 4, 9, 9}) == std::vector<bool>{true, false, true});
  CHECK(parts_in_region(ia, Box{6, 6, 8, 8}) == std::vector<bool>{false, false, false});
}

TEST_CASE("toy consistency equals composing the pieces by hand") {
  const auto& model = toy_model();
  auto all = toy_images();
  std::vector<LabeledImage> data(all.begin(), all.begin() + 3);
  data.insert(data.end(), all.begin() + 12, all.begin() + 14);
  auto ann = load_annotations(fixture("toy/annotations.json"));
  MetricConfig mc;
  mc.window_h = mc.window_w = 8;
  auto rep = consistency(model, data, ann, mc);

  for (std::size_t j = 0; j < model.bank().size(); ++j) {
    std::vector<double> hit(3, 0.0), seen(3, 0.0);
    for (const auto& item : data) {
      if (item.label != model.bank().class_of(j)) continue;
      auto box = localization_box(model, item.image, j, MapMethod::Rf);
      auto win = centered_window(box, 8, 8, 24, 24);
      const auto& a = ann.at(item.id);
      for (std::size_t k = 0; k < 3; ++k) {
        if (!a.visible[k]) continue;
        seen[k] += 1;
        for (auto c : a.centers[k])
          if (win.contains(c[0], c[1])) {
            hit[k] += 1;
            break;
          }
      }
    }
    double best = 0.0;
    for (std::size_t k = 0; k < 3; ++k)
      if (seen[k] > 0) best = std::max(best, hit[k] / seen[k]);
    CHECK(rep.max_frequency[j] == doctest::Approx(best));
  }

  double prev = 2.0;
  for (double mu : {0.1, 0.3, 0.5, 0.7, 0.8, 0.9, 1.0}) {
    mc.mu = mu;
    double s = consistency(model, data, ann, mc).s_con;
    CHECK(s >= 0.0);
    CHECK(s <= prev);
    prev = s;
  }
}

TEST_CASE("stability: zero noise and brute-force rerun") {
  const auto& model = toy_model();
  auto all = toy_images();
  std::vector<LabeledImage> data{all[0], all[1], all[12], all[13]};
  auto ann = load_annotations(fixture("toy/annotations.json"));
  MetricConfig mc;
  mc.window_h = mc.window_w = 8;
  mc.sigma = 0.0;
  CHECK(stability(model, data, ann, mc).s_sta == 1.0);
  CHECK(bit_equal(add_gaussian_noise(all[0].image, 0.0, 4), all[0].image));

  mc.sigma = 0.2;
  mc.seed = 17;
  auto rep = stability(model, data, ann, mc);
  double total = 0.0;
  for (std::size_t j = 0; j < model.bank().size(); ++j) {
    double agree = 0, count = 0;
    for (const auto& item : data) {
      if (item.label != model.bank().class_of(j)) continue;
      const auto& a = ann.at(item.id);
      auto clean = parts_in_region(a, centered_window(localization_box(model, item.image, j, MapMethod::Rf), 8, 8, 24, 24));
      auto noisy_img = add_gaussian_noise(item.image, 0.2, stability_seed(17, j, item.id));
      auto noisy = parts_in_region(a, centered_window(localization_box(model, noisy_img, j, MapMethod::Rf), 8, 8, 24, 24));
      agree += clean == noisy;
      count += 1;
    }
    CHECK(rep.per_prototype[j] == doctest::Approx(agree / count));
    total += agree / count;
  }
  CHECK(rep.s_sta == doctest::Approx(total / model.bank().size()));
  CHECK(rep.s_sta >= 0.0);
  CHECK(rep.s_sta <= 1.0);
}

TEST_CASE("gaussian noise statistics") {
  Tensor zero({1, 100, 100});
  auto n = add_gaussian_noise(zero, 0.2, 11);
  double m = 0, v = 0;
  for (float x : n.data()) m += x;
  m /= n.size();
  for (float x : n.data()) v += (x - m) * (x - m);
  v /= n.size();
  CHECK(std::abs(m) < 0.01);
  CHECK(std::abs(std::sqrt(v) - 0.2) < 0.01);
  CHECK(bit_equal(n, add_gaussian_noise(zero, 0.2, 11)));
}

TEST_CASE("pareto front") {
  std::vector<ParetoPoint> pix{{"vgg13@maxpool4", 9.69, 75.32},
                               {"vgg16@maxpool5", 52.5, 79.75},
                               {"vgg19@maxpool5", 70.4, 80.10},
                               {"full", 100, 81.76}};
  auto f = pareto_front(pix);
  REQUIRE(f.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(f[i].label == pix[i].label);
  pix.push_back({"weak", 100, 50});
  CHECK(pareto_front(pix).size() == 4);
  CHECK(dominates(pix[3], pix[4]));
  CHECK_FALSE(dominates(pix[0], pix[0]));

  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> u(0, 40);
  for (int t = 0; t < 20; ++t) {
    std::vector<ParetoPoint> pts;
    for (int i = 0; i < 100; ++i) pts.push_back({std::to_string(i), u(rng) * 2.5, u(rng) * 2.5});
    std::vector<std::string> want;
    for (const auto& a : pts) {
      bool dom = false;
      for (const auto& b : pts)
        dom = dom || ((b.mrf <= a.mrf && b.accuracy >= a.accuracy) && (b.mrf < a.mrf || b.accuracy > a.accuracy));
      if (!dom) want.push_back(a.label);
    }
    std::vector<std::string> got;
    for (const auto& p : pareto_front(pts)) got.push_back(p.label);
    CHECK(got == want);
    const double top = std::max_element(pts.begin(), pts.end(), [](auto& a, auto& b) { return a.accuracy < b.accuracy; })->accuracy;
    auto front = pareto_front(pts);
    CHECK(std::any_of(front.begin(), front.end(), [&](auto& p) { return p.accuracy == top; }));
  }

  auto parsed = parse_pareto_csv("label,mrf,accuracy\na,9.69,75.32\nb,100,81.76\n");
  REQUIRE(parsed.size() == 2);
  CHECK(parsed[1].label == "b");
  CHECK(parsed[0].mrf == 9.69);
  CHECK(error_kind([] { parse_pareto_csv("label,mrf,accuracy\na,x,1\n"); }).has_value());
}

TEST_CASE("annotation parsing") {
  auto a = parse_annotations(R"({"parts":["wing","eye"],"images":{
    "i":{"visible":[true,false],"centers":[[[1,2],[3,4]],null]}}})");
  REQUIRE(a.images.at("i").centers[0].size() == 2);
  CHECK(a.images.at("i").centers[0][1] == std::array<std::int64_t, 2>{3, 4});
  CHECK(error_kind([] { parse_annotations(R"({"parts":["a"],"images":{"i":{"visible":[true],"centers":[null]}}})"); }) ==
        ErrorKind::MalformedInput);
  CHECK(error_kind([] { parse_annotations("{"); }) == ErrorKind::MalformedInput);
  CHECK(error_kind([] { parse_annotations(R"({"parts":["a"],"images":{"i":{"visible":[],"centers":[]}}})"); }) ==
        ErrorKind::MalformedInput);
}
