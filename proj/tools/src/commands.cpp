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

#include "commands.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "pixrf/functional_rf.hpp"
#include "pixrf/graph_ir.hpp"
#include "pixrf/pixel_mapping.hpp"
#include "pixrf/random.hpp"
#include "pixrf/simcheck.hpp"
#include "pixrf/tensor_io.hpp"

namespace pixrf::cli {

using nlohmann::json;

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::size_t> select_prototypes(const ProtoModel& m, const std::vector<std::int64_t>& wanted) {
  std::vector<std::size_t> out;
  if (wanted.empty()) {
    out.resize(m.bank().size());
    std::iota(out.begin(), out.end(), std::size_t{0});
    return out;
  }
  for (auto j : wanted) {
    if (j < 0 || static_cast<std::size_t>(j) >= m.bank().size()) {
      throw Error(ErrorKind::InvalidArgument, "prototype " + std::to_string(j) + " out of range");
    }
    out.push_back(static_cast<std::size_t>(j));
  }
  return out;
}

std::string pgm_path(const std::string& base, const std::string& image, std::size_t proto) {
  return base + "." + image + ".proto" + std::to_string(proto) + ".pgm";
}

void check_render(const std::string& render, const std::string& heatmaps) {
  if (render.empty()) return;
  if (render != "pgm") throw Error(ErrorKind::InvalidArgument, "--render supports only pgm");
  if (heatmaps.empty()) throw Error(ErrorKind::InvalidArgument, "--render needs --heatmaps for the output location");
}

DedupMode parse_dedup(const std::string& s) {
  if (s == "none") return DedupMode::None;
  if (s == "patch") return DedupMode::Patch;
  if (s == "image") return DedupMode::Image;
  throw Error(ErrorKind::InvalidArgument, "--dedup must be none, patch or image");
}

json unit_json(const ProtoModel& m, std::size_t j, const UnitResult& u) {
  const auto& pd = m.bank().proto_dims();
  auto region = rf_localize(m.rf(), m.embed_node(), u.row, u.col, pd[1], pd[2]);
  return {{"prototype", j},
          {"class", m.bank().class_of(j)},
          {"score", u.score},
          {"distance", u.distance},
          {"row", u.row},
          {"col", u.col},
          {"region", slices_json(region)},
          {"box", box_json(bounding_box(region))}};
}

}  // namespace

void cmd_rf(const RfArgs& a, const Common& c) {
  GraphIR g = load_graph(a.graph);
  if (!a.input_size.empty()) {
    auto [h, w] = parse_window(a.input_size);
    g = build_graph(g.name(), {g.input_shape()[0], h, w}, g.nodes());
  }
  const RFMap rf = functional_rf(g);
  json nodes = json::array();
  for (const auto& n : g.nodes()) {
    if (!a.node.empty() && n.id != a.node) continue;
    auto st = mean_receptive_field(rf, n.id);
    nodes.push_back({{"id", n.id},
                     {"op", std::string(to_string(n.op))},
                     {"shape", n.shape},
                     {"mean_rf_pct", st.mean_pct},
                     {"min_rf_pct", st.min_pct},
                     {"max_rf_pct", st.max_pct}});
  }
  if (!a.node.empty() && nodes.empty()) throw Error(ErrorKind::UnknownNode, "no node '" + a.node + "'");
  emit({{"graph", g.name()}, {"input_shape", g.input_shape()}, {"distinct_fields", rf.table().size()}, {"nodes", nodes}},
       c);
}

void cmd_explain(const ExplainArgs& a, const Common& c) {
  check_render(a.render, a.heatmaps);
  const auto model = a.bundle.load();
  const auto images = load_images(a.image, "");
  const auto& pd = model.bank().proto_dims();
  json out = json::array();
  std::vector<NamedTensor> maps;
  for (const auto& im : images) {
    const auto inf = model.infer(im.image);
    const int pred = inf.predicted();
    auto protos = model.bank().prototypes_of(pred);
    std::stable_sort(protos.begin(), protos.end(),
                     [&](std::size_t x, std::size_t y) { return inf.units[x].score > inf.units[y].score; });
    if (a.top_k >= 0 && protos.size() > static_cast<std::size_t>(a.top_k)) protos.resize(static_cast<std::size_t>(a.top_k));
    json top = json::array();
    for (auto j : protos) {
      top.push_back(unit_json(model, j, inf.units[j]));
      if (!a.heatmaps.empty()) {
        auto hm = rf_heatmap(model.rf(), model.embed_node(), model.similarity_map(inf.embedding, j), pd[1], pd[2]);
        if (a.render == "pgm") write_pgm(pgm_path(a.heatmaps, im.id, j), hm.values);
        maps.push_back({im.id + ".proto" + std::to_string(j), std::move(hm.values)});
      }
    }
    out.push_back({{"image", im.id}, {"predicted", pred}, {"logits", inf.logits}, {"top", top}});
  }
  if (!a.heatmaps.empty()) save_container(a.heatmaps, maps);
  emit({{"explanations", out}}, c);
}

void cmd_localize(const LocalizeArgs& a, const Common& c) {
  check_render(a.render, a.heatmaps);
  const auto model = a.bundle.load();
  const auto method = parse_map_method(a.method);
  const auto images = load_images(a.image, "");
  const auto protos = select_prototypes(model, a.prototypes);
  const auto& pd = model.bank().proto_dims();
  GaussianKernelCfg kcfg{!a.no_kernel};
  json out = json::array();
  std::vector<NamedTensor> maps;
  for (const auto& im : images) {
    const auto z = model.embed(im.image);
    for (auto j : protos) {
      const auto s = model.similarity_map(z, j);
      const auto u = prototype_unit(s);
      HeatMap hm = method == MapMethod::Rf
                       ? rf_heatmap(model.rf(), model.embed_node(), s, pd[1], pd[2], kcfg)
                       : upsample_heatmap(s, model.input_shape()[1], model.input_shape()[2]);
      json rec = unit_json(model, j, u);
      rec["image"] = im.id;
      rec["method"] = std::string(to_string(method));
      if (method == MapMethod::Upsample) {
        const Box b = top_percent_bbox(hm);
        rec["region"] = slices_json(box_slices(b));
        rec["box"] = box_json(b);
      }
      out.push_back(rec);
      if (!a.heatmaps.empty()) {
        if (a.render == "pgm") write_pgm(pgm_path(a.heatmaps, im.id, j), hm.values);
        maps.push_back({im.id + ".proto" + std::to_string(j), std::move(hm.values)});
      }
    }
  }
  if (!a.heatmaps.empty()) save_container(a.heatmaps, maps);
  emit({{"localizations", out}}, c);
}

void cmd_replace(const ReplaceArgs& a, const Common& c) {
  if (a.out_bank.empty()) throw Error(ErrorKind::InvalidArgument, "replace needs --out-bank");
  if (a.labels.empty()) throw Error(ErrorKind::InvalidArgument, "replace needs --labels");
  const auto model = a.bundle.load();
  const auto images = load_images(a.images, a.labels);
  std::vector<LabeledEmbedding> data;
  for (const auto& im : images) data.push_back({im.id, im.label, model.embed(im.image)});
  const auto bank = replace_prototypes(model.bank(), data, model.similarity_config(), parse_dedup(a.dedup));
  save_bank(a.out_bank, bank);
  json protos = json::array();
  for (std::size_t j = 0; j < bank.size(); ++j) {
    const auto& pv = *bank.provenance(j);
    protos.push_back({{"prototype", j}, {"class", bank.class_of(j)}, {"image", pv.image_id}, {"row", pv.row},
                      {"col", pv.col}});
  }
  emit({{"bank", a.out_bank}, {"dedup", a.dedup}, {"prototypes", protos}}, c);
}

void cmd_rot(const RotArgs& a, const Common& c) {
  const auto model = a.bundle.load();
  const auto method = parse_map_method(a.method);
  const auto images = load_images(a.images, a.labels);
  RotConfig cfg;
  cfg.samples = a.samples;
  cfg.stride = a.stride;
  cfg.per_pixel = a.per_pixel;
  cfg.seed = c.seed;
  const auto hw = static_cast<double>(model.input_shape()[1] * model.input_shape()[2]);
  const auto& pd = model.bank().proto_dims();
  json runs = json::array();
  double ausc = 0.0, recovery = 0.0;
  std::size_t n = 0;
  for (const auto& im : images) {
    const auto z = model.embed(im.image);
    std::vector<std::size_t> protos;
    if (a.prototypes.empty()) {
      int cls = im.label >= 0 ? im.label : model.infer(im.image).predicted();
      protos = model.bank().prototypes_of(cls);
    } else {
      protos = select_prototypes(model, a.prototypes);
    }
    for (auto j : protos) {
      const auto s = model.similarity_map(z, j);
      const auto u = prototype_unit(s);
      HeatMap hm = method == MapMethod::Rf
                       ? rf_heatmap(model.rf(), model.embed_node(), s, pd[1], pd[2], GaussianKernelCfg{!a.no_kernel})
                       : upsample_heatmap(s, model.input_shape()[1], model.input_shape()[2]);
      const auto curve = relevance_ordering_test(model, im.image, j, hm, cfg, fnv1a(im.id));
      const auto region = rf_localize(model.rf(), model.embed_node(), u.row, u.col, pd[1], pd[2]);
      json rec = {{"image", im.id},
                  {"prototype", j},
                  {"ausc", curve.ausc},
                  {"pct_to_recovery", *curve.pct_to_recovery},
                  {"s_orig", curve.s_orig},
                  {"s_base", curve.s_base},
                  {"rf_fraction", static_cast<double>(union_area(region)) / hw}};
      if (a.curves) {
        rec["fractions"] = curve.fractions;
        rec["scores"] = curve.scores;
      }
      runs.push_back(rec);
      ausc += curve.ausc;
      recovery += *curve.pct_to_recovery;
      ++n;
    }
  }
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "no (image, prototype) pairs to test");
  emit({{"method", a.method},
        {"samples", a.samples},
        {"mean_ausc", ausc / static_cast<double>(n)},
        {"mean_pct_to_recovery", recovery / static_cast<double>(n)},
        {"runs", runs}},
       c);
}

void cmd_metrics(const MetricsArgs& a, const Common& c) {
  if (a.labels.empty() || a.annotations.empty()) {
    throw Error(ErrorKind::InvalidArgument, "metrics needs --labels and --annotations");
  }
  const auto model = a.bundle.load();
  const auto images = load_images(a.images, a.labels);
  const auto ann = load_annotations(a.annotations);
  MetricConfig cfg;
  cfg.mu = a.mu;
  cfg.sigma = a.sigma;
  std::tie(cfg.window_h, cfg.window_w) = parse_window(a.window);
  cfg.method = parse_map_method(a.method);
  cfg.seed = c.seed;
  const auto con = consistency(model, images, ann, cfg);
  const auto sta = stability(model, images, ann, cfg);
  json best = json::array();
  for (auto k : con.best_part) best.push_back(ann.parts.at(static_cast<std::size_t>(k)));
  emit({{"method", a.method},
        {"mu", cfg.mu},
        {"sigma", cfg.sigma},
        {"window", {cfg.window_h, cfg.window_w}},
        {"consistency", {{"s_con", con.s_con}, {"soft", con.soft}, {"max_frequency", con.max_frequency},
                         {"best_part", best}}},
        {"stability", {{"s_sta", sta.s_sta}, {"per_prototype", sta.per_prototype}}}},
       c);
}

void cmd_pareto(const ParetoArgs& a, const Common& c) {
  const auto pts = parse_pareto_csv(read_text(a.csv));
  const auto front = pareto_front(pts);
  json f = json::array(), dominated = json::array();
  for (const auto& p : front) f.push_back({{"label", p.label}, {"mrf", p.mrf}, {"accuracy", p.accuracy}});
  for (const auto& p : pts) {
    bool on = std::any_of(front.begin(), front.end(), [&](const ParetoPoint& q) {
      return q.label == p.label && q.mrf == p.mrf && q.accuracy == p.accuracy;
    });
    if (!on) dominated.push_back(p.label);
  }
  emit({{"front", f}, {"dominated", dominated}}, c);
}

void cmd_losses(const LossesArgs& a, const Common& c) {
  if (a.labels.empty()) throw Error(ErrorKind::InvalidArgument, "losses needs --labels");
  const auto model = a.bundle.load();
  const auto images = load_images(a.images, a.labels);
  std::vector<std::vector<double>> logits;
  std::vector<int> labels;
  std::vector<Tensor> embeddings;
  for (const auto& im : images) {
    auto inf = model.infer(im.image);
    logits.push_back(std::move(inf.logits));
    labels.push_back(im.label);
    embeddings.push_back(std::move(inf.embedding));
  }
  const auto l = evaluate_losses(logits, labels, model.bank(), embeddings, {a.lambda_cls, a.lambda_sep},
                                 model.similarity_config());
  emit({{"total", l.total}, {"xent", l.xent}, {"cls", l.cls}, {"sep", l.sep}, {"lambda_cls", a.lambda_cls},
        {"lambda_sep", a.lambda_sep}, {"samples", images.size()}},
       c);
}

void cmd_simcheck(const SimcheckArgs& a, const Common& c) {
  SimCheckConfig cfg;
  cfg.samples = a.samples;
  cfg.epsilon = a.epsilon;
  cfg.seed = c.seed;
  if (a.regions != "default") {
    cfg.regions.clear();
    std::stringstream ss(a.regions);
    std::string item;
    while (std::getline(ss, item, ',')) {
      auto colon = item.find(':');
      if (colon == std::string::npos) throw Error(ErrorKind::InvalidArgument, "region '" + item + "' is not lo:hi");
      try {
        cfg.regions.push_back({std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1))});
      } catch (const std::logic_error&) {
        throw Error(ErrorKind::InvalidArgument, "region '" + item + "' is not lo:hi");
      }
    }
  }
  const auto rows = simcheck(cfg);
  json table = json::array();
  bool all = true;
  for (const auto& r : rows) {
    table.push_back({{"dtype", r.dtype},
                     {"lo", r.region.lo},
                     {"hi", r.region.hi},
                     {"mse_original", r.mse_original},
                     {"mse_reformulated", r.mse_reformulated},
                     {"pct_improved", r.pct_improved}});
    all = all && r.mse_reformulated <= r.mse_original;
  }
  emit({{"samples", cfg.samples}, {"epsilon", cfg.epsilon}, {"reformulated_never_worse", all}, {"rows", table}}, c);
}

}  // namespace pixrf::cli
