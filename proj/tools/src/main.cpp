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

#include <functional>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

using namespace pixrf::cli;

namespace {

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--out", c.out, "Write the JSON report here instead of stdout");
  sub->add_flag("--no-meta", c.no_meta, "Omit the meta block (tool version, time)");
  sub->add_option("--seed", c.seed, "Master random seed");
}

void add_bundle(CLI::App* sub, BundleArgs& b) {
  sub->add_option("--graph", b.graph, "Graph JSON")->required();
  sub->add_option("--weights", b.weights, "Weights NTSR container")->required();
  sub->add_option("--bank", b.bank, "Prototype bank NTSR (sidecar: <bank>.json)")->required();
  sub->add_option("--embed-node", b.embed_node, "Embedding node id")->capture_default_str();
  sub->add_option("--distance", b.distance, "cosine | l2")->capture_default_str();
  sub->add_option("--formulation", b.formulation, "reformulated | original")->capture_default_str();
  sub->add_option("--epsilon", b.epsilon, "Similarity epsilon")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pixrf: exact receptive fields and prototypical-part explanations"};
  app.require_subcommand(1);
  Common common;
  std::function<void()> run;

  RfArgs rf;
  auto* s = app.add_subcommand("rf", "Receptive-field report for every node of a graph");
  s->add_option("--graph", rf.graph, "Graph JSON")->required();
  s->add_option("--input-size", rf.input_size, "Override input size: N or HxW");
  s->add_option("--node", rf.node, "Report only this node");
  add_common(s, common);
  s->callback([&] { run = [&] { cmd_rf(rf, common); }; });

  ExplainArgs ex;
  s = app.add_subcommand("explain", "Top prototypes of the predicted class with their pixel regions");
  add_bundle(s, ex.bundle);
  s->add_option("--image,--images", ex.image, "NTSR container of (C,H,W) images")->required();
  s->add_option("--top-k", ex.top_k, "Prototypes per explanation")->capture_default_str();
  s->add_option("--heatmaps", ex.heatmaps, "Write receptive-field heat maps to this NTSR file");
  s->add_option("--render", ex.render, "Also render heat maps: pgm");
  add_common(s, common);
  s->callback([&] { run = [&] { cmd_explain(ex, common); }; });

  LocalizeArgs lo;
  s = app.add_subcommand("localize", "Heat map and localization region per prototype");
  add_bundle(s, lo.bundle);
  s->add_option("--image,--images", lo.image, "NTSR container of (C,H,W) images")->required();
  s->add_option("--prototype", lo.prototypes, "Prototype indices (default: all)");
  s->add_option("--method", lo.method, "rf | upsample")->capture_default_str();
  s->add_flag("--no-kernel", lo.no_kernel, "Disable Gaussian weighting of rf heat maps");
  s->add_option("--heatmaps", lo.heatmaps, "Write heat maps to this NTSR file");
  s->add_option("--render", lo.render, "Also render heat maps: pgm");
  add_common(s, common);
  s->callback([&] { run = [&] { cmd_localize(lo, common); }; });

  ReplaceArgs re;
  s = app.add_subcommand("replace", "Replace prototypes with their nearest same-class embedded patches");
  add_bundle(s, re.bundle);
  s->add_option("--images", re.images, "NTSR container of training images")->required();
  s->add_option("--labels", re.labels, "JSON {image id: class}")->required();
  s->add_option("--dedup", re.dedup, "none | patch | image")->capture_default_str();
  s->add_option("--out-bank", re.out_bank, "Output bank path")->required();
  add_common(s, common);
  s->callback([&] { run = [&] { cmd_replace(re, common); }; });

  RotArgs rot;
  s = app.add_subcommand("rot", "Relevance ordering test (AUSC, %2R)");
  add_bundle(s, rot.bundle);
  s->add_option("--image,--images", rot.images, "NTSR container of images")->required();
  s->add_option("--labels", rot.labels, "JSON {image id: class}; default: predicted class");
  s->add_option("--prototype", rot.prototypes, "Prototype indices (default: the image's class)");
  s->add_option("--method", rot.method, "rf | upsample")->capture_default_str();
  s->add_flag("--no-kernel", rot.no_kernel, "Disable Gaussian weighting of rf heat maps");
  s->add_option("--samples", rot.samples, "Random baselines per pair")->capture_default_str();
  s->add_option("--stride", rot.stride, "Fraction of pixels between evaluations")->capture_default_str();
  s->add_flag("--per-pixel", rot.per_pixel, "Evaluate after every pixel");
  s->add_flag("--curves", rot.curves, "Include the curves in the report");
  add_common(s, common);
  s->callback([&] { run = [&] { cmd_rot(rot, common); }; });

  MetricsArgs me;
  s = app.add_subcommand("metrics", "Consistency and stability");
  add_bundle(s, me.bundle);
  s->add_option("--images", me.images, "NTSR container of images")->required();
  s->add_option("--labels", me.labels, "JSON {image id: class}")->required();
  s->add_option("--annotations", me.annotations, "Part annotations JSON")->required();
  s->add_option("--method", me.method, "rf | upsample")->capture_default_str();
  s->add_option("--mu", me.mu, "Consistency threshold")->capture_default_str();
  s->add_option("--sigma", me.sigma, "Stability noise std")->capture_default_str();
  s->add_option("--window", me.window, "Window N or HxW")->capture_default_str();
  add_common(s, common);
  s->callback([&] { run = [&] { cmd_metrics(me, common); }; });

  ParetoArgs pa;
  s = app.add_subcommand("pareto", "Pareto front of (mrf, accuracy) points");
  s->add_option("--csv", pa.csv, "CSV with columns label,mrf,accuracy")->required();
  add_common(s, common);
  s->callback([&] { run = [&] { cmd_pareto(pa, common); }; });

  LossesArgs ls;
  s = app.add_subcommand("losses", "Evaluate cross-entropy, cluster and separation losses");
  add_bundle(s, ls.bundle);
  s->add_option("--images", ls.images, "NTSR container of images")->required();
  s->add_option("--labels", ls.labels, "JSON {image id: class}")->required();
  s->add_option("--lambda-cls", ls.lambda_cls, "Cluster loss weight")->capture_default_str();
  s->add_option("--lambda-sep", ls.lambda_sep, "Separation loss weight")->capture_default_str();
  add_common(s, common);
  s->callback([&] { run = [&] { cmd_losses(ls, common); }; });

  SimcheckArgs sc;
  s = app.add_subcommand("simcheck", "Numerical error of the two similarity forms");
  s->add_option("--regions", sc.regions, "default or lo:hi,lo:hi,...")->capture_default_str();
  s->add_option("--samples", sc.samples, "Samples per region")->capture_default_str();
  s->add_option("--epsilon", sc.epsilon, "Similarity epsilon")->capture_default_str();
  add_common(s, common);
  s->callback([&] { run = [&] { cmd_simcheck(sc, common); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kParse;
  }
  common.command = app.get_subcommands().front()->get_name();
  try {
    run();
  } catch (const pixrf::Error& e) {
    std::cerr << "pixrf " << common.command << ": " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "pixrf " << common.command << ": " << e.what() << '\n';
    return kParse;
  }
  return kOk;
}
