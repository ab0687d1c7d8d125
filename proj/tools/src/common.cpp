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

#include "common.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "pixrf/tensor_io.hpp"

#ifndef PIXRF_VERSION
#define PIXRF_VERSION "0.0.0"
#endif

namespace pixrf::cli {

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedGraph:
    case ErrorKind::CycleDetected:
    case ErrorKind::UnknownOp:
    case ErrorKind::BadMagic:
    case ErrorKind::TruncatedFile:
    case ErrorKind::DuplicateName:
    case ErrorKind::MalformedInput:
    case ErrorKind::InvalidArgument:
    case ErrorKind::Io:
      return kParse;
    case ErrorKind::ShapeMismatch:
    case ErrorKind::UnknownNode:
    case ErrorKind::DimMismatch:
    case ErrorKind::EmptyAfterClip:
    case ErrorKind::PatchLargerThanEmbedding:
    case ErrorKind::GridMismatch:
    case ErrorKind::UnknownPosition:
    case ErrorKind::DegenerateGrid:
      return kAnalysis;
    case ErrorKind::MissingWeights:
    case ErrorKind::NonFiniteActivation:
    case ErrorKind::ZeroVector:
    case ErrorKind::InsufficientPatches:
    case ErrorKind::ClassWithoutPrototypes:
      return kInference;
    case ErrorKind::DegenerateNormalization:
    case ErrorKind::NoVisibleParts:
      return kMetric;
  }
  return kParse;
}

void emit(nlohmann::json report, const Common& common) {
  if (!common.no_meta) {
    auto now = std::chrono::system_clock::now();
    report["meta"] = {{"tool", "pixrf"},
                      {"version", PIXRF_VERSION},
                      {"command", common.command},
                      {"seed", common.seed},
                      {"unix_time", std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count()}};
  }
  const auto text = report.dump(2) + "\n";
  if (common.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(common.out);
  if (!f) throw Error(ErrorKind::Io, "cannot write " + common.out);
  f << text;
}

SimilarityConfig BundleArgs::similarity() const {
  SimilarityConfig c;
  if (distance == "cosine") {
    c.distance = Distance::Cosine;
  } else if (distance == "l2") {
    c.distance = Distance::L2Squared;
  } else {
    throw Error(ErrorKind::InvalidArgument, "--distance must be cosine or l2");
  }
  if (formulation == "reformulated") {
    c.formulation = Formulation::Reformulated;
  } else if (formulation == "original") {
    c.formulation = Formulation::Original;
  } else {
    throw Error(ErrorKind::InvalidArgument, "--formulation must be original or reformulated");
  }
  if (!(epsilon > 0.0)) throw Error(ErrorKind::InvalidArgument, "--epsilon must be positive");
  c.epsilon = epsilon;
  return c;
}

ProtoModel BundleArgs::load() const { return load_model(graph, weights, bank, embed_node, similarity()); }

std::vector<LabeledImage> load_images(const std::string& path, const std::string& labels_path) {
  std::map<std::string, int> labels;
  if (!labels_path.empty()) {
    std::ifstream in(labels_path);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + labels_path);
    try {
      labels = nlohmann::json::parse(in).get<std::map<std::string, int>>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::MalformedInput, labels_path + ": " + e.what());
    }
  }
  std::vector<LabeledImage> out;
  for (auto& t : load_container(path)) {
    int label = -1;
    if (!labels_path.empty()) {
      auto it = labels.find(t.name);
      if (it == labels.end()) throw Error(ErrorKind::MalformedInput, "no label for image '" + t.name + "'");
      label = it->second;
    }
    out.push_back({t.name, label, std::move(t.tensor)});
  }
  if (out.empty()) throw Error(ErrorKind::MalformedInput, path + " holds no images");
  return out;
}

nlohmann::json box_json(const Box& b) { return {{"r0", b.r0}, {"c0", b.c0}, {"r1", b.r1}, {"c1", b.c1}}; }

nlohmann::json slices_json(const SliceSet& s) { return nlohmann::json::parse(slice_set_to_json(s)); }

std::pair<std::int64_t, std::int64_t> parse_window(const std::string& s) {
  std::int64_t h = 0, w = 0;
  char x = 0;
  std::istringstream in(s);
  if (!(in >> h)) throw Error(ErrorKind::InvalidArgument, "bad --window '" + s + "'");
  if (in >> x) {
    if ((x != 'x' && x != 'X') || !(in >> w)) throw Error(ErrorKind::InvalidArgument, "bad --window '" + s + "'");
  } else {
    w = h;
  }
  if (h < 1 || w < 1) throw Error(ErrorKind::InvalidArgument, "--window must be positive");
  return {h, w};
}

}  // namespace pixrf::cli
