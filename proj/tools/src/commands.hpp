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

#include <cstdint>
#include <string>
#include <vector>

#include "common.hpp"

namespace pixrf::cli {

struct RfArgs {
  std::string graph;
  std::string input_size;  // "224" or "HxW"
  std::string node;        // report only this node
};

struct ExplainArgs {
  BundleArgs bundle;
  std::string image;
  int top_k = 3;
  std::string render;
  std::string heatmaps;
};

struct LocalizeArgs {
  BundleArgs bundle;
  std::string image;
  std::vector<std::int64_t> prototypes;  // empty = all
  std::string method = "rf";
  bool no_kernel = false;
  std::string heatmaps;
  std::string render;
};

struct ReplaceArgs {
  BundleArgs bundle;
  std::string images;
  std::string labels;
  std::string dedup = "none";
  std::string out_bank;
};

struct RotArgs {
  BundleArgs bundle;
  std::string images;
  std::string labels;
  std::vector<std::int64_t> prototypes;  // empty = prototypes of the image's class
  std::string method = "rf";
  bool no_kernel = false;
  int samples = 50;
  double stride = 0.01;
  bool per_pixel = false;
  bool curves = false;
};

struct MetricsArgs {
  BundleArgs bundle;
  std::string images;
  std::string labels;
  std::string annotations;
  std::string method = "rf";
  double mu = 0.8;
  double sigma = 0.2;
  std::string window = "72";
};

struct ParetoArgs {
  std::string csv;
};

struct LossesArgs {
  BundleArgs bundle;
  std::string images;
  std::string labels;
  double lambda_cls = 0.0;
  double lambda_sep = 0.0;
};

struct SimcheckArgs {
  std::string regions = "default";
  int samples = 20000;
  double epsilon = 1e-6;
};

void cmd_rf(const RfArgs& a, const Common& c);
void cmd_explain(const ExplainArgs& a, const Common& c);
void cmd_localize(const LocalizeArgs& a, const Common& c);
void cmd_replace(const ReplaceArgs& a, const Common& c);
void cmd_rot(const RotArgs& a, const Common& c);
void cmd_metrics(const MetricsArgs& a, const Common& c);
void cmd_pareto(const ParetoArgs& a, const Common& c);
void cmd_losses(const LossesArgs& a, const Common& c);
void cmd_simcheck(const SimcheckArgs& a, const Common& c);

}  // namespace pixrf::cli
