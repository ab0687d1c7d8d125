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
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pixrf/error.hpp"
#include "pixrf/metrics.hpp"
#include "pixrf/model.hpp"

namespace pixrf::cli {

enum Exit : int { kOk = 0, kParse = 2, kAnalysis = 3, kInference = 4, kMetric = 5 };

int exit_code(ErrorKind kind);

/// Options shared by every command.
struct Common {
  std::string out;
  bool no_meta = false;
  std::uint64_t seed = 0;
  std::string command;
};

/// Prints (or writes to --out) the report, with a meta block unless --no-meta.
void emit(nlohmann::json report, const Common& common);

struct BundleArgs {
  std::string graph;
  std::string weights;
  std::string bank;
  std::string embed_node = "embed";
  std::string distance = "cosine";
  std::string formulation = "reformulated";
  double epsilon = 1e-6;

  SimilarityConfig similarity() const;
  ProtoModel load() const;
};

/// Every tensor of an NTSR container as an image, labelled from a JSON
/// {"id": label} file if given (otherwise label -1).
std::vector<LabeledImage> load_images(const std::string& path, const std::string& labels_path);

nlohmann::json box_json(const Box& b);
nlohmann::json slices_json(const SliceSet& s);

/// "72" or "72x64".
std::pair<std::int64_t, std::int64_t> parse_window(const std::string& s);

}  // namespace pixrf::cli
