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

// A prototypical-part model: backbone + add-on graph truncated at an
// embedding node, a prototype bank and the summation readout.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pixrf/functional_rf.hpp"
#include "pixrf/inference.hpp"
#include "pixrf/protopart.hpp"

namespace pixrf {

struct Inference {
  Tensor embedding;
  std::vector<UnitResult> units;
  std::vector<double> logits;

  int predicted() const;  // first argmax
};

class ProtoModel {
 public:
  /// Throws UnknownNode if \p embed_node is absent, ShapeMismatch if its
  /// output is not (D, H, W) or the bank's prototypes are not (D, ., .).
  ProtoModel(Network net, std::string embed_node, PrototypeBank bank, SimilarityConfig cfg = {});

  const Network& network() const noexcept { return net_; }
  const GraphIR& graph() const noexcept { return net_.graph(); }
  const std::string& embed_node() const noexcept { return embed_node_; }
  const PrototypeBank& bank() const noexcept { return bank_; }
  const SimilarityConfig& similarity_config() const noexcept { return cfg_; }
  const RFMap& rf() const noexcept { return rf_; }
  const Shape& embedding_shape() const;
  const Shape& input_shape() const noexcept { return net_.graph().input_shape(); }

  void set_bank(PrototypeBank bank);

  Tensor embed(const Tensor& x) const;
  SimilarityMap similarity_map(const Tensor& z, std::size_t proto) const;
  /// Score of one prototype on one image; the quantity the relevance test tracks.
  double prototype_score(const Tensor& x, std::size_t proto) const;
  Inference infer(const Tensor& x) const;

 private:
  void check_bank() const;

  Network net_;
  std::string embed_node_;
  PrototypeBank bank_;
  SimilarityConfig cfg_;
  RFMap rf_;
};

ProtoModel load_model(const std::filesystem::path& graph, const std::filesystem::path& weights,
                      const std::filesystem::path& bank, const std::string& embed_node, SimilarityConfig cfg = {});

}  // namespace pixrf
