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

#include "pixrf/model.hpp"

#include <algorithm>

#include "pixrf/error.hpp"

namespace pixrf {

int Inference::predicted() const {
  if (logits.empty()) throw Error(ErrorKind::InvalidArgument, "no logits");
  return static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

ProtoModel::ProtoModel(Network net, std::string embed_node, PrototypeBank bank, SimilarityConfig cfg)
    : net_(std::move(net)), embed_node_(std::move(embed_node)), bank_(std::move(bank)), cfg_(cfg) {
  if (!(cfg_.epsilon > 0.0)) throw Error(ErrorKind::InvalidArgument, "similarity epsilon must be positive");
  const auto& shape = net_.graph().node(embed_node_).shape;
  if (shape.size() != 3) {
    throw Error(ErrorKind::ShapeMismatch, "embedding node '" + embed_node_ + "' has output " + shape_to_string(shape) +
                                              ", expected (D,H,W)");
  }
  check_bank();
  rf_ = functional_rf(net_.graph());
}

const Shape& ProtoModel::embedding_shape() const { return net_.graph().node(embed_node_).shape; }

void ProtoModel::check_bank() const {
  const auto& e = embedding_shape();
  if (bank_.size() == 0) return;
  const auto& p = bank_.proto_dims();
  if (p[0] != e[0] || p[1] > e[1] || p[2] > e[2]) {
    throw Error(ErrorKind::ShapeMismatch, "prototypes " + shape_to_string(p) + " do not fit embedding " +
                                              shape_to_string(e));
  }
}

void ProtoModel::set_bank(PrototypeBank bank) {
  bank_ = std::move(bank);
  check_bank();
}

Tensor ProtoModel::embed(const Tensor& x) const { return net_.run(x, embed_node_); }

SimilarityMap ProtoModel::similarity_map(const Tensor& z, std::size_t proto) const {
  return pixrf::similarity_map(z, bank_.proto(proto), cfg_);
}

double ProtoModel::prototype_score(const Tensor& x, std::size_t proto) const {
  return prototype_unit(embed(x), bank_.proto(proto), cfg_).score;
}

Inference ProtoModel::infer(const Tensor& x) const {
  Inference r;
  r.embedding = embed(x);
  r.units = prototype_layer(r.embedding, bank_, cfg_);
  auto scores = unit_scores(r.units);
  r.logits = readout_sum(scores, bank_.classes(), bank_.num_classes());
  return r;
}

ProtoModel load_model(const std::filesystem::path& graph, const std::filesystem::path& weights,
                      const std::filesystem::path& bank, const std::string& embed_node, SimilarityConfig cfg) {
  return ProtoModel(Network(load_graph(graph), load_weights(weights)), embed_node, load_bank(bank), cfg);
}

}  // namespace pixrf
