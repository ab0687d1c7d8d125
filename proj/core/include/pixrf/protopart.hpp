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

// Prototypical-part head: embedded patches, distances, similarity, the
// min-pooled prototype unit, readout heads, prototype replacement and the
// forward value of the training objective.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pixrf/tensor.hpp"

namespace pixrf {

enum class Distance { Cosine, L2Squared };
enum class Formulation { Original, Reformulated };

struct SimilarityConfig {
  Distance distance = Distance::Cosine;
  double epsilon = 1e-6;
  Formulation formulation = Formulation::Reformulated;
};

/// log((d + 1) / (d + eps)) or log(1 / (d + eps) + 1), evaluated in T.
template <typename T>
T similarity(T d, T eps, Formulation f) {
  using std::log;
  if (f == Formulation::Original) return log((d + T(1)) / (d + eps));
  return log(T(1) / (d + eps) + T(1));
}

double similarity(double d, const SimilarityConfig& cfg);

/// Cosine: 1 - z.p / (|z| |p|), clamped to [0, 2]; throws ZeroVector.
/// L2Squared: |z - p|^2.
double distance(std::span<const float> z, std::span<const float> p, Distance kind);

struct Patch {
  std::int64_t row = 0;
  std::int64_t col = 0;
  Tensor values;  // (D, patch_h, patch_w)
};

/// Stride-1 sliding windows of a (D, H, W) embedding in row-major order.
std::vector<Patch> patches(const Tensor& z, std::int64_t patch_h, std::int64_t patch_w);

/// Grid of distances and similarity scores of one prototype against every
/// embedded patch, (H - patch_h + 1) x (W - patch_w + 1).
struct SimilarityMap {
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::vector<double> distances;
  std::vector<double> scores;

  double score(std::int64_t r, std::int64_t c) const { return scores[static_cast<std::size_t>(r * cols + c)]; }
};

SimilarityMap similarity_map(const Tensor& z, const Tensor& prototype, const SimilarityConfig& cfg);

/// Same distances as similarity_map, computed as correlations over the whole
/// embedding at once instead of patch by patch.
std::vector<double> distance_map_fast(const Tensor& z, const Tensor& prototype, Distance kind);

struct UnitResult {
  double score = 0.0;
  double distance = 0.0;
  std::int64_t row = 0;
  std::int64_t col = 0;
};

/// Min distance over patches, mapped through the similarity function. The
/// argmin is the first minimum in row-major order.
UnitResult prototype_unit(const Tensor& z, const Tensor& prototype, const SimilarityConfig& cfg);
UnitResult prototype_unit(const SimilarityMap& map);

struct Provenance {
  std::string image_id;
  std::int64_t row = 0;
  std::int64_t col = 0;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

class PrototypeBank {
 public:
  PrototypeBank() = default;
  PrototypeBank(std::vector<Tensor> protos, std::vector<int> class_of, int num_classes);

  /// Uniform [0, 1) prototypes, \p per_class for every class, in class order.
  static PrototypeBank random(int num_classes, int per_class, const Shape& proto_dims, std::uint64_t seed);

  std::size_t size() const noexcept { return protos_.size(); }
  int num_classes() const noexcept { return num_classes_; }
  const Shape& proto_dims() const;
  const Tensor& proto(std::size_t j) const { return protos_.at(j); }
  int class_of(std::size_t j) const { return class_of_.at(j); }
  std::span<const int> classes() const noexcept { return class_of_; }
  const std::optional<Provenance>& provenance(std::size_t j) const { return provenance_.at(j); }
  std::vector<std::size_t> prototypes_of(int cls) const;

  void set_prototype(std::size_t j, Tensor value, std::optional<Provenance> origin);

 private:
  std::vector<Tensor> protos_;
  std::vector<int> class_of_;
  std::vector<std::optional<Provenance>> provenance_;
  int num_classes_ = 0;
};

/// Writes "protos" (P x D x Hp x Wp) to \p path and {num_classes, class_of,
/// provenance} to the sidecar path + ".json".
void save_bank(const std::filesystem::path& path, const PrototypeBank& bank);
PrototypeBank load_bank(const std::filesystem::path& path);
std::filesystem::path bank_sidecar(const std::filesystem::path& path);

/// Every prototype's unit against one embedding.
std::vector<UnitResult> prototype_layer(const Tensor& z, const PrototypeBank& bank, const SimilarityConfig& cfg);
std::vector<double> unit_scores(std::span<const UnitResult> units);

/// Logit of class c = sum of the scores of class-c prototypes.
std::vector<double> readout_sum(std::span<const double> scores, std::span<const int> class_of, int num_classes);

/// logits = s^T W for W of dims (P, C).
std::vector<double> readout_fc(std::span<const double> scores, const Tensor& weights);

enum class Head { FullyConnected, ClassSum };

struct ExplanationSize {
  std::int64_t positive = 0;
  std::int64_t positive_negative = 0;

  friend bool operator==(const ExplanationSize&, const ExplanationSize&) = default;
};

ExplanationSize explanation_size(std::int64_t prototypes, std::int64_t classes, Head head);

enum class DedupMode { None, Patch, Image };

struct LabeledEmbedding {
  std::string image_id;
  int label = 0;
  Tensor embedding;  // (D, H, W)
};

/// Replaces each prototype, in index order, with its nearest embedded patch
/// among images of its class. Under dedup, a patch whose key (image+row+col
/// or image) an earlier same-class prototype already took is skipped in
/// favour of the next nearest.
PrototypeBank replace_prototypes(const PrototypeBank& bank, std::span<const LabeledEmbedding> data,
                                 const SimilarityConfig& cfg, DedupMode dedup);

struct LossConfig {
  double lambda_cls = 0.0;
  double lambda_sep = 0.0;
};

struct Losses {
  double total = 0.0;
  double xent = 0.0;
  double cls = 0.0;
  double sep = 0.0;
};

/// Mean cross-entropy plus weighted cluster and separation terms, each a
/// plain mean over the samples.
Losses evaluate_losses(std::span<const std::vector<double>> logits, std::span<const int> labels,
                       const PrototypeBank& bank, std::span<const Tensor> embeddings, const LossConfig& loss_cfg,
                       const SimilarityConfig& cfg);

double cross_entropy(std::span<const double> logits, int label);

}  // namespace pixrf
