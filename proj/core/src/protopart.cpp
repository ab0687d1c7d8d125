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

#include "pixrf/protopart.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pixrf/error.hpp"
#include "pixrf/random.hpp"
#include "pixrf/tensor_io.hpp"

namespace pixrf {

double similarity(double d, const SimilarityConfig& cfg) {
  return similarity<double>(d, cfg.epsilon, cfg.formulation);
}

double distance(std::span<const float> z, std::span<const float> p, Distance kind) {
  if (z.size() != p.size()) {
    throw Error(ErrorKind::ShapeMismatch, "distance between vectors of length " + std::to_string(z.size()) +
                                              " and " + std::to_string(p.size()));
  }
  if (kind == Distance::L2Squared) {
    double acc = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      double diff = static_cast<double>(z[i]) - static_cast<double>(p[i]);
      acc += diff * diff;
    }
    return acc;
  }
  double dot = 0.0, zz = 0.0, pp = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    dot += static_cast<double>(z[i]) * p[i];
    zz += static_cast<double>(z[i]) * z[i];
    pp += static_cast<double>(p[i]) * p[i];
  }
  if (zz == 0.0 || pp == 0.0) throw Error(ErrorKind::ZeroVector, "cosine distance of a zero vector");
  // sqrt(x * x) == x exactly, so identical vectors give distance 0.
  double d = 1.0 - dot / std::sqrt(zz * pp);
  return std::clamp(d, 0.0, 2.0);
}

namespace {

void check_patch_fits(const Tensor& z, std::int64_t ph, std::int64_t pw) {
  if (z.rank() != 3) throw Error(ErrorKind::ShapeMismatch, "embedding must be (D,H,W), got " + shape_to_string(z.dims()));
  if (ph < 1 || pw < 1 || ph > z.dim(1) || pw > z.dim(2)) {
    throw Error(ErrorKind::PatchLargerThanEmbedding, "patch " + std::to_string(ph) + "x" + std::to_string(pw) +
                                                         " vs embedding " + shape_to_string(z.dims()));
  }
}

void extract(const Tensor& z, std::int64_t r, std::int64_t c, std::int64_t ph, std::int64_t pw, std::vector<float>& out) {
  out.clear();
  for (std::int64_t d = 0; d < z.dim(0); ++d) {
    for (std::int64_t a = 0; a < ph; ++a) {
      for (std::int64_t b = 0; b < pw; ++b) out.push_back(z.at(d, r + a, c + b));
    }
  }
}

void check_proto(const Tensor& z, const Tensor& p) {
  if (p.rank() != 3 || p.dim(0) != z.dim(0)) {
    throw Error(ErrorKind::ShapeMismatch, "prototype " + shape_to_string(p.dims()) + " incompatible with embedding " +
                                              shape_to_string(z.dims()));
  }
  check_patch_fits(z, p.dim(1), p.dim(2));
}

}  // namespace

std::vector<Patch> patches(const Tensor& z, std::int64_t patch_h, std::int64_t patch_w) {
  check_patch_fits(z, patch_h, patch_w);
  std::vector<Patch> out;
  std::vector<float> buf;
  for (std::int64_t r = 0; r + patch_h <= z.dim(1); ++r) {
    for (std::int64_t c = 0; c + patch_w <= z.dim(2); ++c) {
      extract(z, r, c, patch_h, patch_w, buf);
      out.push_back({r, c, Tensor({z.dim(0), patch_h, patch_w}, buf)});
    }
  }
  return out;
}

SimilarityMap similarity_map(const Tensor& z, const Tensor& prototype, const SimilarityConfig& cfg) {
  check_proto(z, prototype);
  const auto ph = prototype.dim(1), pw = prototype.dim(2);
  SimilarityMap m;
  m.rows = z.dim(1) - ph + 1;
  m.cols = z.dim(2) - pw + 1;
  m.distances.reserve(static_cast<std::size_t>(m.rows * m.cols));
  m.scores.reserve(static_cast<std::size_t>(m.rows * m.cols));
  std::vector<float> buf;
  for (std::int64_t r = 0; r < m.rows; ++r) {
    for (std::int64_t c = 0; c < m.cols; ++c) {
      extract(z, r, c, ph, pw, buf);
      double d = distance(buf, prototype.data(), cfg.distance);
      m.distances.push_back(d);
      m.scores.push_back(similarity(d, cfg));
    }
  }
  return m;
}

std::vector<double> distance_map_fast(const Tensor& z, const Tensor& prototype, Distance kind) {
  check_proto(z, prototype);
  const auto depth = z.dim(0), h = z.dim(1), w = z.dim(2);
  const auto ph = prototype.dim(1), pw = prototype.dim(2);
  const auto rows = h - ph + 1, cols = w - pw + 1;
  const auto n = static_cast<std::size_t>(rows * cols);
  std::vector<double> dot(n, 0.0), zz(n, 0.0);
  double pp = 0.0;
  for (std::int64_t d = 0; d < depth; ++d) {
    for (std::int64_t a = 0; a < ph; ++a) {
      for (std::int64_t b = 0; b < pw; ++b) {
        const double pv = prototype.at(d, a, b);
        pp += pv * pv;
        for (std::int64_t r = 0; r < rows; ++r) {
          const float* zrow = z.data().data() + (d * h + r + a) * w + b;
          double* drow = dot.data() + r * cols;
          double* nrow = zz.data() + r * cols;
          for (std::int64_t c = 0; c < cols; ++c) {
            const double zv = zrow[c];
            drow[c] += zv * pv;
            nrow[c] += zv * zv;
          }
        }
      }
    }
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (kind == Distance::L2Squared) {
      out[i] = std::max(0.0, zz[i] - 2.0 * dot[i] + pp);
    } else {
      if (zz[i] == 0.0 || pp == 0.0) throw Error(ErrorKind::ZeroVector, "cosine distance of a zero vector");
      out[i] = std::clamp(1.0 - dot[i] / std::sqrt(zz[i] * pp), 0.0, 2.0);
    }
  }
  return out;
}

UnitResult prototype_unit(const SimilarityMap& map) {
  UnitResult best;
  best.distance = std::numeric_limits<double>::infinity();
  for (std::int64_t r = 0; r < map.rows; ++r) {
    for (std::int64_t c = 0; c < map.cols; ++c) {
      auto i = static_cast<std::size_t>(r * map.cols + c);
      if (map.distances[i] < best.distance) {
        best = {map.scores[i], map.distances[i], r, c};
      }
    }
  }
  return best;
}

UnitResult prototype_unit(const Tensor& z, const Tensor& prototype, const SimilarityConfig& cfg) {
  return prototype_unit(similarity_map(z, prototype, cfg));
}

PrototypeBank::PrototypeBank(std::vector<Tensor> protos, std::vector<int> class_of, int num_classes)
    : protos_(std::move(protos)),
      class_of_(std::move(class_of)),
      provenance_(protos_.size()),
      num_classes_(num_classes) {
  if (protos_.size() != class_of_.size()) {
    throw Error(ErrorKind::ShapeMismatch, std::to_string(protos_.size()) + " prototypes but " +
                                              std::to_string(class_of_.size()) + " class ids");
  }
  if (num_classes_ < 1) throw Error(ErrorKind::InvalidArgument, "bank needs at least one class");
  for (std::size_t j = 0; j < protos_.size(); ++j) {
    if (protos_[j].rank() != 3 || protos_[j].dims() != protos_.front().dims()) {
      throw Error(ErrorKind::ShapeMismatch, "prototype " + std::to_string(j) + " has dims " +
                                                shape_to_string(protos_[j].dims()));
    }
    if (class_of_[j] < 0 || class_of_[j] >= num_classes_) {
      throw Error(ErrorKind::InvalidArgument, "prototype " + std::to_string(j) + " has class " +
                                                  std::to_string(class_of_[j]) + " outside [0, " +
                                                  std::to_string(num_classes_) + ")");
    }
  }
}

PrototypeBank PrototypeBank::random(int num_classes, int per_class, const Shape& proto_dims, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Tensor> protos;
  std::vector<int> classes;
  for (int c = 0; c < num_classes; ++c) {
    for (int k = 0; k < per_class; ++k) {
      Tensor t(proto_dims);
      for (auto& v : t.data()) v = static_cast<float>(uniform01(rng));
      protos.push_back(std::move(t));
      classes.push_back(c);
    }
  }
  return PrototypeBank(std::move(protos), std::move(classes), num_classes);
}

const Shape& PrototypeBank::proto_dims() const {
  if (protos_.empty()) throw Error(ErrorKind::InvalidArgument, "empty prototype bank");
  return protos_.front().dims();
}

std::vector<std::size_t> PrototypeBank::prototypes_of(int cls) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < class_of_.size(); ++j) {
    if (class_of_[j] == cls) out.push_back(j);
  }
  return out;
}

void PrototypeBank::set_prototype(std::size_t j, Tensor value, std::optional<Provenance> origin) {
  if (value.dims() != protos_.at(j).dims()) {
    throw Error(ErrorKind::ShapeMismatch, "replacement " + shape_to_string(value.dims()) + " vs prototype " +
                                              shape_to_string(protos_[j].dims()));
  }
  protos_[j] = std::move(value);
  provenance_[j] = std::move(origin);
}

std::filesystem::path bank_sidecar(const std::filesystem::path& path) {
  auto p = path;
  p += ".json";
  return p;
}

void save_bank(const std::filesystem::path& path, const PrototypeBank& bank) {
  const auto& dims = bank.proto_dims();
  std::vector<float> data;
  for (std::size_t j = 0; j < bank.size(); ++j) {
    auto d = bank.proto(j).data();
    data.insert(data.end(), d.begin(), d.end());
  }
  Shape all{static_cast<std::int64_t>(bank.size()), dims[0], dims[1], dims[2]};
  NamedTensor nt{"protos", Tensor(all, std::move(data))};
  save_container(path, std::span(&nt, 1));

  nlohmann::json j;
  j["num_classes"] = bank.num_classes();
  j["class_of"] = std::vector<int>(bank.classes().begin(), bank.classes().end());
  j["provenance"] = nlohmann::json::array();
  for (std::size_t k = 0; k < bank.size(); ++k) {
    const auto& pv = bank.provenance(k);
    if (pv) {
      j["provenance"].push_back({{"image", pv->image_id}, {"row", pv->row}, {"col", pv->col}});
    } else {
      j["provenance"].push_back(nullptr);
    }
  }
  std::ofstream out(bank_sidecar(path));
  if (!out) throw Error(ErrorKind::Io, "cannot write " + bank_sidecar(path).string());
  out << j.dump(2) << '\n';
}

PrototypeBank load_bank(const std::filesystem::path& path) {
  auto tensors = load_container(path);
  const Tensor* all = nullptr;
  for (const auto& t : tensors) {
    if (t.name == "protos") all = &t.tensor;
  }
  if (!all || all->rank() != 4) throw Error(ErrorKind::MalformedGraph, path.string() + ": no (P,D,Hp,Wp) 'protos' tensor");

  std::ifstream in(bank_sidecar(path));
  if (!in) throw Error(ErrorKind::Io, "cannot open " + bank_sidecar(path).string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedGraph, bank_sidecar(path).string() + ": " + e.what());
  }
  const auto p = all->dim(0);
  Shape dims{all->dim(1), all->dim(2), all->dim(3)};
  const auto per = num_elements(dims);
  std::vector<Tensor> protos;
  for (std::int64_t k = 0; k < p; ++k) {
    auto first = all->data().begin() + k * per;
    protos.emplace_back(dims, std::vector<float>(first, first + per));
  }
  auto classes = j.at("class_of").get<std::vector<int>>();
  int num_classes = j.contains("num_classes") ? j["num_classes"].get<int>()
                                              : (classes.empty() ? 1 : *std::max_element(classes.begin(), classes.end()) + 1);
  PrototypeBank bank(std::move(protos), std::move(classes), num_classes);
  if (j.contains("provenance")) {
    const auto& pv = j["provenance"];
    for (std::size_t k = 0; k < pv.size() && k < bank.size(); ++k) {
      if (pv[k].is_null()) continue;
      bank.set_prototype(k, bank.proto(k),
                         Provenance{pv[k].at("image").get<std::string>(), pv[k].at("row").get<std::int64_t>(),
                                    pv[k].at("col").get<std::int64_t>()});
    }
  }
  return bank;
}

std::vector<UnitResult> prototype_layer(const Tensor& z, const PrototypeBank& bank, const SimilarityConfig& cfg) {
  std::vector<UnitResult> out;
  out.reserve(bank.size());
  for (std::size_t j = 0; j < bank.size(); ++j) out.push_back(prototype_unit(z, bank.proto(j), cfg));
  return out;
}

std::vector<double> unit_scores(std::span<const UnitResult> units) {
  std::vector<double> s;
  s.reserve(units.size());
  for (const auto& u : units) s.push_back(u.score);
  return s;
}

std::vector<double> readout_sum(std::span<const double> scores, std::span<const int> class_of, int num_classes) {
  if (scores.size() != class_of.size()) {
    throw Error(ErrorKind::ShapeMismatch, "score vector and class ids differ in length");
  }
  std::vector<double> logits(static_cast<std::size_t>(num_classes), 0.0);
  for (std::size_t j = 0; j < scores.size(); ++j) logits.at(static_cast<std::size_t>(class_of[j])) += scores[j];
  return logits;
}

std::vector<double> readout_fc(std::span<const double> scores, const Tensor& weights) {
  if (weights.rank() != 2 || weights.dim(0) != static_cast<std::int64_t>(scores.size())) {
    throw Error(ErrorKind::ShapeMismatch, "head weights " + shape_to_string(weights.dims()) + " vs " +
                                              std::to_string(scores.size()) + " scores");
  }
  const auto classes = weights.dim(1);
  std::vector<double> logits(static_cast<std::size_t>(classes), 0.0);
  for (std::size_t j = 0; j < scores.size(); ++j) {
    for (std::int64_t c = 0; c < classes; ++c) {
      logits[static_cast<std::size_t>(c)] += scores[j] * weights[static_cast<std::int64_t>(j) * classes + c];
    }
  }
  return logits;
}

ExplanationSize explanation_size(std::int64_t prototypes, std::int64_t classes, Head head) {
  if (classes < 1 || prototypes < 1 || prototypes % classes != 0) {
    throw Error(ErrorKind::InvalidArgument, "class-specific banks need C | P (P=" + std::to_string(prototypes) +
                                                ", C=" + std::to_string(classes) + ")");
  }
  const auto per_class = prototypes / classes;
  if (head == Head::FullyConnected) return {2 * per_class, 2 * prototypes};
  return {per_class, per_class};
}

PrototypeBank replace_prototypes(const PrototypeBank& bank, std::span<const LabeledEmbedding> data,
                                 const SimilarityConfig& cfg, DedupMode dedup) {
  PrototypeBank out = bank;
  const auto& dims = bank.proto_dims();
  struct Key {
    std::size_t image;
    std::int64_t row, col;
    auto operator<=>(const Key&) const = default;
  };
  std::vector<std::set<Key>> taken(static_cast<std::size_t>(bank.num_classes()));

  for (std::size_t j = 0; j < bank.size(); ++j) {
    const int cls = bank.class_of(j);
    auto& used = taken[static_cast<std::size_t>(cls)];
    double best = std::numeric_limits<double>::infinity();
    std::optional<Key> pick;
    bool any_patch = false;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data[i].label != cls) continue;
      auto map = similarity_map(data[i].embedding, bank.proto(j), cfg);
      for (std::int64_t r = 0; r < map.rows; ++r) {
        for (std::int64_t c = 0; c < map.cols; ++c) {
          any_patch = true;
          Key key{i, dedup == DedupMode::Image ? 0 : r, dedup == DedupMode::Image ? 0 : c};
          if (dedup != DedupMode::None && used.contains(key)) continue;
          double d = map.distances[static_cast<std::size_t>(r * map.cols + c)];
          if (d < best) {
            best = d;
            pick = Key{i, r, c};
          }
        }
      }
    }
    if (!any_patch) {
      throw Error(ErrorKind::InsufficientPatches, "class " + std::to_string(cls) + " has no embedded patches");
    }
    if (!pick) {
      throw Error(ErrorKind::InsufficientPatches, "class " + std::to_string(cls) +
                                                      " ran out of distinct patches at prototype " + std::to_string(j));
    }
    used.insert(dedup == DedupMode::Image ? Key{pick->image, 0, 0} : *pick);
    const auto& z = data[pick->image].embedding;
    std::vector<float> buf;
    extract(z, pick->row, pick->col, dims[1], dims[2], buf);
    out.set_prototype(j, Tensor(dims, std::move(buf)), Provenance{data[pick->image].image_id, pick->row, pick->col});
  }
  return out;
}

double cross_entropy(std::span<const double> logits, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= logits.size()) {
    throw Error(ErrorKind::InvalidArgument, "label " + std::to_string(label) + " outside logits");
  }
  double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double l : logits) sum += std::exp(l - m);
  return m + std::log(sum) - logits[static_cast<std::size_t>(label)];
}

Losses evaluate_losses(std::span<const std::vector<double>> logits, std::span<const int> labels,
                       const PrototypeBank& bank, std::span<const Tensor> embeddings, const LossConfig& loss_cfg,
                       const SimilarityConfig& cfg) {
  if (logits.size() != labels.size() || embeddings.size() != labels.size() || labels.empty()) {
    throw Error(ErrorKind::ShapeMismatch, "logits, labels and embeddings must be non-empty and equally long");
  }
  Losses l;
  const double n = static_cast<double>(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    l.xent += cross_entropy(logits[i], labels[i]);
    double own = std::numeric_limits<double>::infinity();
    double other = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < bank.size(); ++j) {
      auto u = prototype_unit(embeddings[i], bank.proto(j), cfg);
      if (bank.class_of(j) == labels[i]) {
        own = std::min(own, u.distance);
      } else {
        other = std::min(other, u.distance);
      }
    }
    if (std::isinf(own)) {
      throw Error(ErrorKind::ClassWithoutPrototypes, "class " + std::to_string(labels[i]) + " has no prototypes");
    }
    if (std::isinf(other)) {
      throw Error(ErrorKind::ClassWithoutPrototypes, "no prototypes outside class " + std::to_string(labels[i]));
    }
    l.cls += own;
    l.sep -= other;
  }
  l.xent /= n;
  l.cls /= n;
  l.sep /= n;
  l.total = l.xent + loss_cfg.lambda_cls * l.cls + loss_cfg.lambda_sep * l.sep;
  return l;
}

}  // namespace pixrf
