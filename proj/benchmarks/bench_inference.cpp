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

#include <benchmark/benchmark.h>

#include <random>

#include "pixrf/inference.hpp"
#include "pixrf/model.hpp"
#include "pixrf/protopart.hpp"

namespace {

pixrf::Tensor random_tensor(pixrf::Shape dims, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  pixrf::Tensor t(std::move(dims));
  for (auto& v : t.data()) v = u(rng);
  return t;
}

void BM_Conv3x3(benchmark::State& state) {
  const auto ch = state.range(0);
  pixrf::Node in;
  in.id = "input";
  pixrf::Node c;
  c.id = "conv";
  c.op = pixrf::OpKind::Conv2d;
  c.inputs = {"input"};
  c.attrs.kernel = {3, 3};
  c.attrs.padding = {1, 1};
  c.attrs.out_channels = ch;
  auto g = pixrf::build_graph("conv", {ch, 56, 56}, {in, c});
  pixrf::WeightStore w;
  w.set("conv", "weight", random_tensor({ch, ch, 3, 3}, 1));
  w.set("conv", "bias", random_tensor({ch}, 2));
  auto x = random_tensor({ch, 56, 56}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(pixrf::forward(g, w, x, "conv"));
  state.SetItemsProcessed(state.iterations() * ch * ch * 9 * 56 * 56);
}
BENCHMARK(BM_Conv3x3)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_ToyInference(benchmark::State& state) {
  const std::string dir = std::string(PIXRF_FIXTURE_DIR) + "/toy/";
  auto model = pixrf::load_model(dir + "graph.json", dir + "weights.ntsr", dir + "bank.ntsr", "embed");
  auto x = random_tensor(model.input_shape(), 4);
  for (auto _ : state) benchmark::DoNotOptimize(model.infer(x).logits);
}
BENCHMARK(BM_ToyInference)->Unit(benchmark::kMicrosecond);

void BM_DistanceMap(benchmark::State& state) {
  auto z = random_tensor({128, 7, 7}, 5);
  auto p = random_tensor({128, 1, 1}, 6);
  const bool fast = state.range(0) != 0;
  pixrf::SimilarityConfig cfg;
  for (auto _ : state) {
    if (fast) {
      benchmark::DoNotOptimize(pixrf::distance_map_fast(z, p, pixrf::Distance::Cosine));
    } else {
      benchmark::DoNotOptimize(pixrf::similarity_map(z, p, cfg));
    }
  }
}
BENCHMARK(BM_DistanceMap)->Arg(0)->Arg(1);

}  // namespace
