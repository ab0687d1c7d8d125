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

#include "pixrf/functional_rf.hpp"
#include "pixrf/graph_ir.hpp"

namespace {

void BM_FunctionalRf(benchmark::State& state, const char* file) {
  auto g = pixrf::load_graph(std::string(PIXRF_FIXTURE_DIR) + "/graphs/" + file);
  for (auto _ : state) {
    auto rf = pixrf::functional_rf(g);
    benchmark::DoNotOptimize(rf.table().size());
  }
}
BENCHMARK_CAPTURE(BM_FunctionalRf, vgg16, "vgg16.json")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_FunctionalRf, vgg19, "vgg19.json")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_FunctionalRf, denseblock, "denseblock.json")->Unit(benchmark::kMillisecond);

void BM_MeanReceptiveField(benchmark::State& state) {
  auto rf = pixrf::functional_rf(pixrf::load_graph(std::string(PIXRF_FIXTURE_DIR) + "/graphs/vgg16.json"));
  for (auto _ : state) benchmark::DoNotOptimize(pixrf::mean_receptive_field(rf, "maxpool5").mean_pct);
}
BENCHMARK(BM_MeanReceptiveField)->Unit(benchmark::kMillisecond);

}  // namespace
