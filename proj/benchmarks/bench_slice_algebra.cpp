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

#include "pixrf/slice_algebra.hpp"

namespace {

pixrf::SliceSet random_set(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::int64_t> lo(0, 200), len(1, 40);
  std::vector<pixrf::HyperRect> rects;
  for (std::size_t i = 0; i < count; ++i) {
    auto r = lo(rng), c = lo(rng);
    rects.push_back({{0, 511}, {r, r + len(rng)}, {c, c + len(rng)}});
  }
  return pixrf::SliceSet(std::move(rects));
}

void BM_Merge(benchmark::State& state) {
  auto s = random_set(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(pixrf::merge(s));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Merge)->RangeMultiplier(4)->Range(4, 256)->Complexity();

void BM_UnionArea(benchmark::State& state) {
  auto s = random_set(static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(pixrf::union_area(s));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_UnionArea)->RangeMultiplier(4)->Range(4, 256)->Complexity();

}  // namespace
