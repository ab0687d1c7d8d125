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

#include "pixrf/simcheck.hpp"

#include <random>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "pixrf/error.hpp"
#include "pixrf/protopart.hpp"
#include "pixrf/random.hpp"

namespace pixrf {

namespace {

using Big = boost::multiprecision::cpp_bin_float_50;

Big exact(double d, double eps, bool original) {
  return similarity<Big>(Big(d), Big(eps), original ? Formulation::Original : Formulation::Reformulated);
}

template <typename T>
SimCheckRow run_region(const SimRegion& region, const SimCheckConfig& cfg, std::mt19937_64& rng, const char* name) {
  const T eps = static_cast<T>(cfg.epsilon);
  Big se_orig = 0, se_ref = 0;
  for (int i = 0; i < cfg.samples; ++i) {
    const T d = static_cast<T>(region.lo + (region.hi - region.lo) * uniform01(rng));
    const T vo = similarity<T>(d, eps, Formulation::Original);
    const T vr = similarity<T>(d, eps, Formulation::Reformulated);
    // Exact value at the rounded inputs, so only evaluation error counts.
    Big eo = Big(static_cast<double>(vo)) - exact(static_cast<double>(d), static_cast<double>(eps), true);
    Big er = Big(static_cast<double>(vr)) - exact(static_cast<double>(d), static_cast<double>(eps), false);
    se_orig += eo * eo;
    se_ref += er * er;
  }
  SimCheckRow row;
  row.dtype = name;
  row.region = region;
  row.mse_original = static_cast<double>(se_orig / cfg.samples);
  row.mse_reformulated = static_cast<double>(se_ref / cfg.samples);
  row.pct_improved =
      row.mse_original > 0.0 ? 100.0 * (row.mse_original - row.mse_reformulated) / row.mse_original : 0.0;
  return row;
}

}  // namespace

std::vector<SimRegion> default_sim_regions() {
  return {{0.0, 1e-6}, {1e-6, 1e-3}, {1e-3, 1.0}, {1.0, 10.0}, {10.0, 1000.0}};
}

double similarity_reference(double d, double eps, bool original) {
  return static_cast<double>(exact(d, eps, original));
}

std::vector<SimCheckRow> simcheck(const SimCheckConfig& cfg) {
  if (cfg.samples < 1) throw Error(ErrorKind::InvalidArgument, "simcheck needs at least one sample");
  if (!(cfg.epsilon > 0.0)) throw Error(ErrorKind::InvalidArgument, "epsilon must be positive");
  std::vector<SimCheckRow> rows;
  for (std::size_t r = 0; r < cfg.regions.size(); ++r) {
    if (!(cfg.regions[r].lo >= 0.0 && cfg.regions[r].hi >= cfg.regions[r].lo)) {
      throw Error(ErrorKind::InvalidArgument, "region bounds must satisfy 0 <= lo <= hi");
    }
    std::mt19937_64 rng(derive_seed(cfg.seed, {0, r}));
    rows.push_back(run_region<float>(cfg.regions[r], cfg, rng, "float32"));
  }
  for (std::size_t r = 0; r < cfg.regions.size(); ++r) {
    std::mt19937_64 rng(derive_seed(cfg.seed, {1, r}));
    rows.push_back(run_region<double>(cfg.regions[r], cfg, rng, "float64"));
  }
  return rows;
}

}  // namespace pixrf
