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

// Numerical error of the two algebraic forms of the similarity function,
// measured against a 50-digit reference.

#include <cstdint>
#include <string>
#include <vector>

namespace pixrf {

struct SimRegion {
  double lo = 0.0;
  double hi = 0.0;
};

/// [0,1e-6], [1e-6,1e-3], [1e-3,1], [1,10], [10,1000].
std::vector<SimRegion> default_sim_regions();

struct SimCheckRow {
  std::string dtype;  // "float32" | "float64"
  SimRegion region;
  double mse_original = 0.0;
  double mse_reformulated = 0.0;
  double pct_improved = 0.0;  // 100 * (original - reformulated) / original
};

struct SimCheckConfig {
  std::vector<SimRegion> regions = default_sim_regions();
  int samples = 20000;
  double epsilon = 1e-6;
  std::uint64_t seed = 0;
};

/// Distances are drawn uniformly per region, rounded to the working type,
/// and each form is compared with its own exact value at that rounded input.
std::vector<SimCheckRow> simcheck(const SimCheckConfig& cfg);

/// Both forms evaluated in 50-digit arithmetic, rounded to double.
double similarity_reference(double d, double eps, bool original);

}  // namespace pixrf
