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

#include <doctest.h>

#include <boost/multiprecision/cpp_dec_float.hpp>
#include <cmath>

#include "pixrf/protopart.hpp"
#include "pixrf/simcheck.hpp"

using namespace pixrf;
using Dec = boost::multiprecision::cpp_dec_float_100;

namespace {

double decimal_oracle(double d, double eps, bool original) {
  Dec dd(d), e(eps), one(1);
  Dec v = original ? Dec(log((dd + one) / (dd + e))) : Dec(log(one / (dd + e) + one));
  return static_cast<double>(v);
}

}  // namespace

TEST_CASE("default regions") {
  auto r = default_sim_regions();
  REQUIRE(r.size() == 5);
  const double bounds[6] = {0.0, 1e-6, 1e-3, 1.0, 10.0, 1000.0};
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(r[i].lo == bounds[i]);
    CHECK(r[i].hi == bounds[i + 1]);
  }
}

TEST_CASE("reference agrees with an independent decimal oracle") {
  CHECK(std::abs(similarity_reference(0.0, 1e-6, false) - std::log1p(1e6)) < 1e-12);
  for (double d : {0.0, 3e-7, 2e-4, 0.37, 4.2, 777.0}) {
    for (bool orig : {false, true}) {
      const double want = decimal_oracle(d, 1e-6, orig);
      CHECK(std::abs(similarity_reference(d, 1e-6, orig) - want) <= 1e-15 * std::max(1.0, std::abs(want)));
    }
  }
}

TEST_CASE("double evaluation is close to the reference") {
  for (double d : {1e-5, 0.5, 3.0}) {
    CHECK(similarity(d, 1e-6, Formulation::Reformulated) ==
          doctest::Approx(similarity_reference(d, 1e-6, false)).epsilon(1e-12));
    CHECK(similarity(d, 1e-6, Formulation::Original) ==
          doctest::Approx(similarity_reference(d, 1e-6, true)).epsilon(1e-12));
  }
}

TEST_CASE("reformulation is never worse and improves on [1, 10]") {
  SimCheckConfig cfg;
  cfg.samples = 4000;
  cfg.seed = 2;
  auto rows = simcheck(cfg);
  REQUIRE(rows.size() == 10);
  for (const auto& r : rows) {
    CAPTURE(r.dtype);
    CAPTURE(r.region.lo);
    CHECK(r.mse_reformulated <= r.mse_original);
    CHECK(r.mse_original >= 0.0);
    if (r.mse_original > 0) CHECK(r.pct_improved == doctest::Approx(100.0 * (r.mse_original - r.mse_reformulated) / r.mse_original));
    if (r.region.lo == 1.0) CHECK(r.pct_improved > 0.0);
  }
  auto again = simcheck(cfg);
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(rows[i].mse_original == again[i].mse_original);
}
