/*
Copyright 2026 The DPR Simulation Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    https://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#include "catch_amalgamated.hpp"

#include "dpr/stats.hpp"

using namespace dpr;
using Catch::Approx;

// Reference values below were computed independently with scipy.stats.

TEST_CASE("paired t-test", "[stats]") {
  const std::vector<double> a{0.91, 0.88, 0.95, 0.90, 0.87, 0.93};
  const std::vector<double> b{0.89, 0.87, 0.92, 0.91, 0.85, 0.90};
  const auto t = stats::paired_t_test(a, b);
  CHECK(t.n == 6);
  CHECK(t.t == Approx(2.7116307227332026).epsilon(1e-10));
  CHECK(t.p_value == Approx(0.04219399670552438).epsilon(1e-8));
  const auto flipped = stats::paired_t_test(b, a);
  CHECK(flipped.t == Approx(-t.t));
  CHECK(flipped.p_value == Approx(t.p_value));

  CHECK(stats::paired_t_test(a, a).p_value == 1.0);
  std::vector<double> shifted = a;
  for (double& x : shifted) x += 0.01;
  CHECK(stats::paired_t_test(shifted, a).p_value == 0.0);
  CHECK_THROWS_AS(stats::paired_t_test({1.0}, {2.0}), InputError);
  CHECK_THROWS_AS(stats::paired_t_test({1.0, 2.0}, {2.0}), InputError);
}

TEST_CASE("ordinary least squares", "[stats]") {
  const std::vector<double> x{1, 2, 3, 4, 5, 6, 7};
  const std::vector<double> y{2.1, 3.9, 6.2, 7.8, 10.1, 12.2, 13.8};
  const auto f = stats::ols(x, y, 0.99);
  CHECK(f.slope == Approx(1.9857142857142858).epsilon(1e-12));
  CHECK(f.intercept == Approx(0.07142857142857117).epsilon(1e-9));
  CHECK(f.slope_se == Approx(0.03614031611621056).epsilon(1e-10));
  CHECK(f.intercept_se == Approx(0.16162440712835602).epsilon(1e-10));
  CHECK(f.slope_lo == Approx(1.839991363662756).epsilon(1e-9));
  CHECK(f.slope_hi == Approx(2.1314372077658157).epsilon(1e-9));
  CHECK(f.intercept_lo == Approx(-0.5802641477456761).epsilon(1e-9));
  CHECK(stats::pearson(x, y) == Approx(0.999172912755884).epsilon(1e-12));
  CHECK_THROWS_AS(stats::ols({1, 1, 1}, {1, 2, 3}, 0.99), InputError);
}

TEST_CASE("normal halfwidth", "[stats]") {
  const std::vector<double> xs{1, 2, 3, 4};
  const double sd = std::sqrt(5.0 / 3.0);
  CHECK(stats::mean(xs) == 2.5);
  CHECK(stats::stddev(xs) == Approx(sd));
  CHECK(stats::normal_halfwidth(xs, 0.999) == Approx(3.2905267314919255 * sd / 2.0));
  CHECK(stats::normal_halfwidth({1.0}, 0.999) == 0.0);
  CHECK_THROWS_AS(stats::normal_halfwidth(xs, 1.0), InputError);
}
