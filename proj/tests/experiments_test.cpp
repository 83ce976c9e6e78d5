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

#include <sstream>

#include "dpr/experiments.hpp"

using namespace dpr;
using Catch::Approx;

namespace {

ExperimentConfig quick_config(std::size_t threads = 1) {
  ExperimentConfig cfg;
  cfg.anneal.max_iters = 20000;
  cfg.threads = threads;
  return cfg;
}

std::string sweep_csv(const SweepSpec& spec, const ExperimentConfig& cfg) {
  std::ostringstream out;
  write_sweep_csv(out, sweep(spec, cfg));
  return out.str();
}

}  // namespace

TEST_CASE("parallel_map keeps index order and rethrows", "[experiments]") {
  const auto squares = parallel_map(50, 4, [](std::size_t k) { return k * k; });
  for (std::size_t k = 0; k < 50; ++k) CHECK(squares[k] == k * k);
  CHECK(parallel_map(0, 4, [](std::size_t k) { return k; }).empty());
  CHECK_THROWS_AS(parallel_map(10, 3,
                               [](std::size_t k) {
                                 if (k == 7) throw InputError("boom");
                                 return k;
                               }),
                  InputError);
}

TEST_CASE("replicates are deterministic", "[experiments]") {
  SimParams p;
  p.seed = 42;
  for (Method m : {Method::kMbc, Method::kCigr})
    for (AssignMode mode : {AssignMode::kRandom, AssignMode::kBalanced}) {
      const auto a = run_replicate(p, m, mode, 3, quick_config());
      const auto b = run_replicate(p, m, mode, 3, quick_config());
      CHECK(a.truth_ci == b.truth_ci);
      CHECK(a.fit_ci == b.fit_ci);
      CHECK(a.top_fraction_accuracy == b.top_fraction_accuracy);
    }
}

TEST_CASE("noise-free complete reviews recover the truth", "[experiments]") {
  SimParams p;
  p.n_p = 9;
  p.n_r = 8;
  p.er_df = 0.0;
  for (std::size_t k = 0; k < 10; ++k)
    for (Method m : {Method::kMbc, Method::kCigr}) {
      const auto r = run_replicate(p, m, AssignMode::kRandom, k, quick_config());
      CHECK(r.truth_ci == 1.0);
      CHECK(r.top_fraction_accuracy == 1.0);
      CHECK(r.fit_ci == 1.0);
    }
}

TEST_CASE("noise-free partial reviews are fitted exactly by CIGR", "[experiments]") {
  SimParams p;
  p.er_df = 0.0;
  for (std::size_t k = 0; k < 10; ++k) {
    const auto d = simulate_replicate(p, AssignMode::kRandom, k, BalanceParams{});
    const auto res = cigr_search(d.partials, p.n_p, replicate_anneal(AnnealParams{}, p, k));
    CHECK(res.best_cost == 0);
    CHECK(fit_concordance(res.best_ranking, d.partials) == 1.0);
  }
}

TEST_CASE("default MBC concordance stays inside (0.5, 1)", "[experiments]") {
  SimParams p;
  std::size_t inside = 0;
  for (std::size_t k = 0; k < 1000; ++k) {
    const auto r = run_replicate(p, Method::kMbc, AssignMode::kRandom, k);
    inside += (r.truth_ci > 0.5 && r.truth_ci < 1.0) ? 1 : 0;
  }
  CHECK(inside >= 999);
}

TEST_CASE("sweep output", "[experiments]") {
  SweepSpec spec;
  spec.param = "n_r";
  spec.grid = {3, 5};
  spec.methods = {Method::kMbc, Method::kCigr};
  spec.modes = {AssignMode::kRandom, AssignMode::kBalanced};
  spec.replicates = 6;
  spec.base.n_p = 20;
  const auto rows = sweep(spec, quick_config());
  REQUIRE(rows.size() == 8);
  CHECK(rows[0].value == 3);
  CHECK(rows[0].mode == AssignMode::kRandom);
  CHECK(rows[0].method == Method::kMbc);
  CHECK(rows[1].method == Method::kCigr);
  CHECK(rows[2].mode == AssignMode::kBalanced);
  for (const auto& r : rows) {
    CHECK(r.n_reps == 6);
    CHECK(r.ci_hw >= 0.0);
    CHECK(r.t02_hw >= 0.0);
    CHECK((r.mean_ci >= 0.0 && r.mean_ci <= 1.0));
    CHECK((r.mean_t02 >= 0.0 && r.mean_t02 <= 1.0));
  }
  const std::string csv = sweep_csv(spec, quick_config());
  CHECK(csv.rfind("param,value,method,mode,mean_ci,ci_hw,mean_t02,t02_hw,n_reps\n", 0) == 0);
  CHECK(csv == sweep_csv(spec, quick_config(3)));

  spec.param = "bogus";
  CHECK_THROWS_AS(sweep(spec), InputError);
  spec.param = "n_r";
  spec.grid.clear();
  CHECK_THROWS_AS(sweep(spec), InputError);
}

TEST_CASE("comparison of a method with itself", "[experiments]") {
  SimParams p;
  p.n_p = 20;
  p.n_r = 5;
  const auto c =
      compare_methods(p, 5, quick_config(), AssignMode::kRandom, Method::kMbc, Method::kMbc);
  CHECK(c.ci_test.mean_diff == 0.0);
  CHECK(c.ci_test.p_value == 1.0);
  CHECK_THROWS_AS(compare_methods(p, 1), InputError);
}

TEST_CASE("find_crossing", "[experiments]") {
  const std::vector<double> grid{0, 10, 20, 30};
  CHECK(find_crossing(grid, {3, 1, -1, -3}) == Approx(15.0));
  CHECK(find_crossing(grid, {4, 0, -1, -2}) == Approx(10.0));
  CHECK_FALSE(find_crossing(grid, {4, 3, 2, 1}).has_value());
  CHECK_FALSE(find_crossing(grid, {-1, -2, -3, -4}).has_value());
  CHECK(find_crossing(grid, {1, -1, 1, -1}) == Approx(5.0));
}

TEST_CASE("boundary plant and recover", "[experiments]") {
  const double a = 3.0, b = 0.4;
  const std::vector<double> sd{2, 5, 10, 15, 20, 25, 30};
  std::vector<double> er;
  for (double e = 1; e <= 30; e += 1.5) er.push_back(e);
  std::vector<std::vector<double>> diffs;
  for (double s : sd) {
    std::vector<double> row;
    // Nonlinear but single-signed either side of the planted crossing.
    for (double e : er) row.push_back(std::tanh(0.3 * (a + b * s - e)));
    diffs.push_back(row);
  }
  const auto rec = boundary_from_diffs(sd, er, diffs);
  REQUIRE(rec.fit.has_value());
  const double spacing = 1.5;
  CHECK(std::fabs(rec.fit->intercept - a) <= spacing);
  CHECK(std::fabs(rec.fit->slope - b) <= spacing / 30.0);
  for (const auto& pt : rec.points) {
    REQUIRE(pt.crossing.has_value());
    CHECK(std::fabs(*pt.crossing - (a + b * pt.sd_s)) <= spacing);
  }
}

TEST_CASE("boundary censoring", "[experiments]") {
  const std::vector<double> sd{1, 2, 3};
  const std::vector<double> er{5, 10, 15};
  const auto rec = boundary_from_diffs(sd, er, {{1, 0.5, -0.5}, {1, 0.8, 0.2}, {2, 1, -1}});
  CHECK(rec.points[0].crossing.has_value());
  CHECK_FALSE(rec.points[1].crossing.has_value());
  REQUIRE(rec.fit.has_value());
  CHECK(rec.fit->n == 2);
  std::ostringstream out;
  write_boundary_csv(out, rec);
  std::istringstream lines(out.str());
  std::string header, row0, row1;
  std::getline(lines, header);
  std::getline(lines, row0);
  std::getline(lines, row1);
  CHECK(header == "sd_s,er_crossing,censored,band_lo,band_hi");
  CHECK(row1.rfind("2,,1", 0) == 0);
}

TEST_CASE("balanced comparison structure", "[experiments]") {
  SimParams p;
  p.n_p = 15;
  p.n_r = 4;
  const auto bc = balanced_comparison(p, {5, 20}, 4, quick_config());
  REQUIRE(bc.rows.size() == 8);
  CHECK(bc.mbc_gain.size() == 2);
  CHECK(bc.cigr_gain.size() == 2);
  CHECK(bc.rows[2].mode == AssignMode::kBalanced);
  CHECK(bc.mbc_gain[0].second.mean_ci_a == Approx(bc.rows[2].mean_ci));
  CHECK(bc.mbc_gain[0].second.mean_ci_b == Approx(bc.rows[0].mean_ci));

  p.n_p = 8;
  p.n_r = 7;
  p.er_df = 0.0;
  const auto exact = balanced_comparison(p, {0.0}, 3, quick_config());
  for (const auto& r : exact.rows) CHECK(r.mean_ci == 1.0);
}

TEST_CASE("multistage", "[experiments]") {
  MultistageSpec spec;
  spec.stage_nr = {4, 3};
  spec.band_width = 2;
  SimParams p;
  CHECK_THROWS_AS(multistage(p, spec, 0), InputError);
  spec.band_width = 10;
  spec.cut_fraction = 1.0;
  CHECK_THROWS_AS(multistage(p, spec, 0), InputError);
  spec.stage_nr = {4};
  spec.cut_fraction = 0.5;
  CHECK_THROWS_AS(multistage(p, spec, 0), InputError);

  spec.stage_nr = {4, 3};
  const auto r = multistage(p, spec, 1, quick_config());
  CHECK(r.survivors_per_stage == std::vector<std::size_t>{40, 20});
  CHECK(r.full_ranking.size() == 40);
  const auto again = multistage(p, spec, 1, quick_config());
  CHECK(again.full_ranking == r.full_ranking);

  // Without filtering or banding this is one more full review round.
  spec.cut_fraction = 0.0;
  spec.band_width = 40;
  const auto flat = multistage(p, spec, 2, quick_config());
  CHECK(flat.survivors_per_stage == std::vector<std::size_t>{40, 40});
  CHECK(flat.final.truth_ci > 0.5);
  CHECK(flat.final.truth_ci <= 1.0);
}

TEST_CASE("noise-free multistage keeps the true top", "[experiments]") {
  SimParams p;
  p.n_p = 10;
  p.er_df = 0.0;
  MultistageSpec spec;
  spec.stage_nr = {9, 4};
  spec.cut_fraction = 0.5;
  spec.band_width = 5;
  for (std::size_t k = 0; k < 10; ++k) {
    const auto r = multistage(p, spec, k, quick_config());
    CHECK(r.true_top_eliminated == 0);
    CHECK(r.final.top_fraction_accuracy == 1.0);
    CHECK(r.final.truth_ci == 1.0);
  }
}

TEST_CASE("multistage study", "[experiments]") {
  SimParams p;
  MultistageSpec spec;
  spec.stage_nr = {4, 3};
  const auto s = multistage_study(p, spec, 4, quick_config());
  CHECK(s.single_stage_nr == 7);
  CHECK(s.replicates == 4);
  CHECK(s.vs_single.ci_test.n == 4);
}
