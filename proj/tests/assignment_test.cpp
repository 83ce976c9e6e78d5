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

#include <cmath>
#include <functional>
#include <random>

#include "dpr/assignment.hpp"

using namespace dpr;
using Catch::Approx;

namespace {

std::vector<std::size_t> review_load(const Assignment& a, std::size_t n) {
  std::vector<std::size_t> load(n, 0);
  for (const auto& set : a.reviews)
    for (ProposalId p : set) ++load[p];
  return load;
}

// Direct count of reviewers holding both i and j.
std::int32_t oracle_pair(const Assignment& a, ProposalId i, ProposalId j) {
  std::int32_t k = 0;
  for (const auto& set : a.reviews)
    if (std::count(set.begin(), set.end(), i) && std::count(set.begin(), set.end(), j)) ++k;
  return k;
}

// Backtracking search for any regular assignment; tiny instances only.
bool oracle_feasible(std::size_t n, std::size_t m, const Constraints& c) {
  std::vector<std::size_t> load(n, 0);
  std::function<bool(std::size_t, ProposalId, std::size_t)> fill =
      [&](std::size_t r, ProposalId from, std::size_t taken) -> bool {
    if (r == n) return true;
    if (taken == m) return fill(r + 1, 0, 0);
    for (ProposalId p = from; p < n; ++p) {
      if (!c.allowed(r, p) || load[p] == m) continue;
      ++load[p];
      if (fill(r, p + 1, taken + 1)) return true;
      --load[p];
    }
    return false;
  };
  return fill(0, 0, 0);
}

}  // namespace

TEST_CASE("random_assignment small cases", "[assignment]") {
  const auto c4 = Constraints::self_only(4);
  const auto a = random_assignment(4, 2, c4, 1);
  REQUIRE_NOTHROW(validate_assignment(a, 2, c4));
  CHECK(review_load(a, 4) == std::vector<std::size_t>(4, 2));

  const auto c3 = Constraints::self_only(3);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto b = random_assignment(3, 2, c3, seed);
    for (std::size_t i = 0; i < 3; ++i) {
      std::vector<ProposalId> others;
      for (ProposalId p = 0; p < 3; ++p)
        if (p != i) others.push_back(p);
      CHECK(b.reviews[i] == others);
    }
  }
}

TEST_CASE("infeasible constraints are reported", "[assignment]") {
  std::vector<std::vector<ProposalId>> forbidden(5);
  forbidden[1] = {0, 1, 2, 3, 4};
  const auto c = Constraints::from_lists(5, forbidden);
  try {
    random_assignment(5, 2, c, 3);
    FAIL("expected InfeasibleError");
  } catch (const InfeasibleError& e) {
    CHECK(e.reviewer() == 1);
  }
  CHECK_THROWS_AS(random_assignment(5, 5, Constraints::self_only(5), 0), InputError);
  CHECK_THROWS_AS(random_assignment(5, 1, Constraints::self_only(5), 0), InputError);
}

TEST_CASE("pair_counts examples", "[assignment]") {
  const Assignment ring{{{1, 2}, {2, 3}, {0, 3}, {0, 1}}};
  const auto alpha = pair_counts(ring, 4);
  for (ProposalId i = 0; i < 4; ++i)
    for (ProposalId j = 0; j < 4; ++j) {
      const bool hit = (std::min(i, j) == 1 && std::max(i, j) == 2) ||
                       (std::min(i, j) == 2 && std::max(i, j) == 3) ||
                       (std::min(i, j) == 0 && std::max(i, j) == 3) ||
                       (std::min(i, j) == 0 && std::max(i, j) == 1);
      CHECK(alpha(i, j) == (hit ? 1 : 0));
    }
  CHECK(entropy(alpha, 4, 2) == Approx(std::log(4.0)));

  const Assignment doubled{{{2, 3}, {2, 3}, {0, 1}, {0, 1}}};
  const auto beta = pair_counts(doubled, 4);
  CHECK(beta(2, 3) == 2);
  CHECK(beta(0, 1) == 2);
  CHECK(beta(0, 2) == 0);
  CHECK(entropy(beta, 4, 2) == Approx(std::log(2.0)));

  PairCounts single(4, 0);
  single(0, 1) = single(1, 0) = 4;
  CHECK(entropy(single, 4, 2) == 0.0);
}

TEST_CASE("pair counts match a direct count", "[assignment][property]") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 8 + rng() % 40;
    const std::size_t m = 2 + rng() % 6;
    const auto a = random_assignment(n, m, Constraints::self_only(n), rng());
    const auto alpha = pair_counts(a, n);
    std::int64_t total = 0;
    for (ProposalId i = 0; i < n; ++i) {
      CHECK(alpha(i, i) == 0);
      for (ProposalId j = i + 1; j < n; ++j) {
        CHECK(alpha(i, j) == oracle_pair(a, i, j));
        CHECK(alpha(i, j) == alpha(j, i));
        total += alpha(i, j);
      }
    }
    CHECK(static_cast<double>(total) == pair_mass(n, m));
    CHECK(entropy(alpha, n, m) <= entropy_cap(n, m) + 1e-12);
    CHECK(entropy_cap(n, m) <= entropy_bound(n, m) + 1e-12);
  }
  CHECK(pair_mass(40, 7) == 840.0);
}

TEST_CASE("entropy cap for 40 reviewers holding 7", "[assignment]") {
  // 780 cells, mass 840: 60 cells at 2 and 720 at 1.
  const double expected = 60 * (-(2.0 / 840) * std::log(2.0 / 840)) +
                          720 * (-(1.0 / 840) * std::log(1.0 / 840));
  CHECK(entropy_cap(40, 7) == Approx(expected).epsilon(1e-12));
  CHECK(entropy_bound(40, 7) == Approx(std::log(780.0)));
}

TEST_CASE("balance resolves the doubled-pair example", "[assignment]") {
  const Assignment doubled{{{2, 3}, {2, 3}, {0, 1}, {0, 1}}};
  const auto c = Constraints::self_only(4);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    BalanceParams params;
    params.seed = seed;
    const auto res = balance(doubled, c, params);
    CHECK(res.initial_entropy == Approx(std::log(2.0)));
    CHECK(res.entropy == Approx(std::log(4.0)));
    CHECK_NOTHROW(validate_assignment(res.assignment, 2, c));
  }
  // The hand trade: reviewer 1 gives 3 for reviewer 2's 0.
  const Assignment traded{{{2, 3}, {0, 2}, {1, 3}, {0, 1}}};
  CHECK(entropy(pair_counts(traded, 4), 4, 2) == Approx(std::log(4.0)));
}

TEST_CASE("balanced input stays put", "[assignment]") {
  const Assignment ring{{{1, 2}, {2, 3}, {0, 3}, {0, 1}}};
  const auto c = Constraints::self_only(4);
  const auto res = balance(ring, c, BalanceParams{});
  CHECK(res.entropy == Approx(res.initial_entropy));
  CHECK(res.iterations == 0);
}

TEST_CASE("no tradeable pair is flagged", "[assignment]") {
  const Assignment full{{{1, 2}, {0, 2}, {0, 1}}};
  const auto c3 = Constraints::self_only(3);
  detail::TradeBoard board(full, c3, 2);
  std::mt19937_64 rng(0);
  CHECK_FALSE(board.sample(rng).has_value());

  // Below the cap, but constraints pin every reviewer to its current set.
  const Assignment doubled{{{2, 3}, {2, 3}, {0, 1}, {0, 1}}};
  const auto c4 = Constraints::from_lists(4, {{1}, {0}, {3}, {2}});
  const auto res = balance(doubled, c4, BalanceParams{});
  CHECK(res.no_tradeable_pair);
  CHECK(res.assignment == doubled);
  CHECK(res.entropy == Approx(std::log(2.0)));
}

TEST_CASE("trades preserve regularity and constraints", "[assignment][property]") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 6 + rng() % 30;
    const std::size_t m = 2 + rng() % std::min<std::size_t>(5, n - 3);
    std::vector<std::vector<ProposalId>> forbidden(n);
    for (std::size_t i = 0; i < n; ++i)
      if (rng() % 3 == 0) forbidden[i].push_back(static_cast<ProposalId>(rng() % n));
    const auto c = Constraints::from_lists(n, forbidden);
    const auto a = random_assignment(n, m, c, rng());
    REQUIRE_NOTHROW(validate_assignment(a, m, c));

    detail::TradeBoard board(a, c, m);
    for (int step = 0; step < 200; ++step) {
      const auto t = board.sample(rng);
      if (!t) break;
      const double before = board.entropy_value();
      const double delta = board.apply(*t);
      const auto snap = board.snapshot();
      REQUIRE_NOTHROW(validate_assignment(snap, m, c));
      CHECK(board.entropy_value() == Approx(entropy(pair_counts(snap, n), n, m)).margin(1e-9));
      CHECK(board.entropy_value() - before == Approx(delta).margin(1e-12));
    }

    BalanceParams params;
    params.seed = rng();
    params.max_iters = 2000;
    const auto res = balance(a, c, params);
    CHECK_NOTHROW(validate_assignment(res.assignment, m, c));
    CHECK(res.entropy >= res.initial_entropy - 1e-12);
    const auto again = balance(a, c, params);
    CHECK(again.assignment == res.assignment);
  }
}

TEST_CASE("balancing raises entropy at 40 x 7", "[assignment]") {
  const auto c = Constraints::self_only(40);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto a = random_assignment(40, 7, c, seed);
    BalanceParams params;
    params.seed = seed;
    const auto res = balance(a, c, params);
    CHECK(res.entropy >= res.initial_entropy);
    CHECK(res.entropy <= entropy_cap(40, 7) + 1e-12);
  }
}

TEST_CASE("infeasibility is reported exactly when no assignment exists", "[assignment][property]") {
  std::mt19937_64 rng(5);
  int feasible = 0, infeasible = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const std::size_t n = 4 + rng() % 3;
    const std::size_t m = 2 + rng() % (n - 3);
    std::vector<std::vector<ProposalId>> forbidden(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t e = rng() % (n - m); e > 0; --e)
        forbidden[i].push_back(static_cast<ProposalId>(rng() % n));
    const auto c = Constraints::from_lists(n, forbidden);
    const bool expected = oracle_feasible(n, m, c);
    bool built = true;
    try {
      validate_assignment(random_assignment(n, m, c, rng()), m, c);
    } catch (const InfeasibleError& e) {
      built = false;
      CHECK(e.reviewer() < n);
    }
    CHECK(built == expected);
    (expected ? feasible : infeasible) += 1;
  }
  CHECK(feasible > 50);
  CHECK(infeasible > 20);
}
