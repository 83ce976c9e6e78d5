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

#include <random>
#include <sstream>

#include "dpr/text_format.hpp"
#include "test_support.hpp"

using namespace dpr;

TEST_CASE("parse a partial ranking line with a tie group", "[text]") {
  const auto p = text::parse_partial_line("12: 7 1 (4 9) 2");
  CHECK(p.reviewer == 12);
  REQUIRE(p.groups.size() == 4);
  CHECK(p.groups[0] == std::vector<ProposalId>{7});
  CHECK(p.groups[2] == std::vector<ProposalId>{4, 9});
  CHECK(p.groups[3] == std::vector<ProposalId>{2});
}

TEST_CASE("read_partials skips comments and blank lines", "[text]") {
  std::istringstream in("# header\n\n0: 1 2 3\n  \n1:(2 1)3\n");
  const auto ps = text::read_partials(in);
  REQUIRE(ps.size() == 2);
  CHECK(ps[1].groups.size() == 2);
  CHECK(ps[1].groups[0] == std::vector<ProposalId>{2, 1});
}

TEST_CASE("malformed partial lines are rejected", "[text]") {
  CHECK_THROWS_AS(text::parse_partial_line("1 2 3"), InputError);
  CHECK_THROWS_AS(text::parse_partial_line("x: 1 2"), InputError);
  CHECK_THROWS_AS(text::parse_partial_line("0: 1 (2 3"), InputError);
  CHECK_THROWS_AS(text::parse_partial_line("0: 1 2)"), InputError);
  CHECK_THROWS_AS(text::parse_partial_line("0: ()"), InputError);
  CHECK_THROWS_AS(text::parse_partial_line("0: ((1))"), InputError);
  CHECK_THROWS_AS(text::parse_partial_line("0: 1 -2"), InputError);
}

TEST_CASE("partials survive a write/read cycle", "[text][property]") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto ps = testing::random_partials(30, 7, 12, rng, true);
    std::ostringstream out;
    text::write_partials(out, ps);
    std::istringstream in(out.str());
    CHECK(text::read_partials(in) == ps);
  }
}

TEST_CASE("rankings and constraints", "[text]") {
  const Ranking r = text::parse_ranking("3 0 2 1");
  CHECK(r == Ranking({3, 0, 2, 1}));
  std::ostringstream out;
  text::write_ranking(out, r);
  CHECK(out.str() == "3 0 2 1\n");
  CHECK_THROWS_AS(text::parse_ranking("0 0 1"), InputError);

  std::istringstream c("0: 1 2\n# note\n3: 0\n");
  const auto f = text::read_constraints(c, 4);
  CHECK(f[0] == std::vector<ProposalId>{1, 2});
  CHECK(f[1].empty());
  CHECK(f[3] == std::vector<ProposalId>{0});
  std::istringstream bad("5: 1\n");
  CHECK_THROWS_AS(text::read_constraints(bad, 4), InputError);
}
