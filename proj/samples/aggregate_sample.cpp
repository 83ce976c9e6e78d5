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

// Aggregates a small set of partial rankings with both methods and prints
// the resulting global rankings with their fit to the reviews.
//
//   aggregate_sample [partials.txt]

#include <fstream>
#include <iostream>
#include <sstream>

#include "dpr/dpr.hpp"

namespace {

constexpr const char* kDefaultReviews =
    "0: 1 2 3 4\n"
    "1: 2 0 (3 5)\n"
    "2: 0 1 5 3\n"
    "3: 4 0 2 5\n"
    "4: 5 1 0 2\n"
    "5: 0 4 3 1\n";

void show(const std::string& label, const dpr::Ranking& r,
          const std::vector<dpr::PartialRanking>& partials, const dpr::RcmMatrix& rcm) {
  std::cout << label << ": ";
  dpr::text::write_ranking(std::cout, r);
  std::cout << "  cost " << dpr::cost(r, rcm) << ", fit " << dpr::fit_concordance(r, partials)
            << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<dpr::PartialRanking> partials;
  if (argc > 1) {
    std::ifstream in(argv[1]);
    if (!in) {
      std::cerr << "cannot read " << argv[1] << '\n';
      return 1;
    }
    partials = dpr::text::read_partials(in);
  } else {
    std::istringstream in(kDefaultReviews);
    partials = dpr::text::read_partials(in);
  }

  std::size_t n_p = 0;
  for (const auto& p : partials)
    for (const auto& g : p.groups)
      for (auto id : g) n_p = std::max<std::size_t>(n_p, id + 1);
  const auto rcm = dpr::build_rcm(partials, n_p);

  const auto scores = dpr::mbc_scores(partials, partials.front().size(), n_p);
  show("MBC ", dpr::mbc_rank(scores), partials, rcm);

  dpr::AnnealParams params;
  params.seed = 1;
  const auto res = dpr::cigr_search(partials, n_p, params);
  show("CIGR", res.ranking, partials, rcm);
  std::cout << "  best cost " << res.best_cost << " over " << res.near_optimal_set.size()
            << " near-optimal rankings\n";

  if (n_p <= 10) {
    const auto [exact, exact_cost] = dpr::exact_kemeny(rcm);
    show("best", exact, partials, rcm);
  }
  return 0;
}
