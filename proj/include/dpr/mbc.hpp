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

// Modified Borda Count: positional points n_r-1 .. 0 per reviewer list, tie
// groups share the mean of the points they span, scores normalised by the
// maximum attainable total.

#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "dpr/errors.hpp"
#include "dpr/ranking.hpp"

namespace dpr {

struct MbcScores {
  std::vector<double> score;
};

struct MbcTally {
  std::vector<double> points;
  std::vector<std::size_t> times_reviewed;
};

// Raw point sums and review counts. Every partial must rank exactly n_r ids.
inline MbcTally mbc_tally(const std::vector<PartialRanking>& partials,
                          std::size_t n_r, std::size_t n_p) {
  if (n_r < 2) throw InputError("MBC needs n_r >= 2");
  MbcTally tally{std::vector<double>(n_p, 0.0),
                 std::vector<std::size_t>(n_p, 0)};
  for (const auto& partial : partials) {
    validate_partial(partial, n_p);
    if (partial.size() != n_r)
      throw InputError("reviewer " + std::to_string(partial.reviewer) +
                       " ranks " + std::to_string(partial.size()) +
                       " proposals, expected " + std::to_string(n_r));
    std::size_t pos = 0;
    for (const auto& group : partial.groups) {
      // Positions pos..pos+g-1 carry points n_r-1-pos down to n_r-pos-g.
      const double g = static_cast<double>(group.size());
      const double top = static_cast<double>(n_r - 1 - pos);
      const double share = top - (g - 1.0) / 2.0;
      for (ProposalId id : group) {
        tally.points[id] += share;
        ++tally.times_reviewed[id];
      }
      pos += group.size();
    }
  }
  return tally;
}

// score = points / (times_reviewed * (n_r - 1)); unreviewed proposals score 0.
inline MbcScores mbc_scores(const std::vector<PartialRanking>& partials,
                            std::size_t n_r, std::size_t n_p) {
  const auto tally = mbc_tally(partials, n_r, n_p);
  MbcScores out{std::vector<double>(n_p, 0.0)};
  for (std::size_t i = 0; i < n_p; ++i) {
    if (tally.times_reviewed[i] == 0) continue;
    out.score[i] = tally.points[i] /
                   (static_cast<double>(tally.times_reviewed[i]) *
                    static_cast<double>(n_r - 1));
  }
  return out;
}

// Descending score; equal scores by ascending id.
inline Ranking mbc_rank(const MbcScores& scores) {
  std::vector<ProposalId> order(scores.score.size());
  std::iota(order.begin(), order.end(), ProposalId{0});
  std::stable_sort(order.begin(), order.end(), [&](ProposalId a, ProposalId b) {
    return scores.score[a] > scores.score[b];
  });
  return Ranking(std::move(order));
}

// MBC applied to full rankings (n_r = n_p). Used to aggregate a set of
// near-optimal consensus rankings.
inline MbcScores mbc_scores_over_rankings(const std::vector<Ranking>& rankings) {
  if (rankings.empty()) throw InputError("cannot aggregate an empty set");
  const std::size_t n = rankings.front().size();
  if (n < 2) throw InputError("rankings need >= 2 proposals");
  std::vector<double> points(n, 0.0);
  for (const auto& r : rankings) {
    if (r.size() != n) throw InputError("rankings differ in size");
    for (std::size_t pos = 0; pos < n; ++pos)
      points[r[pos]] += static_cast<double>(n - 1 - pos);
  }
  const double denom =
      static_cast<double>(rankings.size()) * static_cast<double>(n - 1);
  for (double& p : points) p /= denom;
  return MbcScores{std::move(points)};
}

inline Ranking mbc_over_rankings(const std::vector<Ranking>& rankings) {
  return mbc_rank(mbc_scores_over_rankings(rankings));
}

}  // namespace dpr
