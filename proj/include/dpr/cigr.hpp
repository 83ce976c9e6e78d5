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

// Consensus ranking search. Minimises the number of position pairs that
// disagree with the pairwise count matrix by simulated annealing over swaps
// of disagreeing pairs, restarting from a maintained set of near-optimal
// rankings when progress stalls, and returns the MBC aggregate of that set.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <unordered_set>
#include <utility>
#include <vector>

#include "dpr/errors.hpp"
#include "dpr/mbc.hpp"
#include "dpr/ranking.hpp"

namespace dpr {

struct AnnealParams {
  double t0 = 1.0;
  double beta = 0.999;
  std::int64_t epsilon = 1;
  double rho = 3.0;
  std::size_t max_restarts = 30;
  std::size_t max_iters = 0;  // 0: 50000 * n_p
  std::uint64_t seed = 0;
  bool random_start = false;
  // Cap on stored near-optimal rankings; further qualifying rankings are
  // still visited but not stored.
  std::size_t max_set_size = 20000;

  void validate() const {
    if (!(t0 >= 0.0)) throw InputError("t0 must be >= 0");
    if (!(beta >= 0.0 && beta <= 1.0)) throw InputError("beta must be in [0,1]");
    if (epsilon < 0) throw InputError("epsilon must be >= 0");
    if (!(rho > 0.0)) throw InputError("rho must be > 0");
    if (max_set_size == 0) throw InputError("max_set_size must be >= 1");
  }
};

struct CigrResult {
  Ranking ranking;  // MBC aggregate of near_optimal_set
  std::int64_t best_cost = 0;
  Ranking best_ranking;
  std::vector<Ranking> near_optimal_set;
  std::size_t iterations_used = 0;
  std::size_t restarts_used = 0;
};

// cost(swap(r, i, j)) - cost(r), touching only the pairs whose relative
// order the swap changes.
inline std::int64_t cost_delta(const Ranking& r, std::size_t i, std::size_t j,
                               const RcmMatrix& rcm) {
  if (i > j) std::swap(i, j);
  if (j >= r.size()) throw InputError("cost_delta: position out of range");
  if (i == j) return 0;
  const ProposalId x = r[i];
  const ProposalId y = r[j];
  auto d = [&](ProposalId a, ProposalId b) -> std::int64_t {
    return disagrees(rcm, a, b) ? 1 : 0;
  };
  std::int64_t delta = d(y, x) - d(x, y);
  for (std::size_t k = i + 1; k < j; ++k) {
    const ProposalId z = r[k];
    delta += d(y, z) + d(z, x) - d(x, z) - d(z, y);
  }
  return delta;
}

// Brute-force minimum over all permutations; first minimum in lexicographic
// order. Test oracle for small instances.
inline std::pair<Ranking, std::int64_t> exact_kemeny(const RcmMatrix& rcm) {
  const std::size_t n = rcm.size();
  if (n > 10) throw InputError("exact_kemeny refuses n > 10");
  std::vector<ProposalId> perm(n);
  std::iota(perm.begin(), perm.end(), ProposalId{0});
  std::vector<ProposalId> best = perm;
  std::int64_t best_cost = -1;
  do {
    std::int64_t c = 0;
    for (std::size_t i = 0; i < n && (best_cost < 0 || c < best_cost); ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        c += disagrees(rcm, perm[i], perm[j]) ? 1 : 0;
    if (best_cost < 0 || c < best_cost) {
      best_cost = c;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return {Ranking(std::move(best)), std::max<std::int64_t>(best_cost, 0)};
}

namespace detail {

struct RankingHash {
  std::size_t operator()(const Ranking& r) const noexcept {
    std::uint64_t h = 1469598103934665603ULL;
    for (ProposalId id : r) {
      h ^= id;
      h *= 1099511628211ULL;
    }
    return static_cast<std::size_t>(h);
  }
};

// Positional points normalised per list, averaged over a proposal's
// reviews. Equals mbc_rank when every list has the same length.
inline Ranking positional_start(const std::vector<PartialRanking>& partials,
                                std::size_t n_p) {
  std::vector<double> points(n_p, 0.0);
  std::vector<double> seen(n_p, 0.0);
  for (const auto& partial : partials) {
    const std::size_t len = partial.size();
    if (len < 2) continue;
    std::size_t pos = 0;
    for (const auto& group : partial.groups) {
      const double g = static_cast<double>(group.size());
      const double share =
          (static_cast<double>(len - 1 - pos) - (g - 1.0) / 2.0) /
          static_cast<double>(len - 1);
      for (ProposalId id : group) {
        points[id] += share;
        seen[id] += 1.0;
      }
      pos += group.size();
    }
  }
  MbcScores scores{std::vector<double>(n_p, 0.0)};
  for (std::size_t i = 0; i < n_p; ++i)
    if (seen[i] > 0.0) scores.score[i] = points[i] / seen[i];
  return mbc_rank(scores);
}

// Current ranking plus the indexable set of disagreeing pairs (Theta).
class AnnealState {
 public:
  AnnealState(const RcmMatrix& rcm, const Ranking& start)
      : rcm_(rcm), n_(rcm.size()), slot_(n_, 0) {
    reset(start);
  }

  void reset(const Ranking& r) {
    ranking_ = r;
    pos_ = r.positions();
    pairs_.clear();
    for (std::size_t a = 0; a < n_; ++a)
      for (std::size_t b = a + 1; b < n_; ++b) slot_(a, b) = 0;
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i + 1; j < n_; ++j) refresh(r[i], r[j]);
  }

  std::size_t theta() const noexcept { return pairs_.size(); }
  std::int64_t cost() const noexcept {
    return static_cast<std::int64_t>(pairs_.size());
  }
  const Ranking& ranking() const noexcept { return ranking_; }

  // Positions (i < j) of the k-th disagreeing pair.
  std::pair<std::size_t, std::size_t> pair_positions(std::size_t k) const {
    const auto [a, b] = pairs_[k];
    const std::size_t pa = pos_[a];
    const std::size_t pb = pos_[b];
    return pa < pb ? std::pair{pa, pb} : std::pair{pb, pa};
  }

  void swap(std::size_t i, std::size_t j) {
    const ProposalId x = ranking_[i];
    const ProposalId y = ranking_[j];
    ranking_.swap_positions(i, j);
    pos_[x] = j;
    pos_[y] = i;
    refresh(x, y);
    for (std::size_t k = i + 1; k < j; ++k) {
      refresh(x, ranking_[k]);
      refresh(y, ranking_[k]);
    }
  }

 private:
  // Re-evaluate membership of {a, b} given current positions.
  void refresh(ProposalId a, ProposalId b) {
    const bool a_first = pos_[a] < pos_[b];
    const bool bad = a_first ? disagrees(rcm_, a, b) : disagrees(rcm_, b, a);
    const ProposalId lo = std::min(a, b);
    const ProposalId hi = std::max(a, b);
    std::size_t& s = slot_(lo, hi);
    if (bad && s == 0) {
      pairs_.push_back({lo, hi});
      s = pairs_.size();
    } else if (!bad && s != 0) {
      const auto last = pairs_.back();
      pairs_[s - 1] = last;
      slot_(last.first, last.second) = s;
      pairs_.pop_back();
      s = 0;
    }
  }

  const RcmMatrix& rcm_;
  std::size_t n_;
  Ranking ranking_;
  std::vector<std::size_t> pos_;
  SquareMatrix<std::size_t> slot_;  // 1 + index into pairs_, 0 if absent
  std::vector<std::pair<ProposalId, ProposalId>> pairs_;
};

// Distinct rankings within epsilon of the best cost seen, in insertion
// order so restarts draw members deterministically.
class NearOptimalSet {
 public:
  NearOptimalSet(std::int64_t epsilon, std::size_t cap)
      : epsilon_(epsilon), cap_(cap) {}

  // A ranking at the best cost is always stored when the set is full,
  // displacing the most recent member above the best cost.
  void offer(const Ranking& r, std::int64_t c, std::int64_t best) {
    if (c > best + epsilon_) return;
    if (index_.contains(r)) return;
    if (members_.size() >= cap_) {
      if (c != best) return;
      auto victim = std::find_if(members_.rbegin(), members_.rend(),
                                 [&](const auto& m) { return m.second > best; });
      if (victim == members_.rend()) return;
      index_.erase(victim->first);
      members_.erase(std::next(victim).base());
    }
    index_.insert(r);
    members_.push_back({r, c});
  }

  void tighten(std::int64_t best) {
    std::erase_if(members_, [&](const auto& m) {
      if (m.second <= best + epsilon_) return false;
      index_.erase(m.first);
      return true;
    });
  }

  std::size_t size() const noexcept { return members_.size(); }
  const Ranking& at(std::size_t k) const { return members_[k].first; }

  std::vector<Ranking> rankings() const {
    std::vector<Ranking> out;
    out.reserve(members_.size());
    for (const auto& m : members_) out.push_back(m.first);
    return out;
  }

 private:
  std::int64_t epsilon_;
  std::size_t cap_;
  std::vector<std::pair<Ranking, std::int64_t>> members_;
  std::unordered_set<Ranking, RankingHash> index_;
};

}  // namespace detail

// Annealing search over a precomputed count matrix. `start` is the initial
// ranking r_0.
inline CigrResult cigr_search_rcm(const RcmMatrix& rcm, const Ranking& start,
                                  const AnnealParams& params) {
  params.validate();
  const std::size_t n = rcm.size();
  if (n < 2) throw InputError("consensus search needs n_p >= 2");
  check_ranking_matches(start, rcm);
  const std::size_t max_iters =
      params.max_iters ? params.max_iters : std::size_t{50000} * n;

  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  detail::AnnealState state(rcm, start);
  detail::NearOptimalSet near(params.epsilon, params.max_set_size);
  std::int64_t best = state.cost();
  Ranking best_ranking = state.ranking();
  near.offer(state.ranking(), best, best);

  double temperature = params.t0;
  std::size_t iters = 0;
  std::size_t restarts = 0;
  std::size_t since_accept = 0;

  while (state.theta() > 0 && iters < max_iters) {
    const std::size_t theta = state.theta();
    const auto pick =
        std::uniform_int_distribution<std::size_t>(0, theta - 1)(rng);
    const auto [i, j] = state.pair_positions(pick);
    const std::int64_t delta = cost_delta(state.ranking(), i, j, rcm);
    bool accept = delta <= 0;
    if (!accept && temperature > 0.0)
      accept = unit(rng) < std::exp(-static_cast<double>(delta) / temperature);
    ++iters;

    if (accept) {
      state.swap(i, j);
      since_accept = 0;
      const std::int64_t c = state.cost();
      if (c < best) {
        best = c;
        best_ranking = state.ranking();
        near.tighten(best);
      }
      near.offer(state.ranking(), c, best);
    } else {
      ++since_accept;
    }
    temperature *= params.beta;

    if (state.theta() > 0 &&
        static_cast<double>(since_accept) /
                static_cast<double>(state.theta()) >
            params.rho) {
      if (restarts >= params.max_restarts) break;
      ++restarts;
      const auto k =
          std::uniform_int_distribution<std::size_t>(0, near.size() - 1)(rng);
      state.reset(near.at(k));
      temperature = params.t0;
      since_accept = 0;
    }
  }

  CigrResult result;
  result.best_cost = best;
  result.best_ranking = std::move(best_ranking);
  result.near_optimal_set = near.rankings();
  result.ranking = mbc_over_rankings(result.near_optimal_set);
  result.iterations_used = iters;
  result.restarts_used = restarts;
  return result;
}

inline CigrResult cigr_search(const std::vector<PartialRanking>& partials,
                              std::size_t n_p, const AnnealParams& params) {
  if (partials.empty()) throw InputError("consensus search needs reviews");
  if (n_p < 2) throw InputError("consensus search needs n_p >= 2");
  const RcmMatrix rcm = build_rcm(partials, n_p);
  Ranking start;
  if (params.random_start) {
    std::vector<ProposalId> order(n_p);
    std::iota(order.begin(), order.end(), ProposalId{0});
    // Separate stream from the chain so toggling the start mode does not
    // shift the chain's draws.
    std::mt19937_64 start_rng(params.seed ^ 0x9e3779b97f4a7c15ULL);
    std::shuffle(order.begin(), order.end(), start_rng);
    start = Ranking(std::move(order));
  } else {
    start = detail::positional_start(partials, n_p);
  }
  return cigr_search_rcm(rcm, start, params);
}

}  // namespace dpr
