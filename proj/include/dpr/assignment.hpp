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

// Review assignment: every reviewer gets m proposals, every proposal is
// reviewed m times, nobody reviews a forbidden proposal (always including
// their own). Balancing maximises the Shannon entropy of the pair counts
// alpha(i, j) = number of reviewers holding both i and j, by annealing over
// proposal trades between two reviewers.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "dpr/errors.hpp"
#include "dpr/ranking.hpp"

namespace dpr {

class Constraints {
 public:
  Constraints() = default;

  // Only self-review is forbidden.
  static Constraints self_only(std::size_t n) { return Constraints(n); }

  // forbidden[i] lists extra ids reviewer i may not review; self is added.
  static Constraints from_lists(
      std::size_t n, const std::vector<std::vector<ProposalId>>& forbidden) {
    if (forbidden.size() > n) throw InputError("more constraint rows than PIs");
    Constraints c(n);
    for (std::size_t i = 0; i < forbidden.size(); ++i)
      for (ProposalId p : forbidden[i]) {
        if (p >= n) throw InputError("constraint id out of range");
        c.forbidden_(i, p) = 1;
      }
    return c;
  }

  std::size_t size() const noexcept { return forbidden_.size(); }
  bool allowed(std::size_t reviewer, ProposalId p) const {
    return forbidden_(reviewer, p) == 0;
  }
  void forbid(std::size_t reviewer, ProposalId p) { forbidden_(reviewer, p) = 1; }

  std::size_t allowed_count(std::size_t reviewer) const {
    std::size_t k = 0;
    for (std::size_t p = 0; p < size(); ++p)
      k += allowed(reviewer, static_cast<ProposalId>(p)) ? 1 : 0;
    return k;
  }

 private:
  explicit Constraints(std::size_t n) : forbidden_(n, 0) {
    for (std::size_t i = 0; i < n; ++i) forbidden_(i, i) = 1;
  }

  SquareMatrix<std::uint8_t> forbidden_;
};

// reviews[i] = proposals assigned to reviewer i, kept sorted.
struct Assignment {
  std::vector<std::vector<ProposalId>> reviews;

  std::size_t reviewers() const noexcept { return reviews.size(); }
  friend bool operator==(const Assignment&, const Assignment&) = default;
};

using PairCounts = SquareMatrix<std::int32_t>;

// Throws InputError on any broken invariant: set sizes, duplicates,
// constraint violations, or irregular per-proposal review counts.
inline void validate_assignment(const Assignment& a, std::size_t m,
                                const Constraints& c) {
  const std::size_t n = c.size();
  if (a.reviews.size() != n) throw InputError("assignment has wrong reviewer count");
  std::vector<std::size_t> load(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& set = a.reviews[i];
    if (set.size() != m)
      throw InputError("reviewer " + std::to_string(i) + " holds " +
                       std::to_string(set.size()) + " proposals");
    std::vector<ProposalId> sorted = set;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw InputError("reviewer " + std::to_string(i) + " holds a duplicate");
    for (ProposalId p : set) {
      if (p >= n) throw InputError("assignment id out of range");
      if (!c.allowed(i, p))
        throw InputError("reviewer " + std::to_string(i) +
                         " holds forbidden proposal " + std::to_string(p));
      ++load[p];
    }
  }
  for (std::size_t p = 0; p < n; ++p)
    if (load[p] != m)
      throw InputError("proposal " + std::to_string(p) + " reviewed " +
                       std::to_string(load[p]) + " times");
}

inline PairCounts pair_counts(const Assignment& a, std::size_t n) {
  PairCounts alpha(n, 0);
  for (const auto& set : a.reviews)
    for (std::size_t x = 0; x < set.size(); ++x)
      for (std::size_t y = x + 1; y < set.size(); ++y) {
        if (set[x] >= n || set[y] >= n) throw InputError("id out of range");
        ++alpha(set[x], set[y]);
        ++alpha(set[y], set[x]);
      }
  return alpha;
}

// Total pair mass n * m(m-1)/2.
inline double pair_mass(std::size_t n, std::size_t m) {
  return static_cast<double>(n) * static_cast<double>(m) *
         static_cast<double>(m - 1) / 2.0;
}

namespace detail {

inline double entropy_term(double count, double mass) {
  if (count <= 0.0) return 0.0;
  const double p = count / mass;
  return -p * std::log(p);
}

}  // namespace detail

// Natural-log Shannon entropy of the pair-count distribution.
inline double entropy(const PairCounts& pc, std::size_t n, std::size_t m) {
  if (pc.size() != n) throw InputError("pair count size mismatch");
  const double mass = pair_mass(n, m);
  double h = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      h += detail::entropy_term(static_cast<double>(pc(i, j)), mass);
  return h;
}

// Largest entropy any integer pair-count vector with this mass can reach:
// counts spread as evenly as possible over the n(n-1)/2 cells.
inline double entropy_cap(std::size_t n, std::size_t m) {
  const auto mass = static_cast<std::uint64_t>(pair_mass(n, m));
  const std::uint64_t cells = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  const std::uint64_t q = mass / cells;
  const std::uint64_t r = mass % cells;
  const double md = static_cast<double>(mass);
  return static_cast<double>(r) *
             detail::entropy_term(static_cast<double>(q + 1), md) +
         static_cast<double>(cells - r) *
             detail::entropy_term(static_cast<double>(q), md);
}

// ln(min(M, n(n-1)/2)): the continuous upper bound on entropy.
inline double entropy_bound(std::size_t n, std::size_t m) {
  const double cells = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  return std::log(std::min(pair_mass(n, m), cells));
}

namespace detail {

struct Trade {
  std::size_t reviewer_a;
  std::size_t slot_a;
  std::size_t reviewer_b;
  std::size_t slot_b;
};

// Mutable assignment with O(1) membership and live pair counts.
class TradeBoard {
 public:
  TradeBoard(const Assignment& a, const Constraints& c, std::size_t m)
      : c_(c), n_(c.size()), m_(m), reviews_(a.reviews), holds_(n_, 0),
        alpha_(n_, 0), mass_(pair_mass(n_, m)), terms_(n_ + 1) {
    for (std::size_t i = 0; i < n_; ++i)
      for (ProposalId p : reviews_[i]) holds_(i, p) = 1;
    alpha_ = pair_counts(a, n_);
    for (std::size_t k = 0; k <= n_; ++k)
      terms_[k] = entropy_term(static_cast<double>(k), mass_);
    entropy_ = entropy(alpha_, n_, m_);
  }

  double entropy_value() const noexcept { return entropy_; }

  bool tradeable(std::size_t a, std::size_t sa, std::size_t b,
                 std::size_t sb) const {
    const ProposalId p = reviews_[a][sa];
    const ProposalId q = reviews_[b][sb];
    return p != q && c_.allowed(a, q) && c_.allowed(b, p) && !holds_(a, q) &&
           !holds_(b, p);
  }

  // Two distinct reviewers uniformly, then a uniform tradeable slot pair
  // between them. Falls back to an exhaustive scan after `retries` misses.
  template <typename Rng>
  std::optional<Trade> sample(Rng& rng, std::size_t retries = 64) const {
    std::uniform_int_distribution<std::size_t> pick(0, n_ - 1);
    std::vector<std::pair<std::size_t, std::size_t>> options;
    options.reserve(m_ * m_);
    for (std::size_t attempt = 0; attempt < retries; ++attempt) {
      const std::size_t a = pick(rng);
      std::size_t b = pick(rng);
      if (a == b) continue;
      options.clear();
      for (std::size_t sa = 0; sa < m_; ++sa)
        for (std::size_t sb = 0; sb < m_; ++sb)
          if (tradeable(a, sa, b, sb)) options.emplace_back(sa, sb);
      if (options.empty()) continue;
      const auto k = std::uniform_int_distribution<std::size_t>(
          0, options.size() - 1)(rng);
      return Trade{a, options[k].first, b, options[k].second};
    }
    std::vector<Trade> all;
    for (std::size_t a = 0; a < n_; ++a)
      for (std::size_t b = a + 1; b < n_; ++b)
        for (std::size_t sa = 0; sa < m_; ++sa)
          for (std::size_t sb = 0; sb < m_; ++sb)
            if (tradeable(a, sa, b, sb)) all.push_back({a, sa, b, sb});
    if (all.empty()) return std::nullopt;
    return all[std::uniform_int_distribution<std::size_t>(0, all.size() - 1)(rng)];
  }

  // Applies the trade and returns the entropy change.
  double apply(const Trade& t) {
    const double before = entropy_;
    move(t.reviewer_a, t.slot_a, reviews_[t.reviewer_b][t.slot_b]);
    move(t.reviewer_b, t.slot_b, give_back_);
    return entropy_ - before;
  }

  Assignment snapshot() const {
    Assignment a{reviews_};
    for (auto& set : a.reviews) std::sort(set.begin(), set.end());
    return a;
  }

 private:
  // Reviewer r replaces the proposal in `slot` with `incoming`; the removed
  // proposal is parked in give_back_ for the second half of a trade.
  void move(std::size_t r, std::size_t slot, ProposalId incoming) {
    const ProposalId outgoing = reviews_[r][slot];
    for (std::size_t s = 0; s < m_; ++s) {
      if (s == slot) continue;
      const ProposalId x = reviews_[r][s];
      bump(outgoing, x, -1);
      bump(incoming, x, +1);
    }
    holds_(r, outgoing) = 0;
    holds_(r, incoming) = 1;
    reviews_[r][slot] = incoming;
    give_back_ = outgoing;
  }

  void bump(ProposalId a, ProposalId b, int by) {
    std::int32_t& cell = alpha_(a, b);
    entropy_ -= terms_[static_cast<std::size_t>(cell)];
    cell += by;
    alpha_(b, a) = cell;
    entropy_ += terms_[static_cast<std::size_t>(cell)];
  }

  const Constraints& c_;
  std::size_t n_;
  std::size_t m_;
  std::vector<std::vector<ProposalId>> reviews_;
  SquareMatrix<std::uint8_t> holds_;
  PairCounts alpha_;
  double mass_;
  std::vector<double> terms_;
  double entropy_ = 0.0;
  ProposalId give_back_ = 0;
};

// Exact construction by max flow (source -> reviewer, capacity m; reviewer
// -> allowed proposal, capacity 1; proposal -> sink, capacity m). Returns
// the reviewer sets, or the first reviewer left short when no regular
// assignment exists.
template <typename Rng>
std::variant<std::vector<std::vector<ProposalId>>, std::size_t> flow_assignment(
    std::size_t n, std::size_t m, const Constraints& c, Rng& rng) {
  struct Edge {
    std::size_t to;
    std::size_t rev;
    int cap;
  };
  const std::size_t source = 0, sink = 2 * n + 1;
  std::vector<std::vector<Edge>> g(2 * n + 2);
  auto add = [&](std::size_t a, std::size_t b, int cap) {
    g[a].push_back({b, g[b].size(), cap});
    g[b].push_back({a, g[a].size() - 1, 0});
  };
  std::vector<ProposalId> order(n);
  std::iota(order.begin(), order.end(), ProposalId{0});
  for (std::size_t i = 0; i < n; ++i) {
    add(source, 1 + i, static_cast<int>(m));
    std::shuffle(order.begin(), order.end(), rng);
    for (ProposalId p : order)
      if (c.allowed(i, p)) add(1 + i, 1 + n + p, 1);
  }
  for (std::size_t p = 0; p < n; ++p) add(1 + n + p, sink, static_cast<int>(m));

  std::vector<std::pair<std::size_t, std::size_t>> parent(g.size());
  for (std::size_t flow = 0; flow < n * m; ++flow) {
    std::vector<bool> seen(g.size(), false);
    std::vector<std::size_t> queue{source};
    seen[source] = true;
    for (std::size_t head = 0; head < queue.size() && !seen[sink]; ++head) {
      const std::size_t u = queue[head];
      for (std::size_t e = 0; e < g[u].size(); ++e) {
        const Edge& edge = g[u][e];
        if (edge.cap > 0 && !seen[edge.to]) {
          seen[edge.to] = true;
          parent[edge.to] = {u, e};
          queue.push_back(edge.to);
        }
      }
    }
    if (!seen[sink]) break;
    for (std::size_t v = sink; v != source; v = parent[v].first) {
      Edge& edge = g[parent[v].first][parent[v].second];
      edge.cap -= 1;
      g[v][edge.rev].cap += 1;
    }
  }

  for (std::size_t e = 0; e < g[source].size(); ++e)
    if (g[source][e].cap > 0) return g[source][e].to - 1;
  std::vector<std::vector<ProposalId>> reviews(n);
  for (std::size_t i = 0; i < n; ++i)
    for (const Edge& edge : g[1 + i])
      if (edge.to > n && edge.to <= 2 * n && edge.cap == 0)
        reviews[i].push_back(static_cast<ProposalId>(edge.to - 1 - n));
  return reviews;
}

// Reviewer i gets a proposal it may not review: find someone to swap with.
template <typename Rng>
bool repair_one(std::vector<std::vector<ProposalId>>& reviews,
                SquareMatrix<std::uint8_t>& holds, const Constraints& c,
                std::size_t i, std::size_t slot, Rng& rng) {
  const std::size_t n = c.size();
  const ProposalId p = reviews[i][slot];
  std::vector<std::size_t> others(n);
  std::iota(others.begin(), others.end(), std::size_t{0});
  std::shuffle(others.begin(), others.end(), rng);
  for (std::size_t j : others) {
    if (j == i || holds(j, p) || !c.allowed(j, p)) continue;
    for (std::size_t s = 0; s < reviews[j].size(); ++s) {
      const ProposalId q = reviews[j][s];
      if (q == p || holds(i, q) || !c.allowed(i, q)) continue;
      reviews[i][slot] = q;
      reviews[j][s] = p;
      holds(i, p) = 0;
      holds(i, q) = 1;
      holds(j, q) = 0;
      holds(j, p) = 1;
      return true;
    }
  }
  return false;
}

}  // namespace detail

// Circulant construction over a random relabelling (regular, no self
// review), repaired against general constraints, then decorrelated with
// n*m random trades. When repair keeps failing, an exact max-flow
// construction either finds a regular assignment or proves none exists.
inline Assignment random_assignment(std::size_t n, std::size_t m,
                                    const Constraints& c, std::uint64_t seed) {
  if (m < 2 || m >= n) throw InputError("need 2 <= m < n");
  if (c.size() != n) throw InputError("constraints size mismatch");
  for (std::size_t i = 0; i < n; ++i)
    if (c.allowed_count(i) < m)
      throw InfeasibleError("reviewer " + std::to_string(i) +
                                " has fewer than m allowed proposals",
                            i);

  std::mt19937_64 rng(seed);
  std::vector<ProposalId> perm(n);
  std::iota(perm.begin(), perm.end(), ProposalId{0});
  std::vector<std::vector<ProposalId>> reviews;
  const std::size_t attempts = 8;
  const std::size_t passes = 8;
  bool repaired = false;
  // A fresh circulant layout per attempt; repair swaps fix forbidden slots.
  for (std::size_t attempt = 0; attempt < attempts && !repaired; ++attempt) {
    std::shuffle(perm.begin(), perm.end(), rng);
    reviews.assign(n, {});
    for (std::size_t k = 0; k < n; ++k) {
      auto& set = reviews[perm[k]];
      for (std::size_t d = 1; d <= m; ++d) set.push_back(perm[(k + d) % n]);
    }
    SquareMatrix<std::uint8_t> holds(n, 0);
    for (std::size_t i = 0; i < n; ++i)
      for (ProposalId p : reviews[i]) holds(i, p) = 1;

    repaired = true;
    for (std::size_t i = 0; i < n && repaired; ++i)
      for (std::size_t slot = 0; slot < m && repaired; ++slot) {
        bool ok = c.allowed(i, reviews[i][slot]);
        for (std::size_t pass = 0; !ok && pass < passes; ++pass)
          ok = detail::repair_one(reviews, holds, c, i, slot, rng);
        repaired = ok;
      }
  }
  if (!repaired) {
    auto exact = detail::flow_assignment(n, m, c, rng);
    if (const auto* stuck = std::get_if<std::size_t>(&exact))
      throw InfeasibleError("no regular assignment satisfies the constraints; reviewer " +
                                std::to_string(*stuck) + " cannot be filled",
                            *stuck);
    reviews = std::move(std::get<0>(exact));
  }

  Assignment out{std::move(reviews)};
  detail::TradeBoard board(out, c, m);
  for (std::size_t k = 0; k < n * m; ++k) {
    const auto trade = board.sample(rng);
    if (!trade) break;
    board.apply(*trade);
  }
  return board.snapshot();
}

struct BalanceParams {
  double t0 = 1e-3;
  double beta = 0.9999;
  std::size_t max_iters = 0;  // 0: 200 * n * m
  std::uint64_t seed = 0;
};

struct BalanceResult {
  Assignment assignment;
  double entropy = 0.0;
  double initial_entropy = 0.0;
  std::size_t iterations = 0;
  bool no_tradeable_pair = false;
};

// Annealing over trades; returns the highest-entropy assignment seen.
inline BalanceResult balance(const Assignment& a, const Constraints& c,
                             const BalanceParams& params) {
  const std::size_t n = c.size();
  if (a.reviews.empty() || a.reviews.size() != n)
    throw InputError("assignment/constraints size mismatch");
  const std::size_t m = a.reviews.front().size();
  validate_assignment(a, m, c);
  if (!(params.t0 >= 0.0) || !(params.beta >= 0.0 && params.beta <= 1.0))
    throw InputError("bad balance parameters");

  const std::size_t budget = params.max_iters ? params.max_iters : 200 * n * m;
  const double cap = entropy_cap(n, m);
  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  detail::TradeBoard board(a, c, m);
  BalanceResult result;
  result.initial_entropy = board.entropy_value();
  result.entropy = result.initial_entropy;
  result.assignment = board.snapshot();

  double temperature = params.t0;
  std::size_t it = 0;
  for (; it < budget && result.entropy < cap - 1e-9; ++it) {
    const auto trade = board.sample(rng);
    if (!trade) {
      result.no_tradeable_pair = true;
      break;
    }
    const double delta = board.apply(*trade);
    bool accept = delta >= 0.0;
    if (!accept && temperature > 0.0) accept = unit(rng) < std::exp(delta / temperature);
    if (!accept) {
      board.apply(*trade);  // a trade is its own inverse
    } else if (board.entropy_value() > result.entropy + 1e-12) {
      result.entropy = board.entropy_value();
      result.assignment = board.snapshot();
    }
    temperature *= params.beta;
  }
  result.iterations = it;
  // Recompute from scratch to drop accumulated rounding.
  result.entropy = entropy(pair_counts(result.assignment, n), n, m);
  return result;
}

}  // namespace dpr
