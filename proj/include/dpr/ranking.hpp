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

// Core ranking types, the pairwise "ranked-above" count matrix, the
// disagreement cost minimised by the consensus search, and the two
// evaluation metrics (pairwise concordance and top-fraction recovery).

#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "dpr/errors.hpp"

namespace dpr {

using ProposalId = std::uint32_t;

// Dense row-major n x n matrix.
template <typename T>
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t n, T fill = T{})
      : n_(n), data_(n * n, fill) {}

  std::size_t size() const noexcept { return n_; }

  T& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const {
    return data_[i * n_ + j];
  }

  SquareMatrix& operator+=(const SquareMatrix& other) {
    if (other.n_ != n_) throw InputError("matrix size mismatch");
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
    return *this;
  }

  friend bool operator==(const SquareMatrix&, const SquareMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<T> data_;
};

// counts(i, j) = number of reviewers who placed i strictly above j.
using RcmMatrix = SquareMatrix<std::int32_t>;

// A total order over proposals 0..n-1, best first.
class Ranking {
 public:
  Ranking() = default;

  explicit Ranking(std::vector<ProposalId> order) : order_(std::move(order)) {
    std::vector<bool> seen(order_.size(), false);
    for (ProposalId id : order_) {
      if (id >= order_.size() || seen[id])
        throw InputError("ranking is not a permutation of 0.." +
                         std::to_string(order_.size() - 1));
      seen[id] = true;
    }
  }

  static Ranking identity(std::size_t n) {
    std::vector<ProposalId> order(n);
    std::iota(order.begin(), order.end(), ProposalId{0});
    return Ranking(std::move(order));
  }

  std::size_t size() const noexcept { return order_.size(); }
  ProposalId operator[](std::size_t pos) const { return order_[pos]; }
  const std::vector<ProposalId>& order() const noexcept { return order_; }
  auto begin() const noexcept { return order_.begin(); }
  auto end() const noexcept { return order_.end(); }

  // position[id] = index of id in the order.
  std::vector<std::size_t> positions() const {
    std::vector<std::size_t> pos(order_.size());
    for (std::size_t k = 0; k < order_.size(); ++k) pos[order_[k]] = k;
    return pos;
  }

  Ranking reversed() const {
    Ranking r;
    r.order_.assign(order_.rbegin(), order_.rend());
    return r;
  }

  void swap_positions(std::size_t i, std::size_t j) {
    std::swap(order_[i], order_[j]);
  }

  friend bool operator==(const Ranking&, const Ranking&) = default;
  friend auto operator<=>(const Ranking&, const Ranking&) = default;

 private:
  std::vector<ProposalId> order_;
};

// One reviewer's ordered list of tie groups, best group first.
struct PartialRanking {
  std::size_t reviewer = 0;
  std::vector<std::vector<ProposalId>> groups;

  // A strict order with no ties.
  static PartialRanking strict(std::size_t reviewer,
                               const std::vector<ProposalId>& order) {
    PartialRanking p{reviewer, {}};
    p.groups.reserve(order.size());
    for (ProposalId id : order) p.groups.push_back({id});
    return p;
  }

  std::size_t size() const {
    std::size_t total = 0;
    for (const auto& g : groups) total += g.size();
    return total;
  }

  friend bool operator==(const PartialRanking&,
                         const PartialRanking&) = default;
};

// Throws InputError unless every id is < n_p, no id repeats and no group is
// empty.
inline void validate_partial(const PartialRanking& partial, std::size_t n_p) {
  std::vector<bool> seen(n_p, false);
  for (const auto& group : partial.groups) {
    if (group.empty())
      throw InputError("empty tie group for reviewer " +
                       std::to_string(partial.reviewer));
    for (ProposalId id : group) {
      if (id >= n_p)
        throw InputError("proposal id " + std::to_string(id) +
                         " out of range for reviewer " +
                         std::to_string(partial.reviewer));
      if (seen[id])
        throw InputError("proposal id " + std::to_string(id) +
                         " repeated by reviewer " +
                         std::to_string(partial.reviewer));
      seen[id] = true;
    }
  }
}

// Calls fn(above, below) for every ordered pair a reviewer expressed; tied
// pairs are skipped.
template <typename Fn>
void for_each_ordered_pair(const PartialRanking& partial, Fn&& fn) {
  const auto& g = partial.groups;
  for (std::size_t a = 0; a < g.size(); ++a)
    for (std::size_t b = a + 1; b < g.size(); ++b)
      for (ProposalId hi : g[a])
        for (ProposalId lo : g[b]) fn(hi, lo);
}

inline RcmMatrix build_rcm(const std::vector<PartialRanking>& partials,
                           std::size_t n_p) {
  RcmMatrix rcm(n_p, 0);
  for (const auto& partial : partials) {
    validate_partial(partial, n_p);
    for_each_ordered_pair(partial,
                          [&](ProposalId hi, ProposalId lo) { ++rcm(hi, lo); });
  }
  return rcm;
}

// Whether placing `first` above `second` disagrees with the counts. Equal
// counts agree.
inline bool disagrees(const RcmMatrix& rcm, ProposalId first,
                      ProposalId second) {
  return rcm(first, second) < rcm(second, first);
}

inline void check_ranking_matches(const Ranking& r, const RcmMatrix& rcm) {
  if (r.size() != rcm.size())
    throw InputError("ranking size " + std::to_string(r.size()) +
                     " does not match matrix size " +
                     std::to_string(rcm.size()));
}

// Number of position pairs i < j whose order disagrees with the counts.
inline std::int64_t cost(const Ranking& r, const RcmMatrix& rcm) {
  check_ranking_matches(r, rcm);
  std::int64_t total = 0;
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = i + 1; j < r.size(); ++j)
      total += disagrees(rcm, r[i], r[j]) ? 1 : 0;
  return total;
}

// Complement of cost(): pairs that agree, equal-count pairs included.
inline std::int64_t agreeing_pairs(const Ranking& r, const RcmMatrix& rcm) {
  check_ranking_matches(r, rcm);
  std::int64_t total = 0;
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = i + 1; j < r.size(); ++j)
      total += disagrees(rcm, r[i], r[j]) ? 0 : 1;
  return total;
}

// Fraction of reviewer-expressed ordered pairs (with multiplicity) that `r`
// orders the same way. Tied reviewer pairs are not counted.
inline double fit_concordance(const Ranking& r,
                              const std::vector<PartialRanking>& partials) {
  const auto pos = r.positions();
  std::int64_t agree = 0;
  std::int64_t total = 0;
  for (const auto& partial : partials) {
    validate_partial(partial, r.size());
    for_each_ordered_pair(partial, [&](ProposalId hi, ProposalId lo) {
      ++total;
      if (pos[hi] < pos[lo]) ++agree;
    });
  }
  if (total == 0)
    throw UndefinedMetricError("fit concordance: no ordered reviewer pairs");
  return static_cast<double>(agree) / static_cast<double>(total);
}

// Fraction of all unordered pairs ordered identically by both rankings,
// i.e. (Kendall tau + 1) / 2.
inline double truth_concordance(const Ranking& inferred, const Ranking& truth) {
  if (inferred.size() != truth.size())
    throw InputError("truth concordance: ranking sizes differ");
  const std::size_t n = truth.size();
  if (n < 2) throw UndefinedMetricError("truth concordance needs >= 2 items");
  const auto truth_pos = truth.positions();
  std::int64_t concordant = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (truth_pos[inferred[i]] < truth_pos[inferred[j]]) ++concordant;
  const auto pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  return static_cast<double>(concordant) / pairs;
}

// k = round-half-up(fraction * n), at least 1.
inline std::size_t top_fraction_count(double fraction, std::size_t n) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw InputError("top fraction must lie in (0, 1]");
  const auto k = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(n) + 0.5));
  return std::clamp<std::size_t>(k, 1, std::max<std::size_t>(n, 1));
}

// |top_k(inferred) & top_k(truth)| / k, order inside the top set ignored.
inline double top_fraction_accuracy(const Ranking& inferred,
                                    const Ranking& truth, double fraction) {
  if (inferred.size() != truth.size())
    throw InputError("top fraction accuracy: ranking sizes differ");
  if (truth.size() == 0) throw InputError("top fraction accuracy: empty");
  const std::size_t k = top_fraction_count(fraction, truth.size());
  std::vector<bool> in_truth_top(truth.size(), false);
  for (std::size_t i = 0; i < k; ++i) in_truth_top[truth[i]] = true;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < k; ++i) hits += in_truth_top[inferred[i]] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(k);
}

struct MetricReport {
  double fit_ci = 0.0;
  double truth_ci = 0.0;
  double top_fraction_accuracy = 0.0;

  friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

}  // namespace dpr
