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

// Generative model of a review round: true proposal scores, per-reviewer
// bias and error, and the partial rankings reviewers submit.

#pragma once

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "dpr/assignment.hpp"
#include "dpr/errors.hpp"
#include "dpr/ranking.hpp"

namespace dpr {

struct SimParams {
  std::size_t n_p = 40;
  std::size_t n_r = 7;
  double sd_s = 20.0;   // spread of true scores
  double br_sd = 10.0;  // spread of reviewer bias
  double er_df = 10.0;  // chi-squared df of reviewer error; 0 = noise free
  std::uint64_t seed = 1;

  void validate() const {
    if (n_p < 3) throw InputError("n_p must be >= 3");
    if (n_r < 2 || n_r >= n_p) throw InputError("need 2 <= n_r < n_p");
    if (!(sd_s >= 0.0)) throw InputError("sd_s must be >= 0");
    if (!(br_sd >= 0.0)) throw InputError("br_sd must be >= 0");
    if (!(er_df >= 0.0)) throw InputError("er_df must be >= 0");
  }
};

struct ReviewerProfile {
  double mu = 0.0;
  double sigma = 0.0;
};

struct TrueScores {
  std::vector<double> score;

  // Descending score, equal scores by ascending id.
  Ranking ranking() const {
    std::vector<ProposalId> order(score.size());
    std::iota(order.begin(), order.end(), ProposalId{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](ProposalId a, ProposalId b) { return score[a] > score[b]; });
    return Ranking(std::move(order));
  }
};

// Independent random streams per role, so that changing one parameter does
// not shift the draws consumed by another.
enum class Stream : std::uint32_t {
  kScores = 1,
  kBias = 2,
  kError = 3,
  kAssignment = 4,
  kReviewNoise = 5,
  kAlgorithm = 6,
  kBalance = 7,
  kStage = 8,
};

inline std::mt19937_64 make_stream(std::uint64_t master, std::uint64_t replicate,
                                   Stream role, std::uint64_t sub = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(master),
                    static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(replicate),
                    static_cast<std::uint32_t>(replicate >> 32),
                    static_cast<std::uint32_t>(role),
                    static_cast<std::uint32_t>(sub)};
  return std::mt19937_64(seq);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replicate,
                                 Stream role, std::uint64_t sub = 0) {
  auto rng = make_stream(master, replicate, role, sub);
  return rng();
}

// Normal(50, sd_s) truncated to [0, 100] by rejection.
template <typename Rng>
TrueScores sample_true_scores(std::size_t n_p, double sd_s, Rng& rng) {
  if (!(sd_s >= 0.0)) throw InputError("sd_s must be >= 0");
  TrueScores t{std::vector<double>(n_p, 50.0)};
  if (sd_s == 0.0) return t;
  std::normal_distribution<double> normal(50.0, sd_s);
  for (double& s : t.score) {
    do {
      s = normal(rng);
    } while (s < 0.0 || s > 100.0);
  }
  return t;
}

// mu ~ Normal(0, br_sd) from `bias_rng`, sigma ~ ChiSquared(er_df) from
// `error_rng`. er_df == 0 gives sigma == 0.
template <typename Rng>
std::vector<ReviewerProfile> sample_reviewers(std::size_t n_p, double br_sd,
                                              double er_df, Rng& bias_rng,
                                              Rng& error_rng) {
  if (!(br_sd >= 0.0)) throw InputError("br_sd must be >= 0");
  if (!(er_df >= 0.0)) throw InputError("er_df must be >= 0");
  std::vector<ReviewerProfile> out(n_p);
  std::normal_distribution<double> standard(0.0, 1.0);
  for (auto& r : out) r.mu = br_sd * standard(bias_rng);
  if (er_df > 0.0) {
    std::chi_squared_distribution<double> chi2(er_df);
    for (auto& r : out) r.sigma = chi2(error_rng);
  }
  return out;
}

// Standard-normal error draw z(i, p) for every reviewer/proposal pair and
// an independent tie-break key. Drawn for the full grid so that two
// assignments over the same round share each (i, p) draw.
struct ReviewNoise {
  SquareMatrix<double> z;
  SquareMatrix<double> tiebreak;

  template <typename Rng>
  static ReviewNoise draw(std::size_t n, Rng& rng) {
    ReviewNoise noise{SquareMatrix<double>(n, 0.0), SquareMatrix<double>(n, 0.0)};
    std::normal_distribution<double> standard(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t p = 0; p < n; ++p) noise.z(i, p) = standard(rng);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t p = 0; p < n; ++p) noise.tiebreak(i, p) = unit(rng);
    return noise;
  }
};

// Reviewer i scores proposal p as truth[p] + mu_i + sigma_i * z(i, p) and
// submits the descending order of those scores. The sort key omits mu_i:
// a constant shift per reviewer cannot change the order, and leaving it out
// keeps the order bit-exact under any bias.
inline std::vector<PartialRanking> simulate_reviews(
    const TrueScores& truth, const std::vector<ReviewerProfile>& profiles,
    const Assignment& a, const ReviewNoise& noise) {
  const std::size_t n = truth.score.size();
  if (profiles.size() != a.reviews.size())
    throw InputError("profile count does not match reviewer count");
  if (noise.z.size() < std::max(n, a.reviews.size()))
    throw InputError("noise grid too small");
  std::vector<PartialRanking> out;
  out.reserve(a.reviews.size());
  std::vector<std::pair<double, double>> key(n);
  for (std::size_t i = 0; i < a.reviews.size(); ++i) {
    std::vector<ProposalId> order = a.reviews[i];
    for (ProposalId p : order) {
      if (p >= n) throw InputError("assignment id out of range");
      key[p] = {truth.score[p] + profiles[i].sigma * noise.z(i, p),
                noise.tiebreak(i, p)};
    }
    std::sort(order.begin(), order.end(), [&](ProposalId x, ProposalId y) {
      if (key[x].first != key[y].first) return key[x].first > key[y].first;
      if (key[x].second != key[y].second) return key[x].second < key[y].second;
      return x < y;
    });
    out.push_back(PartialRanking::strict(i, order));
  }
  return out;
}

template <std::uniform_random_bit_generator Rng>
std::vector<PartialRanking> simulate_reviews(
    const TrueScores& truth, const std::vector<ReviewerProfile>& profiles,
    const Assignment& a, Rng& rng) {
  const auto noise = ReviewNoise::draw(
      std::max(truth.score.size(), a.reviews.size()), rng);
  return simulate_reviews(truth, profiles, a, noise);
}

}  // namespace dpr
