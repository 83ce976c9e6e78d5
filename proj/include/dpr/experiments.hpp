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

// End-to-end simulation experiments: single replicates, parameter sweeps,
// paired method comparisons, the method-superiority boundary, balanced vs
// random assignment, and the multi-stage review strategy. All replicates
// derive their random streams from (master seed, replicate index), so
// results do not depend on thread count or scheduling.

#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "dpr/assignment.hpp"
#include "dpr/cigr.hpp"
#include "dpr/errors.hpp"
#include "dpr/mbc.hpp"
#include "dpr/ranking.hpp"
#include "dpr/review_sim.hpp"
#include "dpr/stats.hpp"

namespace dpr {

enum class Method { kMbc, kCigr };
enum class AssignMode { kRandom, kBalanced };

inline std::string to_string(Method m) { return m == Method::kMbc ? "mbc" : "cigr"; }
inline std::string to_string(AssignMode m) {
  return m == AssignMode::kRandom ? "random" : "balanced";
}
inline Method parse_method(const std::string& s) {
  if (s == "mbc") return Method::kMbc;
  if (s == "cigr") return Method::kCigr;
  throw InputError("unknown method '" + s + "'");
}
inline AssignMode parse_mode(const std::string& s) {
  if (s == "random") return AssignMode::kRandom;
  if (s == "balanced") return AssignMode::kBalanced;
  throw InputError("unknown assignment mode '" + s + "'");
}

// Knobs shared by every experiment. The seeds inside `anneal` and `balance`
// are ignored; each replicate derives its own.
struct ExperimentConfig {
  AnnealParams anneal;
  BalanceParams balance;
  std::size_t threads = 1;
};

// Runs fn(k) for k in [0, count) on up to `threads` workers; results are
// stored by index.
template <typename Fn>
auto parallel_map(std::size_t count, std::size_t threads, Fn&& fn)
    -> std::vector<decltype(fn(std::size_t{}))> {
  using T = decltype(fn(std::size_t{}));
  std::vector<std::optional<T>> slots(count);
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < count; k = next++) {
      try {
        slots[k].emplace(fn(k));
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = count;
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(count, 1));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);
  std::vector<T> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

// Everything one simulated review round produces before aggregation.
struct ReplicateData {
  TrueScores truth;
  Ranking truth_ranking;
  std::vector<ReviewerProfile> profiles;
  ReviewNoise noise;
  Assignment random_assignment;
  Assignment assignment;  // the one the reviews were drawn on
  std::vector<PartialRanking> partials;
};

// Draws truth, profiles, noise and the random assignment for replicate
// `index`. In balanced mode the random assignment is balanced before the
// reviews are drawn, so both modes share every other draw.
inline ReplicateData simulate_replicate(const SimParams& p, AssignMode mode,
                                        std::size_t index,
                                        const BalanceParams& balance_params = {}) {
  p.validate();
  ReplicateData d;
  auto score_rng = make_stream(p.seed, index, Stream::kScores);
  auto bias_rng = make_stream(p.seed, index, Stream::kBias);
  auto error_rng = make_stream(p.seed, index, Stream::kError);
  auto noise_rng = make_stream(p.seed, index, Stream::kReviewNoise);
  d.truth = sample_true_scores(p.n_p, p.sd_s, score_rng);
  d.truth_ranking = d.truth.ranking();
  d.profiles = sample_reviewers(p.n_p, p.br_sd, p.er_df, bias_rng, error_rng);
  d.noise = ReviewNoise::draw(p.n_p, noise_rng);
  const auto constraints = Constraints::self_only(p.n_p);
  d.random_assignment = random_assignment(
      p.n_p, p.n_r, constraints, derive_seed(p.seed, index, Stream::kAssignment));
  if (mode == AssignMode::kBalanced) {
    BalanceParams bp = balance_params;
    bp.seed = derive_seed(p.seed, index, Stream::kBalance);
    d.assignment = balance(d.random_assignment, constraints, bp).assignment;
  } else {
    d.assignment = d.random_assignment;
  }
  d.partials = simulate_reviews(d.truth, d.profiles, d.assignment, d.noise);
  return d;
}

inline Ranking aggregate(const std::vector<PartialRanking>& partials, std::size_t n_p,
                         std::size_t n_r, Method method, const AnnealParams& anneal) {
  if (method == Method::kMbc) return mbc_rank(mbc_scores(partials, n_r, n_p));
  return cigr_search(partials, n_p, anneal).ranking;
}

inline MetricReport evaluate(const Ranking& inferred, const Ranking& truth,
                             const std::vector<PartialRanking>& partials) {
  MetricReport m;
  m.truth_ci = truth_concordance(inferred, truth);
  m.top_fraction_accuracy = top_fraction_accuracy(inferred, truth, 0.2);
  m.fit_ci = fit_concordance(inferred, partials);
  return m;
}

inline AnnealParams replicate_anneal(const AnnealParams& base, const SimParams& p,
                                     std::size_t index) {
  AnnealParams a = base;
  a.seed = derive_seed(p.seed, index, Stream::kAlgorithm);
  return a;
}

inline MetricReport score_replicate(const ReplicateData& d, const SimParams& p,
                                    Method method, std::size_t index,
                                    const ExperimentConfig& cfg) {
  const Ranking r = aggregate(d.partials, p.n_p, p.n_r, method,
                              replicate_anneal(cfg.anneal, p, index));
  return evaluate(r, d.truth_ranking, d.partials);
}

inline MetricReport run_replicate(const SimParams& p, Method method, AssignMode mode,
                                  std::size_t index, const ExperimentConfig& cfg = {}) {
  const auto d = simulate_replicate(p, mode, index, cfg.balance);
  return score_replicate(d, p, method, index, cfg);
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepSpec {
  std::string param;  // n_p, n_r, sd_s, br_sd or er_df
  std::vector<double> grid;
  SimParams base;
  std::vector<Method> methods{Method::kMbc};
  std::vector<AssignMode> modes{AssignMode::kRandom};
  std::size_t replicates = 1000;
  double confidence = 0.999;
};

struct SweepRow {
  std::string param;
  double value = 0.0;
  Method method = Method::kMbc;
  AssignMode mode = AssignMode::kRandom;
  double mean_ci = 0.0;
  double ci_hw = 0.0;
  double mean_t02 = 0.0;
  double t02_hw = 0.0;
  std::size_t n_reps = 0;
  std::vector<double> ci_samples;  // per replicate, in index order
  std::vector<double> t02_samples;
};

inline SimParams with_param(SimParams p, const std::string& name, double value) {
  if (name == "n_p")
    p.n_p = static_cast<std::size_t>(std::llround(value));
  else if (name == "n_r")
    p.n_r = static_cast<std::size_t>(std::llround(value));
  else if (name == "sd_s")
    p.sd_s = value;
  else if (name == "br_sd")
    p.br_sd = value;
  else if (name == "er_df")
    p.er_df = value;
  else
    throw InputError("unknown sweep parameter '" + name + "'");
  return p;
}

inline SweepRow summarize(const std::string& param, double value, Method method,
                          AssignMode mode, const std::vector<MetricReport>& reports,
                          double confidence) {
  SweepRow row;
  row.param = param;
  row.value = value;
  row.method = method;
  row.mode = mode;
  for (const auto& r : reports) {
    row.ci_samples.push_back(r.truth_ci);
    row.t02_samples.push_back(r.top_fraction_accuracy);
  }
  row.n_reps = reports.size();
  row.mean_ci = stats::mean(row.ci_samples);
  row.mean_t02 = stats::mean(row.t02_samples);
  row.ci_hw = stats::normal_halfwidth(row.ci_samples, confidence);
  row.t02_hw = stats::normal_halfwidth(row.t02_samples, confidence);
  return row;
}

// Rows ordered by grid value, then mode, then method. Within a grid point
// every method sees the same simulated round (common random numbers).
inline std::vector<SweepRow> sweep(const SweepSpec& spec, const ExperimentConfig& cfg = {}) {
  if (spec.grid.empty()) throw InputError("sweep grid is empty");
  if (spec.replicates < 1) throw InputError("replicates must be >= 1");
  if (spec.methods.empty() || spec.modes.empty())
    throw InputError("sweep needs at least one method and mode");
  std::vector<SweepRow> rows;
  for (double value : spec.grid) {
    const SimParams p = with_param(spec.base, spec.param, value);
    p.validate();
    for (AssignMode mode : spec.modes) {
      const std::size_t nm = spec.methods.size();
      auto reports = parallel_map(spec.replicates, cfg.threads, [&](std::size_t k) {
        const auto d = simulate_replicate(p, mode, k, cfg.balance);
        std::vector<MetricReport> per_method;
        for (Method m : spec.methods) per_method.push_back(score_replicate(d, p, m, k, cfg));
        return per_method;
      });
      for (std::size_t mi = 0; mi < nm; ++mi) {
        std::vector<MetricReport> col;
        col.reserve(reports.size());
        for (const auto& r : reports) col.push_back(r[mi]);
        rows.push_back(summarize(spec.param, value, spec.methods[mi], mode, col,
                                 spec.confidence));
      }
    }
  }
  return rows;
}

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "param,value,method,mode,mean_ci,ci_hw,mean_t02,t02_hw,n_reps\n";
  for (const auto& r : rows)
    out << r.param << ',' << format_number(r.value) << ',' << to_string(r.method) << ','
        << to_string(r.mode) << ',' << format_number(r.mean_ci) << ','
        << format_number(r.ci_hw) << ',' << format_number(r.mean_t02) << ','
        << format_number(r.t02_hw) << ',' << r.n_reps << '\n';
}

// ---------------------------------------------------------------------------
// Paired comparisons

// Differences are first-arm minus second-arm.
struct Comparison {
  std::string label_a;
  std::string label_b;
  double mean_ci_a = 0.0;
  double mean_ci_b = 0.0;
  stats::PairedTest ci_test;
  double mean_t02_a = 0.0;
  double mean_t02_b = 0.0;
  stats::PairedTest t02_test;
};

inline Comparison compare_samples(std::string label_a, std::string label_b,
                                  const std::vector<MetricReport>& a,
                                  const std::vector<MetricReport>& b) {
  std::vector<double> ca, cb, ta, tb;
  for (const auto& r : a) {
    ca.push_back(r.truth_ci);
    ta.push_back(r.top_fraction_accuracy);
  }
  for (const auto& r : b) {
    cb.push_back(r.truth_ci);
    tb.push_back(r.top_fraction_accuracy);
  }
  Comparison c;
  c.label_a = std::move(label_a);
  c.label_b = std::move(label_b);
  c.mean_ci_a = stats::mean(ca);
  c.mean_ci_b = stats::mean(cb);
  c.mean_t02_a = stats::mean(ta);
  c.mean_t02_b = stats::mean(tb);
  c.ci_test = stats::paired_t_test(ca, cb);
  c.t02_test = stats::paired_t_test(ta, tb);
  return c;
}

// Paired per-replicate reports for two methods on identical rounds.
inline std::pair<std::vector<MetricReport>, std::vector<MetricReport>> paired_reports(
    const SimParams& p, Method a, Method b, AssignMode mode, std::size_t replicates,
    const ExperimentConfig& cfg) {
  auto both = parallel_map(replicates, cfg.threads, [&](std::size_t k) {
    const auto d = simulate_replicate(p, mode, k, cfg.balance);
    const auto ra = score_replicate(d, p, a, k, cfg);
    const auto rb = a == b ? ra : score_replicate(d, p, b, k, cfg);
    return std::pair{ra, rb};
  });
  std::vector<MetricReport> ra, rb;
  for (auto& [x, y] : both) {
    ra.push_back(x);
    rb.push_back(y);
  }
  return {ra, rb};
}

// CIGR minus MBC on identical rounds.
inline Comparison compare_methods(const SimParams& p, std::size_t replicates,
                                  const ExperimentConfig& cfg = {},
                                  AssignMode mode = AssignMode::kRandom,
                                  Method a = Method::kCigr, Method b = Method::kMbc) {
  if (replicates < 2) throw InputError("comparison needs >= 2 replicates");
  const auto [ra, rb] = paired_reports(p, a, b, mode, replicates, cfg);
  return compare_samples(to_string(a), to_string(b), ra, rb);
}

inline void write_comparison_header(std::ostream& out) {
  out << "param,value,arm_a,arm_b,mean_ci_a,mean_ci_b,ci_diff,ci_p,mean_t02_a,"
         "mean_t02_b,t02_diff,t02_p,n_reps\n";
}

inline void write_comparison_row(std::ostream& out, const std::string& param, double value,
                                 const Comparison& c) {
  out << param << ',' << format_number(value) << ',' << c.label_a << ',' << c.label_b << ','
      << format_number(c.mean_ci_a) << ',' << format_number(c.mean_ci_b) << ','
      << format_number(c.ci_test.mean_diff) << ',' << format_number(c.ci_test.p_value) << ','
      << format_number(c.mean_t02_a) << ',' << format_number(c.mean_t02_b) << ','
      << format_number(c.t02_test.mean_diff) << ',' << format_number(c.t02_test.p_value)
      << ',' << c.ci_test.n << '\n';
}

// ---------------------------------------------------------------------------
// Superiority boundary in the (sd_s, er_df) plane

// Interpolated zero of `diff` over `grid`, at the first sign change.
inline std::optional<double> find_crossing(const std::vector<double>& grid,
                                           const std::vector<double>& diff) {
  if (grid.size() != diff.size()) throw InputError("crossing: size mismatch");
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    if (diff[k] == 0.0) return grid[k];
    if ((diff[k] > 0.0) != (diff[k + 1] > 0.0) && diff[k + 1] != 0.0) {
      const double t = diff[k] / (diff[k] - diff[k + 1]);
      return grid[k] + t * (grid[k + 1] - grid[k]);
    }
    if (diff[k + 1] == 0.0) return grid[k + 1];
  }
  return std::nullopt;
}

struct BoundaryPoint {
  double sd_s = 0.0;
  std::vector<double> diffs;  // mean CIGR - MBC truth CI per er grid value
  std::optional<double> crossing;
};

struct BoundaryRecord {
  std::vector<double> er_grid;
  std::vector<BoundaryPoint> points;
  std::optional<stats::LinearFit> fit;  // crossing = intercept + slope * sd_s
};

// OLS through the uncensored crossings.
inline std::optional<stats::LinearFit> fit_boundary(const std::vector<BoundaryPoint>& points,
                                                    double level = 0.99) {
  std::vector<double> x, y;
  for (const auto& pt : points)
    if (pt.crossing) {
      x.push_back(pt.sd_s);
      y.push_back(*pt.crossing);
    }
  if (x.size() < 2) return std::nullopt;
  return stats::ols(x, y, level);
}

inline BoundaryRecord boundary_from_diffs(const std::vector<double>& sd_grid,
                                          const std::vector<double>& er_grid,
                                          const std::vector<std::vector<double>>& diffs,
                                          double level = 0.99) {
  BoundaryRecord rec;
  rec.er_grid = er_grid;
  for (std::size_t s = 0; s < sd_grid.size(); ++s) {
    BoundaryPoint pt{sd_grid[s], diffs[s], find_crossing(er_grid, diffs[s])};
    rec.points.push_back(std::move(pt));
  }
  rec.fit = fit_boundary(rec.points, level);
  return rec;
}

inline BoundaryRecord boundary(const std::vector<double>& sd_grid,
                               const std::vector<double>& er_grid, const SimParams& base,
                               std::size_t replicates, const ExperimentConfig& cfg = {}) {
  if (sd_grid.empty() || er_grid.size() < 2) throw InputError("boundary grids too small");
  if (replicates < 1) throw InputError("replicates must be >= 1");
  std::vector<std::vector<double>> diffs;
  for (double sd : sd_grid) {
    std::vector<double> row;
    for (double er : er_grid) {
      SimParams p = base;
      p.sd_s = sd;
      p.er_df = er;
      const auto [rc, rm] =
          paired_reports(p, Method::kCigr, Method::kMbc, AssignMode::kRandom, replicates, cfg);
      double total = 0.0;
      for (std::size_t k = 0; k < rc.size(); ++k) total += rc[k].truth_ci - rm[k].truth_ci;
      row.push_back(total / static_cast<double>(rc.size()));
    }
    diffs.push_back(std::move(row));
  }
  return boundary_from_diffs(sd_grid, er_grid, diffs);
}

inline void write_boundary_csv(std::ostream& out, const BoundaryRecord& rec) {
  out << "sd_s,er_crossing,censored,band_lo,band_hi\n";
  for (const auto& pt : rec.points) {
    out << format_number(pt.sd_s) << ',';
    if (pt.crossing)
      out << format_number(*pt.crossing) << ",0,";
    else
      out << ",1,";
    if (rec.fit) {
      const double yhat = rec.fit->intercept + rec.fit->slope * pt.sd_s;
      const double hw = rec.fit->band_halfwidth(pt.sd_s);
      out << format_number(yhat - hw) << ',' << format_number(yhat + hw);
    } else {
      out << ',';
    }
    out << '\n';
  }
}

inline void write_boundary_fit_csv(std::ostream& out, const BoundaryRecord& rec) {
  out << "term,estimate,se,ci_lo,ci_hi,level,n_points\n";
  if (!rec.fit) return;
  const auto& f = *rec.fit;
  out << "intercept," << format_number(f.intercept) << ',' << format_number(f.intercept_se)
      << ',' << format_number(f.intercept_lo) << ',' << format_number(f.intercept_hi) << ','
      << format_number(f.level) << ',' << f.n << '\n';
  out << "slope," << format_number(f.slope) << ',' << format_number(f.slope_se) << ','
      << format_number(f.slope_lo) << ',' << format_number(f.slope_hi) << ','
      << format_number(f.level) << ',' << f.n << '\n';
}

inline void write_boundary_grid_csv(std::ostream& out, const BoundaryRecord& rec) {
  out << "sd_s,er_df,mean_diff_ci\n";
  for (const auto& pt : rec.points)
    for (std::size_t k = 0; k < rec.er_grid.size(); ++k)
      out << format_number(pt.sd_s) << ',' << format_number(rec.er_grid[k]) << ','
          << format_number(pt.diffs[k]) << '\n';
}

// ---------------------------------------------------------------------------
// Balanced versus random assignment

struct BalancedComparison {
  std::vector<SweepRow> rows;  // {mbc, cigr} x {random, balanced} per er value
  std::vector<std::pair<double, Comparison>> mbc_gain;   // balanced - random
  std::vector<std::pair<double, Comparison>> cigr_gain;  // balanced - random
};

inline BalancedComparison balanced_comparison(const SimParams& base,
                                              const std::vector<double>& er_grid,
                                              std::size_t replicates,
                                              const ExperimentConfig& cfg = {},
                                              double confidence = 0.999) {
  if (er_grid.empty()) throw InputError("er grid is empty");
  if (replicates < 2) throw InputError("replicates must be >= 2");
  BalancedComparison out;
  for (double er : er_grid) {
    SimParams p = base;
    p.er_df = er;
    p.validate();
    // One round per replicate; the balanced arm balances the same random
    // assignment and reuses the same truth, profiles and noise grid.
    auto reports = parallel_map(replicates, cfg.threads, [&](std::size_t k) {
      auto d = simulate_replicate(p, AssignMode::kRandom, k, cfg.balance);
      std::array<MetricReport, 4> r;
      r[0] = score_replicate(d, p, Method::kMbc, k, cfg);
      r[1] = score_replicate(d, p, Method::kCigr, k, cfg);
      BalanceParams bp = cfg.balance;
      bp.seed = derive_seed(p.seed, k, Stream::kBalance);
      d.assignment = balance(d.random_assignment, Constraints::self_only(p.n_p), bp).assignment;
      d.partials = simulate_reviews(d.truth, d.profiles, d.assignment, d.noise);
      r[2] = score_replicate(d, p, Method::kMbc, k, cfg);
      r[3] = score_replicate(d, p, Method::kCigr, k, cfg);
      return r;
    });
    std::array<std::vector<MetricReport>, 4> cols;
    for (const auto& r : reports)
      for (std::size_t c = 0; c < 4; ++c) cols[c].push_back(r[c]);
    out.rows.push_back(summarize("er_df", er, Method::kMbc, AssignMode::kRandom, cols[0], confidence));
    out.rows.push_back(summarize("er_df", er, Method::kCigr, AssignMode::kRandom, cols[1], confidence));
    out.rows.push_back(summarize("er_df", er, Method::kMbc, AssignMode::kBalanced, cols[2], confidence));
    out.rows.push_back(summarize("er_df", er, Method::kCigr, AssignMode::kBalanced, cols[3], confidence));
    out.mbc_gain.emplace_back(er, compare_samples("mbc_balanced", "mbc_random", cols[2], cols[0]));
    out.cigr_gain.emplace_back(er, compare_samples("cigr_balanced", "cigr_random", cols[3], cols[1]));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Multi-stage review

struct MultistageSpec {
  std::vector<std::size_t> stage_nr;  // reviews per reviewer in each stage
  double cut_fraction = 0.5;          // dropped from the bottom between stages
  std::size_t band_width = 10;
  // Each reviewer's band is offset by a uniform draw from {-1, 0, +1}.
  bool jitter = true;

  void validate(std::size_t n_p) const {
    if (stage_nr.size() < 2) throw InputError("multistage needs >= 2 stages");
    if (!(cut_fraction >= 0.0 && cut_fraction < 1.0))
      throw InputError("cut_fraction must be in [0, 1)");
    for (std::size_t s = 0; s < stage_nr.size(); ++s) {
      if (stage_nr[s] < 2) throw InputError("each stage needs n_r >= 2");
      if (s > 0 && band_width < stage_nr[s])
        throw InputError("band_width must be >= the n_r of every banded stage");
    }
    if (stage_nr.front() >= n_p) throw InputError("stage 1 n_r must be < n_p");
  }
};

struct MultistageReport {
  MetricReport final;            // truth_ci on survivors, T_0.2 on full truth
  Ranking full_ranking;          // survivors first, then eliminated, latest stage first
  std::vector<std::size_t> survivors_per_stage;
  std::size_t true_top_eliminated = 0;
};

namespace detail {

// Survivors (global ids, sorted by current rank) are cut into contiguous
// bands; each reviewer draws its proposals from one band, preferring the
// least-loaded eligible proposals.
template <typename Rng>
Assignment banded_assignment(const std::vector<ProposalId>& ranked_survivors,
                             std::size_t n_reviewers, std::size_t n_r,
                             std::size_t band_width, bool jitter, Rng& rng) {
  const std::size_t k = ranked_survivors.size();
  const std::size_t bands = std::max<std::size_t>(1, k / band_width);
  auto band_of = [&](std::size_t b) {
    return std::pair{b * k / bands, (b + 1) * k / bands};
  };
  std::vector<std::size_t> load(k, 0);
  std::vector<std::size_t> reviewers(n_reviewers);
  std::iota(reviewers.begin(), reviewers.end(), std::size_t{0});
  std::shuffle(reviewers.begin(), reviewers.end(), rng);
  std::uniform_int_distribution<int> offset(-1, 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Assignment a;
  a.reviews.resize(n_reviewers);
  for (std::size_t slot = 0; slot < n_reviewers; ++slot) {
    const std::size_t r = reviewers[slot];
    long b = static_cast<long>(slot % bands);
    if (jitter && bands > 1) b += offset(rng);
    b = std::clamp<long>(b, 0, static_cast<long>(bands) - 1);
    // Widen to neighbouring bands until enough eligible proposals exist.
    std::size_t lo = band_of(static_cast<std::size_t>(b)).first;
    std::size_t hi = band_of(static_cast<std::size_t>(b)).second;
    auto eligible = [&] {
      std::size_t e = 0;
      for (std::size_t x = lo; x < hi; ++x) e += ranked_survivors[x] != r ? 1 : 0;
      return e;
    };
    while (eligible() < n_r) {
      if (lo > 0) --lo;
      if (eligible() >= n_r) break;
      if (hi < k) ++hi;
      if (lo == 0 && hi == k) break;
    }
    if (eligible() < n_r) throw InputError("too few survivors to fill a review set");
    std::vector<std::pair<std::pair<std::size_t, double>, std::size_t>> cand;
    for (std::size_t x = lo; x < hi; ++x)
      if (ranked_survivors[x] != r) cand.push_back({{load[x], unit(rng)}, x});
    std::sort(cand.begin(), cand.end());
    for (std::size_t t = 0; t < n_r; ++t) {
      const std::size_t x = cand[t].second;
      ++load[x];
      a.reviews[r].push_back(ranked_survivors[x]);
    }
    std::sort(a.reviews[r].begin(), a.reviews[r].end());
  }
  return a;
}

}  // namespace detail

// Stage 1 is the standard pipeline with stage_nr[0] reviews per reviewer;
// each later stage drops the bottom cut_fraction, keeps every PI as a
// reviewer, and re-reviews the survivors on a banded assignment. The base
// SimParams n_r is ignored.
inline MultistageReport multistage(const SimParams& base, const MultistageSpec& spec,
                                   std::size_t index, const ExperimentConfig& cfg = {}) {
  SimParams p = base;
  spec.validate(p.n_p);
  p.n_r = spec.stage_nr.front();
  p.validate();
  const auto d = simulate_replicate(p, AssignMode::kRandom, index, cfg.balance);
  const std::size_t n = p.n_p;

  MultistageReport rep;
  Ranking current = aggregate(d.partials, n, p.n_r, Method::kCigr,
                              replicate_anneal(cfg.anneal, p, index));
  std::vector<ProposalId> ranked(current.begin(), current.end());  // global ids
  std::vector<std::vector<ProposalId>> eliminated;
  rep.survivors_per_stage.push_back(ranked.size());

  for (std::size_t stage = 1; stage < spec.stage_nr.size(); ++stage) {
    const std::size_t n_r = spec.stage_nr[stage];
    const std::size_t drop =
        static_cast<std::size_t>(std::floor(spec.cut_fraction * static_cast<double>(ranked.size())));
    const std::size_t keep = ranked.size() - drop;
    if (keep < std::max<std::size_t>(n_r + 1, 2))
      throw InputError("too few survivors for stage " + std::to_string(stage + 1));
    eliminated.emplace_back(ranked.begin() + static_cast<long>(keep), ranked.end());
    ranked.resize(keep);
    rep.survivors_per_stage.push_back(keep);

    auto stage_rng = make_stream(p.seed, index, Stream::kStage, stage);
    const Assignment a =
        detail::banded_assignment(ranked, n, n_r, spec.band_width, spec.jitter, stage_rng);
    auto noise_rng = make_stream(p.seed, index, Stream::kReviewNoise, stage);
    const auto noise = ReviewNoise::draw(n, noise_rng);
    auto global_partials = simulate_reviews(d.truth, d.profiles, a, noise);

    // Re-index survivors 0..keep-1 for the stage aggregation.
    std::vector<ProposalId> local(n, 0);
    for (std::size_t x = 0; x < keep; ++x) local[ranked[x]] = static_cast<ProposalId>(x);
    for (auto& partial : global_partials)
      for (auto& g : partial.groups)
        for (auto& id : g) id = local[id];
    AnnealParams ap = replicate_anneal(cfg.anneal, p, index);
    ap.seed ^= 0x5851f42d4c957f2dULL * (stage + 1);
    const Ranking stage_rank = cigr_search(global_partials, keep, ap).ranking;
    std::vector<ProposalId> reordered;
    for (ProposalId x : stage_rank) reordered.push_back(ranked[x]);
    ranked = std::move(reordered);
  }

  std::vector<ProposalId> full = ranked;
  for (auto it = eliminated.rbegin(); it != eliminated.rend(); ++it)
    full.insert(full.end(), it->begin(), it->end());
  rep.full_ranking = Ranking(std::move(full));

  // Truth restricted to survivors, relabelled by survivor rank.
  std::vector<ProposalId> survivors_by_truth;
  for (ProposalId id : d.truth_ranking) {
    if (std::find(ranked.begin(), ranked.end(), id) != ranked.end())
      survivors_by_truth.push_back(id);
  }
  std::vector<ProposalId> local(n, 0);
  for (std::size_t x = 0; x < ranked.size(); ++x) local[ranked[x]] = static_cast<ProposalId>(x);
  std::vector<ProposalId> truth_local;
  for (ProposalId id : survivors_by_truth) truth_local.push_back(local[id]);
  const Ranking inferred_local = Ranking::identity(ranked.size());
  rep.final.truth_ci = truth_concordance(inferred_local, Ranking(std::move(truth_local)));
  rep.final.top_fraction_accuracy = top_fraction_accuracy(rep.full_ranking, d.truth_ranking, 0.2);
  rep.final.fit_ci = fit_concordance(rep.full_ranking, d.partials);

  const std::size_t top = top_fraction_count(0.2, n);
  for (std::size_t x = 0; x < top; ++x)
    if (std::find(ranked.begin(), ranked.end(), d.truth_ranking[x]) == ranked.end())
      ++rep.true_top_eliminated;
  return rep;
}

struct MultistageStudy {
  Comparison vs_single;  // multistage minus single-stage, on T_0.2 and CI
  std::size_t single_stage_nr = 0;
  std::size_t replicates = 0;
  double mean_true_top_eliminated = 0.0;
};

// Multi-stage against a single stage with the same total workload
// (sum of stage_nr) on the same truth and reviewer profiles.
inline MultistageStudy multistage_study(const SimParams& base, const MultistageSpec& spec,
                                        std::size_t replicates,
                                        const ExperimentConfig& cfg = {}) {
  if (replicates < 2) throw InputError("replicates must be >= 2");
  std::size_t total = 0;
  for (std::size_t nr : spec.stage_nr) total += nr;
  SimParams single = base;
  single.n_r = total;
  single.validate();
  auto both = parallel_map(replicates, cfg.threads, [&](std::size_t k) {
    const auto ms = multistage(base, spec, k, cfg);
    MetricReport ms_metric = ms.final;
    // Score the multi-stage ranking on the full truth for a like-for-like CI.
    const auto d = simulate_replicate(single, AssignMode::kRandom, k, cfg.balance);
    ms_metric.truth_ci = truth_concordance(ms.full_ranking, d.truth_ranking);
    const auto ss = score_replicate(d, single, Method::kCigr, k, cfg);
    return std::tuple{ms_metric, ss, ms.true_top_eliminated};
  });
  std::vector<MetricReport> a, b;
  double elim = 0.0;
  for (const auto& [x, y, e] : both) {
    a.push_back(x);
    b.push_back(y);
    elim += static_cast<double>(e);
  }
  MultistageStudy s;
  s.vs_single = compare_samples("multistage", "single_stage", a, b);
  s.single_stage_nr = total;
  s.replicates = replicates;
  s.mean_true_top_eliminated = elim / static_cast<double>(replicates);
  return s;
}

}  // namespace dpr
