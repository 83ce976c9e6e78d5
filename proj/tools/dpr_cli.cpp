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

// Command-line front end: simulation, assignment, aggregation and the
// experiment drivers. Every subcommand writes CSV files plus meta.txt into
// --out.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dpr/dpr.hpp"

#ifndef DPR_VERSION
#define DPR_VERSION "unknown"
#endif

namespace fs = std::filesystem;

namespace {

struct Options {
  dpr::SimParams sim;
  dpr::ExperimentConfig cfg;
  std::size_t replicates = 0;  // 0: the experiment's own default
  std::string out = ".";
};

// Ordered key=value lines for meta.txt.
class Meta {
 public:
  template <typename T>
  void add(const std::string& key, const T& value) {
    std::ostringstream s;
    s << value;
    lines_.emplace_back(key, s.str());
  }

  void add_list(const std::string& key, const std::vector<double>& xs) {
    std::string joined;
    for (std::size_t k = 0; k < xs.size(); ++k)
      joined += (k ? "," : "") + dpr::format_number(xs[k]);
    lines_.emplace_back(key, joined);
  }

  void write(const fs::path& path) const {
    std::ofstream out(path);
    out << "version=" << DPR_VERSION << '\n';
    for (const auto& [k, v] : lines_) out << k << '=' << v << '\n';
  }

 private:
  std::vector<std::pair<std::string, std::string>> lines_;
};

std::ofstream open_out(const Options& o, const std::string& name) {
  fs::create_directories(o.out);
  std::ofstream f(fs::path(o.out) / name);
  if (!f) throw std::runtime_error("cannot write " + (fs::path(o.out) / name).string());
  return f;
}

void add_sim_meta(Meta& m, const Options& o) {
  m.add("seed", o.sim.seed);
  m.add("n_p", o.sim.n_p);
  m.add("n_r", o.sim.n_r);
  m.add("sd_s", dpr::format_number(o.sim.sd_s));
  m.add("br_sd", dpr::format_number(o.sim.br_sd));
  m.add("er_df", dpr::format_number(o.sim.er_df));
  m.add("threads", o.cfg.threads);
}

void add_anneal_meta(Meta& m, const dpr::AnnealParams& a) {
  m.add("anneal.t0", dpr::format_number(a.t0));
  m.add("anneal.beta", dpr::format_number(a.beta));
  m.add("anneal.epsilon", a.epsilon);
  m.add("anneal.rho", dpr::format_number(a.rho));
  m.add("anneal.max_restarts", a.max_restarts);
  m.add("anneal.max_iters", a.max_iters);
  m.add("anneal.random_start", a.random_start ? 1 : 0);
  m.add("anneal.max_set_size", a.max_set_size);
}

void add_balance_meta(Meta& m, const dpr::BalanceParams& b) {
  m.add("balance.t0", dpr::format_number(b.t0));
  m.add("balance.beta", dpr::format_number(b.beta));
  m.add("balance.max_iters", b.max_iters);
}

void add_sim_flags(CLI::App* app, Options& o) {
  app->add_option("--seed", o.sim.seed, "Master seed")->capture_default_str();
  app->add_option("--replicates", o.replicates, "Replicates per condition (0: default)");
  app->add_option("--out", o.out, "Output directory")->capture_default_str();
  app->add_option("--threads", o.cfg.threads, "Worker threads")->capture_default_str();
  app->add_option("--n-p", o.sim.n_p, "Proposals (= PIs)")->capture_default_str();
  app->add_option("--n-r", o.sim.n_r, "Reviews per PI")->capture_default_str();
  app->add_option("--sd-s", o.sim.sd_s, "Spread of true scores")->capture_default_str();
  app->add_option("--br-sd", o.sim.br_sd, "Spread of reviewer bias")->capture_default_str();
  app->add_option("--er-df", o.sim.er_df, "Reviewer error chi-squared df (0: noise free)")
      ->capture_default_str();
}

void add_anneal_flags(CLI::App* app, dpr::AnnealParams& a) {
  app->add_option("--t0", a.t0, "Initial temperature")->capture_default_str();
  app->add_option("--beta", a.beta, "Cooling factor")->capture_default_str();
  app->add_option("--epsilon", a.epsilon, "Near-optimal cost threshold")->capture_default_str();
  app->add_option("--rho", a.rho, "Patience before restart")->capture_default_str();
  app->add_option("--max-restarts", a.max_restarts)->capture_default_str();
  app->add_option("--max-iters", a.max_iters, "0: 50000 * n_p")->capture_default_str();
  app->add_flag("--random-start", a.random_start, "Start from a random permutation");
  app->add_option("--max-set-size", a.max_set_size)->capture_default_str();
}

void add_balance_flags(CLI::App* app, dpr::BalanceParams& b) {
  app->add_option("--balance-t0", b.t0)->capture_default_str();
  app->add_option("--balance-beta", b.beta)->capture_default_str();
  app->add_option("--balance-iters", b.max_iters, "0: 200 * n * m")->capture_default_str();
}

std::size_t reps_or(const Options& o, std::size_t fallback) {
  return o.replicates ? o.replicates : fallback;
}

void write_assignment_csv(std::ostream& out, const dpr::Assignment& a) {
  out << "reviewer_id,proposal_ids\n";
  for (std::size_t i = 0; i < a.reviews.size(); ++i) {
    out << i;
    for (dpr::ProposalId p : a.reviews[i]) out << ',' << p;
    out << '\n';
  }
}

void write_ranking_csv(std::ostream& out, const dpr::Ranking& r, const dpr::MbcScores& s) {
  out << "proposal_id,score,rank\n";
  for (std::size_t pos = 0; pos < r.size(); ++pos)
    out << r[pos] << ',' << dpr::format_number(s.score[r[pos]]) << ',' << pos + 1 << '\n';
}

// ---------------------------------------------------------------------------

void run_simulate(const Options& o, dpr::AssignMode mode, std::size_t replicate) {
  o.sim.validate();
  const auto d = dpr::simulate_replicate(o.sim, mode, replicate, o.cfg.balance);
  {
    auto f = open_out(o, "truth.csv");
    f << "proposal_id,score,rank\n";
    for (std::size_t pos = 0; pos < d.truth_ranking.size(); ++pos) {
      const auto id = d.truth_ranking[pos];
      f << id << ',' << dpr::format_number(d.truth.score[id]) << ',' << pos + 1 << '\n';
    }
  }
  {
    auto f = open_out(o, "partials.txt");
    dpr::text::write_partials(f, d.partials);
  }
  {
    auto f = open_out(o, "assignment.csv");
    write_assignment_csv(f, d.assignment);
  }
  {
    auto f = open_out(o, "reviewers.csv");
    f << "reviewer_id,mu,sigma\n";
    for (std::size_t i = 0; i < d.profiles.size(); ++i)
      f << i << ',' << dpr::format_number(d.profiles[i].mu) << ','
        << dpr::format_number(d.profiles[i].sigma) << '\n';
  }
  Meta m;
  m.add("command", "simulate");
  add_sim_meta(m, o);
  m.add("mode", dpr::to_string(mode));
  m.add("replicate", replicate);
  add_balance_meta(m, o.cfg.balance);
  m.write(fs::path(o.out) / "meta.txt");
}

void run_assign(const Options& o, std::size_t n, std::size_t m, bool balanced,
                const std::string& constraints_path) {
  dpr::Constraints c = dpr::Constraints::self_only(n);
  if (!constraints_path.empty()) {
    std::ifstream in(constraints_path);
    if (!in) throw dpr::InputError("cannot read " + constraints_path);
    c = dpr::Constraints::from_lists(n, dpr::text::read_constraints(in, n));
  }
  auto a = dpr::random_assignment(n, m, c, o.sim.seed);
  const double initial = dpr::entropy(dpr::pair_counts(a, n), n, m);
  double final_entropy = initial;
  bool stuck = false;
  if (balanced) {
    dpr::BalanceParams bp = o.cfg.balance;
    bp.seed = o.sim.seed;
    auto res = dpr::balance(a, c, bp);
    a = std::move(res.assignment);
    final_entropy = res.entropy;
    stuck = res.no_tradeable_pair;
    if (stuck) std::cerr << "warning: no tradeable pair; assignment left unbalanced\n";
  }
  auto f = open_out(o, "assignment.csv");
  write_assignment_csv(f, a);
  const auto alpha = dpr::pair_counts(a, n);
  std::int32_t max_alpha = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) max_alpha = std::max(max_alpha, alpha(i, j));

  Meta meta;
  meta.add("command", "assign");
  meta.add("seed", o.sim.seed);
  meta.add("n", n);
  meta.add("m", m);
  meta.add("balanced", balanced ? 1 : 0);
  meta.add("constraints", constraints_path.empty() ? "none" : constraints_path);
  add_balance_meta(meta, o.cfg.balance);
  meta.add("initial_entropy", dpr::format_number(initial));
  meta.add("entropy", dpr::format_number(final_entropy));
  meta.add("entropy_cap", dpr::format_number(dpr::entropy_cap(n, m)));
  meta.add("max_pair_count", max_alpha);
  meta.add("no_tradeable_pair", stuck ? 1 : 0);
  meta.write(fs::path(o.out) / "meta.txt");
}

void run_aggregate(const Options& o, const std::string& method_name, const std::string& input,
                   std::size_t n_p, dpr::AnnealParams anneal) {
  std::ifstream in(input);
  if (!in) throw dpr::InputError("cannot read " + input);
  const auto partials = dpr::text::read_partials(in);
  if (partials.empty()) throw dpr::InputError(input + " holds no rankings");
  if (n_p == 0) {
    for (const auto& p : partials)
      for (const auto& g : p.groups)
        for (auto id : g) n_p = std::max<std::size_t>(n_p, id + 1);
  }
  const auto method = dpr::parse_method(method_name);
  Meta meta;
  meta.add("command", "aggregate");
  meta.add("method", method_name);
  meta.add("input", input);
  meta.add("n_p", n_p);
  meta.add("reviewers", partials.size());

  auto f = open_out(o, "ranking.csv");
  if (method == dpr::Method::kMbc) {
    const std::size_t n_r = partials.front().size();
    const auto scores = dpr::mbc_scores(partials, n_r, n_p);
    write_ranking_csv(f, dpr::mbc_rank(scores), scores);
    meta.add("n_r", n_r);
  } else {
    anneal.seed = o.sim.seed;
    const auto res = dpr::cigr_search(partials, n_p, anneal);
    write_ranking_csv(f, res.ranking, dpr::mbc_scores_over_rankings(res.near_optimal_set));
    auto side = open_out(o, "cigr_run.csv");
    side << "best_cost,restarts,iterations,set_size\n"
         << res.best_cost << ',' << res.restarts_used << ',' << res.iterations_used << ','
         << res.near_optimal_set.size() << '\n';
    meta.add("seed", anneal.seed);
    add_anneal_meta(meta, anneal);
    meta.add("best_cost", res.best_cost);
  }
  meta.write(fs::path(o.out) / "meta.txt");
}

void run_sweep(const Options& o, const std::string& param, const std::vector<double>& grid,
               const std::vector<std::string>& methods, const std::vector<std::string>& modes,
               double confidence) {
  dpr::SweepSpec spec;
  spec.param = param;
  spec.grid = grid;
  spec.base = o.sim;
  spec.methods.clear();
  for (const auto& m : methods) spec.methods.push_back(dpr::parse_method(m));
  spec.modes.clear();
  for (const auto& m : modes) spec.modes.push_back(dpr::parse_mode(m));
  spec.replicates = reps_or(o, 1000);
  spec.confidence = confidence;
  const auto rows = dpr::sweep(spec, o.cfg);
  auto f = open_out(o, "sweep.csv");
  dpr::write_sweep_csv(f, rows);

  Meta meta;
  meta.add("command", "sweep");
  add_sim_meta(meta, o);
  meta.add("param", param);
  meta.add_list("grid", grid);
  meta.add("replicates", spec.replicates);
  meta.add("confidence", dpr::format_number(confidence));
  add_anneal_meta(meta, o.cfg.anneal);
  add_balance_meta(meta, o.cfg.balance);
  meta.write(fs::path(o.out) / "meta.txt");
}

void run_compare(const Options& o, const std::vector<double>& er_grid, const std::string& mode) {
  const std::size_t reps = reps_or(o, 200);
  const auto m = dpr::parse_mode(mode);
  auto f = open_out(o, "compare.csv");
  dpr::write_comparison_header(f);
  for (double er : er_grid) {
    dpr::SimParams p = o.sim;
    p.er_df = er;
    p.validate();
    dpr::write_comparison_row(f, "er_df", er, dpr::compare_methods(p, reps, o.cfg, m));
  }
  Meta meta;
  meta.add("command", "compare");
  add_sim_meta(meta, o);
  meta.add_list("er_grid", er_grid);
  meta.add("mode", mode);
  meta.add("replicates", reps);
  meta.add("test", "paired two-sided t");
  add_anneal_meta(meta, o.cfg.anneal);
  meta.write(fs::path(o.out) / "meta.txt");
}

void run_boundary(const Options& o, const std::vector<double>& sd_grid,
                  const std::vector<double>& er_grid) {
  const std::size_t reps = reps_or(o, 100);
  const auto rec = dpr::boundary(sd_grid, er_grid, o.sim, reps, o.cfg);
  {
    auto f = open_out(o, "boundary.csv");
    dpr::write_boundary_csv(f, rec);
  }
  {
    auto f = open_out(o, "boundary_fit.csv");
    dpr::write_boundary_fit_csv(f, rec);
  }
  {
    auto f = open_out(o, "boundary_grid.csv");
    dpr::write_boundary_grid_csv(f, rec);
  }
  Meta meta;
  meta.add("command", "boundary");
  add_sim_meta(meta, o);
  meta.add_list("sd_grid", sd_grid);
  meta.add_list("er_grid", er_grid);
  meta.add("replicates", reps);
  meta.add("fit_level", "0.99");
  add_anneal_meta(meta, o.cfg.anneal);
  meta.write(fs::path(o.out) / "meta.txt");
}

void run_balanced(const Options& o, const std::vector<double>& er_grid, double confidence) {
  const std::size_t reps = reps_or(o, 1000);
  const auto bc = dpr::balanced_comparison(o.sim, er_grid, reps, o.cfg, confidence);
  {
    auto f = open_out(o, "balanced.csv");
    dpr::write_sweep_csv(f, bc.rows);
  }
  {
    auto f = open_out(o, "balanced_gain.csv");
    dpr::write_comparison_header(f);
    for (const auto& [er, c] : bc.mbc_gain) dpr::write_comparison_row(f, "er_df", er, c);
    for (const auto& [er, c] : bc.cigr_gain) dpr::write_comparison_row(f, "er_df", er, c);
  }
  Meta meta;
  meta.add("command", "balanced-compare");
  add_sim_meta(meta, o);
  meta.add_list("er_grid", er_grid);
  meta.add("replicates", reps);
  meta.add("confidence", dpr::format_number(confidence));
  add_anneal_meta(meta, o.cfg.anneal);
  add_balance_meta(meta, o.cfg.balance);
  meta.write(fs::path(o.out) / "meta.txt");
}

void run_multistage(const Options& o, const dpr::MultistageSpec& spec) {
  const std::size_t reps = reps_or(o, 1000);
  const auto study = dpr::multistage_study(o.sim, spec, reps, o.cfg);
  {
    auto f = open_out(o, "multistage.csv");
    dpr::write_comparison_header(f);
    dpr::write_comparison_row(f, "single_stage_n_r", static_cast<double>(study.single_stage_nr),
                              study.vs_single);
  }
  std::string stages;
  for (std::size_t k = 0; k < spec.stage_nr.size(); ++k)
    stages += (k ? "," : "") + std::to_string(spec.stage_nr[k]);
  Meta meta;
  meta.add("command", "multistage");
  add_sim_meta(meta, o);
  meta.add("stage_nr", stages);
  meta.add("cut_fraction", dpr::format_number(spec.cut_fraction));
  meta.add("band_width", spec.band_width);
  meta.add("band_jitter", spec.jitter ? "+-1 band" : "none");
  meta.add("eliminated_pis_keep_reviewing", 1);
  meta.add("replicates", reps);
  meta.add("mean_true_top_eliminated", dpr::format_number(study.mean_true_top_eliminated));
  add_anneal_meta(meta, o.cfg.anneal);
  meta.write(fs::path(o.out) / "meta.txt");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed peer review simulation and rank aggregation"};
  app.set_version_flag("--version", std::string(DPR_VERSION));
  app.require_subcommand(1);
  Options o;

  auto* simulate = app.add_subcommand("simulate", "Generate one review round");
  add_sim_flags(simulate, o);
  add_balance_flags(simulate, o.cfg.balance);
  std::string sim_mode = "random";
  std::size_t sim_replicate = 0;
  simulate->add_option("--mode", sim_mode, "random or balanced")->capture_default_str();
  simulate->add_option("--replicate", sim_replicate, "Replicate index")->capture_default_str();

  auto* assign = app.add_subcommand("assign", "Build a review assignment");
  std::size_t n = 40, m = 7;
  bool balanced = false;
  std::string constraints;
  assign->add_option("--n", n, "Proposals (= PIs)")->capture_default_str();
  assign->add_option("--m", m, "Proposals per PI")->capture_default_str();
  assign->add_flag("--balanced", balanced, "Maximise pair-count entropy");
  assign->add_option("--seed", o.sim.seed)->capture_default_str();
  assign->add_option("--constraints", constraints, "Lines 'reviewer_id: forbidden ids...'");
  assign->add_option("--out", o.out)->capture_default_str();
  add_balance_flags(assign, o.cfg.balance);

  auto* aggregate = app.add_subcommand("aggregate", "Aggregate partial rankings");
  std::string method = "mbc", input;
  std::size_t agg_np = 0;
  aggregate->add_option("--method", method, "mbc or cigr")->capture_default_str();
  aggregate->add_option("--input", input, "Partial rankings file")->required();
  aggregate->add_option("--n-p", agg_np, "Proposal count (0: largest id + 1)");
  aggregate->add_option("--seed", o.sim.seed)->capture_default_str();
  aggregate->add_option("--out", o.out)->capture_default_str();
  add_anneal_flags(aggregate, o.cfg.anneal);

  auto* sweep = app.add_subcommand("sweep", "Vary one parameter");
  add_sim_flags(sweep, o);
  add_anneal_flags(sweep, o.cfg.anneal);
  add_balance_flags(sweep, o.cfg.balance);
  std::string param = "er_df";
  std::vector<double> grid{5, 10, 15, 20};
  std::vector<std::string> methods{"mbc", "cigr"}, modes{"random"};
  double confidence = 0.999;
  sweep->add_option("--param", param, "n_p, n_r, sd_s, br_sd or er_df")->capture_default_str();
  sweep->add_option("--grid", grid)->delimiter(',')->capture_default_str();
  sweep->add_option("--methods", methods)->delimiter(',')->capture_default_str();
  sweep->add_option("--modes", modes)->delimiter(',')->capture_default_str();
  sweep->add_option("--confidence", confidence)->capture_default_str();

  auto* compare = app.add_subcommand("compare", "CIGR against MBC, paired");
  add_sim_flags(compare, o);
  add_anneal_flags(compare, o.cfg.anneal);
  add_balance_flags(compare, o.cfg.balance);
  std::vector<double> er_grid{5, 10, 15, 20};
  std::string cmp_mode = "random";
  compare->add_option("--er-grid", er_grid)->delimiter(',')->capture_default_str();
  compare->add_option("--mode", cmp_mode)->capture_default_str();

  auto* boundary = app.add_subcommand("boundary", "Where CIGR stops beating MBC");
  add_sim_flags(boundary, o);
  add_anneal_flags(boundary, o.cfg.anneal);
  std::vector<double> sd_grid{2, 5, 10, 15, 20, 25, 30};
  std::vector<double> bnd_er{1, 2, 3, 4, 6, 8, 10, 13, 16, 20, 25, 30, 40};
  boundary->add_option("--sd-grid", sd_grid)->delimiter(',')->capture_default_str();
  boundary->add_option("--er-grid", bnd_er)->delimiter(',')->capture_default_str();

  auto* bal = app.add_subcommand("balanced-compare", "Balanced against random assignment");
  add_sim_flags(bal, o);
  add_anneal_flags(bal, o.cfg.anneal);
  add_balance_flags(bal, o.cfg.balance);
  std::vector<double> bal_er{5, 10, 15, 20};
  bal->add_option("--er-grid", bal_er)->delimiter(',')->capture_default_str();
  bal->add_option("--confidence", confidence)->capture_default_str();

  auto* multi = app.add_subcommand("multistage", "Filter-then-band review rounds");
  add_sim_flags(multi, o);
  add_anneal_flags(multi, o.cfg.anneal);
  dpr::MultistageSpec ms;
  ms.stage_nr = {4, 3};
  bool no_jitter = false;
  multi->add_option("--stage-nr", ms.stage_nr, "Reviews per PI in each stage")
      ->delimiter(',')
      ->capture_default_str();
  multi->add_option("--cut", ms.cut_fraction, "Fraction dropped between stages")
      ->capture_default_str();
  multi->add_option("--band-width", ms.band_width)->capture_default_str();
  multi->add_flag("--no-jitter", no_jitter, "Keep every reviewer on its own band");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) {
      run_simulate(o, dpr::parse_mode(sim_mode), sim_replicate);
    } else if (*assign) {
      run_assign(o, n, m, balanced, constraints);
    } else if (*aggregate) {
      run_aggregate(o, method, input, agg_np, o.cfg.anneal);
    } else if (*sweep) {
      run_sweep(o, param, grid, methods, modes, confidence);
    } else if (*compare) {
      run_compare(o, er_grid, cmp_mode);
    } else if (*boundary) {
      run_boundary(o, sd_grid, bnd_er);
    } else if (*bal) {
      run_balanced(o, bal_er, confidence);
    } else if (*multi) {
      ms.jitter = !no_jitter;
      run_multistage(o, ms);
    }
  } catch (const dpr::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
