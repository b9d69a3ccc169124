// l96da: twin-experiment runner and bound-machinery utilities.
//
//   l96da run [--config FILE] [--seed N] [--out PATH] [--cell mode:alpha]... [--smoke]
//   l96da theory [--beta B] [--c C] [--points N] [--out sweep.csv]
//   l96da estimate-beta [--J 60] [--F 8] [--trials 10] [--horizon 2]

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "l96da/filter.hpp"
#include "l96da/format.hpp"
#include "l96da/harness.hpp"
#include "l96da/theory.hpp"

namespace {

using l96da::format_number;

struct RunOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_path;
  std::vector<std::string> cells;
  std::optional<int> threads;
  bool smoke = false;
};

struct ModelOptions {
  int J = 60;
  double F = 8.0;
  double dt = 0.01;
};

struct BetaOptions {
  int trials = 10;
  double horizon = 2.0;
  std::uint64_t seed = 20240917;
};

struct TheoryOptions {
  std::optional<double> beta;
  double c = 2.0;
  double r = 1.0;
  int m = 10;
  std::optional<int> ny;
  l96da::SweepGrid grid;
  std::string out_path;
};

l96da::ModelParams model_params(const ModelOptions& opt) { return {opt.J, opt.F, opt.dt}; }

int run_command(const RunOptions& opt) {
  l96da::ExperimentConfig cfg = l96da::ExperimentConfig::defaults();
  if (!opt.config_path.empty()) cfg = l96da::load_config(opt.config_path, cfg);
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.out_path) cfg.out_path = *opt.out_path;
  if (opt.threads) cfg.threads = *opt.threads;
  if (opt.smoke) {
    cfg.T = 10;
    cfg.n_paths = 1;
  }
  if (!opt.cells.empty()) {
    std::vector<l96da::FilterConfig> selected;
    for (const std::string& text : opt.cells) selected.push_back(l96da::parse_cell(text, cfg.m));
    cfg.cells = selected;
  }
  cfg.validate();

  const auto start = std::chrono::steady_clock::now();
  const l96da::ExperimentResult result = l96da::run_experiment(cfg);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  l96da::write_outputs(result, cfg.out_path);

  std::cout << "J=" << cfg.model.J << " F=" << cfg.model.F << " T=" << cfg.T << " m=" << cfg.m
            << " paths=" << cfg.n_paths << " seed=" << cfg.seed << " (" << std::fixed << std::setprecision(2)
            << seconds << " s)\n";
  std::cout << "bound 4 Ny r^2 = " << format_number(result.bound)
            << ", max truth norm = " << format_number(result.truth_max_norm) << "\n";
  std::cout << std::left << std::setw(6) << "mode" << std::setw(8) << "alpha" << std::setw(24) << "tail_mean"
            << "blown_up\n";
  for (const l96da::CellSummary& cell : result.cells) {
    std::cout << std::setw(6) << l96da::to_string(cell.mode) << std::setw(8) << format_number(cell.alpha)
              << std::setw(24) << format_number(cell.tail_mean_pnorm) << cell.paths_blown_up << "\n";
  }
  for (const l96da::PathSeries& path : result.paths)
    if (path.blew_up) std::cerr << "warning: " << path.diagnostic << "\n";
  std::cout << "wrote " << cfg.out_path << " and " << l96da::summary_path_for(cfg.out_path) << "\n";
  return 0;
}

int estimate_beta_command(const ModelOptions& model, const BetaOptions& opt) {
  const l96da::BetaEstimate est = l96da::estimate_beta(model_params(model), opt.trials, opt.horizon, opt.seed);
  std::cout << "beta " << format_number(est.beta) << "\n";
  std::cout << "trial spread min " << format_number(est.min) << " mean " << format_number(est.mean) << " max "
            << format_number(est.beta) << " over " << opt.trials << " trials, horizon " << opt.horizon << "\n";
  return 0;
}

int theory_command(const ModelOptions& model, const BetaOptions& beta_opt, const TheoryOptions& opt) {
  l96da::BoundParams p;
  p.rho = l96da::absorbing_radius(model.J, model.F);
  if (opt.beta) {
    p.beta = *opt.beta;
  } else {
    p.beta = l96da::estimate_beta(model_params(model), beta_opt.trials, beta_opt.horizon, beta_opt.seed).beta;
    std::cerr << "using empirical beta = " << format_number(p.beta) << "\n";
  }
  p.c = opt.c;
  p.r = opt.r;
  p.m = opt.m;
  p.Ny = opt.ny.value_or(2 * (model.J / 3));
  const std::vector<l96da::SweepRow> rows = l96da::feasibility_sweep(p, opt.grid);

  if (opt.out_path.empty()) {
    l96da::write_sweep_csv(std::cout, rows);
  } else {
    std::ofstream out(opt.out_path);
    if (!out) throw std::runtime_error("cannot open '" + opt.out_path + "' for writing");
    l96da::write_sweep_csv(out, rows);
    std::size_t feasible = 0;
    for (const auto& row : rows) feasible += row.feasible ? 1 : 0;
    std::cout << "rho=" << format_number(p.rho) << " beta=" << format_number(p.beta) << " c=" << format_number(p.c)
              << " N=" << p.effective_rank() << ": " << feasible << " of " << rows.size()
              << " grid points have theta < 1; wrote " << opt.out_path << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Perturbed-observation EnKF with projected additive inflation on Lorenz 96"};
  app.require_subcommand(1);

  RunOptions run_opt;
  auto* run = app.add_subcommand("run", "Run the twin experiment and write MSE CSVs");
  run->add_option("-c,--config", run_opt.config_path, "key = value config file")->check(CLI::ExistingFile);
  run->add_option("--seed", run_opt.seed, "Master seed override");
  run->add_option("-o,--out", run_opt.out_path, "Output CSV path (summary goes to <stem>_summary.csv)");
  run->add_option("--cell", run_opt.cells, "Restrict to cells, e.g. --cell proj:2.0 (repeatable)");
  run->add_option("--threads", run_opt.threads, "Worker threads (0 = hardware concurrency)");
  run->add_flag("--smoke", run_opt.smoke, "T = 10, one path");

  ModelOptions model_opt;
  BetaOptions beta_opt;
  auto add_model_options = [&](CLI::App* cmd) {
    cmd->add_option("--J", model_opt.J, "State dimension")->capture_default_str();
    cmd->add_option("--F", model_opt.F, "Forcing")->capture_default_str();
    cmd->add_option("--dt", model_opt.dt, "RK4 step")->capture_default_str();
    cmd->add_option("--trials", beta_opt.trials, "Divergence trials")->capture_default_str();
    cmd->add_option("--horizon", beta_opt.horizon, "Divergence horizon")->capture_default_str();
    cmd->add_option("--beta-seed", beta_opt.seed, "Seed for divergence trials")->capture_default_str();
  };

  auto* beta = app.add_subcommand("estimate-beta", "Estimate the exponential divergence rate");
  add_model_options(beta);

  TheoryOptions theory_opt;
  auto* theory = app.add_subcommand("theory", "Sweep the contraction factor over (tau, alpha)");
  add_model_options(theory);
  theory->add_option("--beta", theory_opt.beta, "Divergence rate (default: empirical estimate)");
  theory->add_option("--c", theory_opt.c, "Bilinear estimate constant")->capture_default_str();
  theory->add_option("--r", theory_opt.r, "Observation noise std")->capture_default_str();
  theory->add_option("--m", theory_opt.m, "Ensemble size")->capture_default_str();
  theory->add_option("--ny", theory_opt.ny, "Observation dimension (default 2J/3)");
  theory->add_option("--tau-min", theory_opt.grid.tau_min)->capture_default_str();
  theory->add_option("--tau-max", theory_opt.grid.tau_max)->capture_default_str();
  theory->add_option("--alpha-min", theory_opt.grid.alpha_min)->capture_default_str();
  theory->add_option("--alpha-max", theory_opt.grid.alpha_max)->capture_default_str();
  theory->add_option("--points", theory_opt.grid.points, "Grid points per axis")->capture_default_str();
  theory->add_option("-o,--out", theory_opt.out_path, "Sweep CSV path (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return run_command(run_opt);
    if (*beta) return estimate_beta_command(model_opt, beta_opt);
    if (*theory) return theory_command(model_opt, beta_opt, theory_opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
