#include "l96da/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "l96da/ensemble.hpp"
#include "l96da/format.hpp"

namespace l96da {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_value(const std::string& key, const std::string& text, int line) {
  std::istringstream in(text);
  T value{};
  in >> value;
  if (in.fail() || !(in >> std::ws).eof()) {
    std::ostringstream msg;
    msg << "config line " << line << ": invalid value '" << text << "' for key '" << key << "'";
    throw std::invalid_argument(msg.str());
  }
  return value;
}

std::vector<FilterConfig> parse_cell_list(const std::string& text, int m) {
  std::vector<FilterConfig> cells;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) cells.push_back(parse_cell(item, m));
  }
  return cells;
}

}  // namespace

std::vector<FilterConfig> default_cells(int m) {
  std::vector<FilterConfig> cells;
  for (InflationMode mode : {InflationMode::kAdditive, InflationMode::kProjectedAdditive})
    for (double alpha : {0.0, 0.5, 2.0}) cells.push_back(FilterConfig{mode, alpha, m, 0});
  return cells;
}

FilterConfig parse_cell(const std::string& text, int m) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("cell '" + text + "' must look like mode:alpha");
  FilterConfig cell;
  cell.mode = parse_inflation_mode(trim(text.substr(0, colon)));
  cell.alpha = parse_value<double>("cells", trim(text.substr(colon + 1)), 0);
  cell.m = m;
  cell.validate();
  return cell;
}

ExperimentConfig ExperimentConfig::defaults() {
  ExperimentConfig cfg;
  cfg.cells = default_cells(cfg.m);
  return cfg;
}

void ExperimentConfig::validate() const {
  model.validate();
  if (model.F == 0.0) throw std::invalid_argument("config: F = 0 gives a degenerate absorbing ball (rho = 0)");
  if (model.J % 3 != 0 || model.J < 6) throw std::invalid_argument("config: J must be a multiple of 3 and >= 6");
  if (!(r > 0.0)) throw std::invalid_argument("config: r must be > 0");
  if (m < 2) throw std::invalid_argument("config: m must be >= 2");
  if (T < 1) throw std::invalid_argument("config: T must be >= 1");
  if (n_paths < 1) throw std::invalid_argument("config: n_paths must be >= 1");
  if (spin_up_steps < 0) throw std::invalid_argument("config: spin_up_steps must be >= 0");
  if (tail_window < 1) throw std::invalid_argument("config: tail_window must be >= 1");
  if (!(init_spread >= 0.0)) throw std::invalid_argument("config: init_spread must be >= 0");
  if (threads < 0) throw std::invalid_argument("config: threads must be >= 0");
  if (cells.empty()) throw std::invalid_argument("config: no filter cells");
  steps_in(tau, model.dt);
  if (!(tau > 0.0)) throw std::invalid_argument("config: tau must be > 0");
  for (const FilterConfig& cell : cells) {
    cell.validate();
    if (cell.m != m) throw std::invalid_argument("config: every cell must use the configured m");
  }
}

ExperimentConfig parse_config(std::istream& in, ExperimentConfig base) {
  ExperimentConfig cfg = std::move(base);
  std::optional<std::string> cells_text;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string text = trim(raw.substr(0, raw.find('#')));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      std::ostringstream msg;
      msg << "config line " << line << ": expected key = value";
      throw std::invalid_argument(msg.str());
    }
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (key == "J") cfg.model.J = parse_value<int>(key, value, line);
    else if (key == "F") cfg.model.F = parse_value<double>(key, value, line);
    else if (key == "dt") cfg.model.dt = parse_value<double>(key, value, line);
    else if (key == "r") cfg.r = parse_value<double>(key, value, line);
    else if (key == "m") cfg.m = parse_value<int>(key, value, line);
    else if (key == "T") cfg.T = parse_value<int>(key, value, line);
    else if (key == "tau") cfg.tau = parse_value<double>(key, value, line);
    else if (key == "n_paths") cfg.n_paths = parse_value<int>(key, value, line);
    else if (key == "spin_up_steps") cfg.spin_up_steps = parse_value<int>(key, value, line);
    else if (key == "seed") cfg.seed = parse_value<std::uint64_t>(key, value, line);
    else if (key == "out_path") cfg.out_path = value;
    else if (key == "init_spread") cfg.init_spread = parse_value<double>(key, value, line);
    else if (key == "tail_window") cfg.tail_window = parse_value<int>(key, value, line);
    else if (key == "threads") cfg.threads = parse_value<int>(key, value, line);
    else if (key == "cells") cells_text = value;
    else {
      std::ostringstream msg;
      msg << "config line " << line << ": unknown key '" << key << "'";
      throw std::invalid_argument(msg.str());
    }
  }
  // Cells are rebuilt after all keys are read so that `m` applies regardless of order.
  if (cells_text) {
    cfg.cells = parse_cell_list(*cells_text, cfg.m);
  } else {
    for (FilterConfig& cell : cfg.cells) cell.m = cfg.m;
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  try {
    return parse_config(in, std::move(base));
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

std::vector<StateVector> generate_truth(const ExperimentConfig& cfg, RngStream& rng) {
  cfg.validate();
  const double rho = absorbing_radius(cfg.model.J, cfg.model.F);
  StateVector u = StateVector::Constant(cfg.model.J, cfg.model.F) + rng.normal_vector(cfg.model.J);
  for (int i = 0; i < cfg.spin_up_steps; ++i) u = step_rk4(u, cfg.model);

  std::vector<StateVector> truth;
  truth.reserve(static_cast<std::size_t>(cfg.T) + 1);
  truth.push_back(u);
  for (int n = 1; n <= cfg.T; ++n) truth.push_back(flow(truth.back(), cfg.tau, cfg.model));

  for (std::size_t n = 0; n < truth.size(); ++n) {
    const double norm = truth[n].norm();
    if (norm > rho) {
      std::ostringstream msg;
      msg << "truth state " << n << " has norm " << norm << " > rho = " << rho << " after " << cfg.spin_up_steps
          << " spin-up steps; increase spin_up_steps";
      throw std::runtime_error(msg.str());
    }
  }
  return truth;
}

std::vector<ObsVector> generate_observations(const std::vector<StateVector>& truth, const ObservationOperator& op,
                                             RngStream& rng) {
  std::vector<ObsVector> obs;
  obs.reserve(truth.empty() ? 0 : truth.size() - 1);
  for (std::size_t n = 1; n < truth.size(); ++n) obs.push_back(observe(truth[n], op, rng));
  return obs;
}

MseRecord ensemble_mse(const Ensemble& ensemble, const StateVector& truth, const ObservationOperator& op) {
  if (truth.size() != ensemble.dim() || truth.size() != op.state_dim())
    throw std::invalid_argument("ensemble_mse: dimension mismatch");
  // Observed and unobserved parts are accumulated separately so that
  // state <= pnorm <= 2 state also holds after rounding.
  double observed = 0.0;
  double unobserved = 0.0;
  for (int k = 0; k < ensemble.size(); ++k) {
    for (int j = 0; j < ensemble.dim(); ++j) {
      const double e = ensemble.matrix()(j, k) - truth[j];
      (op.is_observed(j) ? observed : unobserved) += e * e;
    }
  }
  const double m = ensemble.size();
  const double full = observed + unobserved;
  return {(full + observed) / m, full / m, observed / m};
}

PathSeries run_cell(const ExperimentConfig& cfg, const FilterConfig& cell, const std::vector<StateVector>& truth,
                    const std::vector<ObsVector>& observations, int path) {
  if (truth.size() != static_cast<std::size_t>(cfg.T) + 1 || observations.size() != static_cast<std::size_t>(cfg.T))
    throw std::invalid_argument("run_cell: truth/observation lengths do not match T");
  cell.validate();
  const ObservationOperator op(cfg.model.J, cfg.r);
  const auto path_index = static_cast<std::uint64_t>(path);

  RngStream init_rng(cfg.seed, Substream::kFilterInit, path_index);
  RngStream perturbation_rng(cfg.seed, Substream::kPerturbations, path_index);
  FilterConfig filter = cell;
  filter.seed = derive_seed(cfg.seed, Substream::kPerturbations, path_index);

  PathSeries series;
  series.mode = cell.mode;
  series.alpha = cell.alpha;
  series.path = path;
  series.records.reserve(static_cast<std::size_t>(cfg.T) + 1);

  Eigen::MatrixXd init = init_rng.normal_matrix(cfg.model.J, cell.m, cfg.init_spread);
  init.colwise() += truth[0];
  FilterState state{Ensemble(std::move(init)), 0, 0.0, 0.0, 0};
  series.records.push_back(ensemble_mse(state.ensemble, truth[0], op));

  try {
    for (int n = 1; n <= cfg.T; ++n) {
      state = po_cycle(state, observations[static_cast<std::size_t>(n - 1)], cfg.tau, cfg.model, filter, op,
                       perturbation_rng);
      series.records.push_back(ensemble_mse(state.ensemble, truth[static_cast<std::size_t>(n)], op));
      series.max_unobserved_increment = std::max(series.max_unobserved_increment, state.last_unobserved_increment);
      series.ball_violations += state.last_ball_violations;
    }
  } catch (const BlowUpError& e) {
    series.blew_up = true;
    series.diagnostic = e.what();
  }
  return series;
}

double tail_mean(const std::vector<MseRecord>& averaged, int window) {
  if (averaged.empty()) return std::nan("");
  const std::size_t last = averaged.size() - 1;
  const std::size_t first_allowed = last == 0 ? 0 : 1;
  const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(window), last + 1 - first_allowed);
  double sum = 0.0;
  for (std::size_t n = last + 1 - count; n <= last; ++n) sum += averaged[n].pnorm;
  return sum / static_cast<double>(count);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const ObservationOperator op(cfg.model.J, cfg.r);
  RngStream truth_rng(cfg.seed, Substream::kTruthInit);
  RngStream obs_rng(cfg.seed, Substream::kTruthObs);
  const std::vector<StateVector> truth = generate_truth(cfg, truth_rng);
  const std::vector<ObsVector> observations = generate_observations(truth, op, obs_rng);

  ExperimentResult result;
  result.bound = 4.0 * op.obs_dim() * op.noise_variance();
  result.n_paths = cfg.n_paths;
  for (const StateVector& u : truth) result.truth_max_norm = std::max(result.truth_max_norm, u.norm());

  const std::size_t n_cells = cfg.cells.size();
  const std::size_t n_paths = static_cast<std::size_t>(cfg.n_paths);
  const std::size_t n_tasks = n_cells * n_paths;
  result.paths.resize(n_tasks);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t task = next++; task < n_tasks; task = next++) {
      const std::size_t cell = task / n_paths;
      const int path = static_cast<int>(task % n_paths);
      result.paths[task] = run_cell(cfg, cfg.cells[cell], truth, observations, path);
    }
  };
  unsigned threads = cfg.threads == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                      : static_cast<unsigned>(cfg.threads);
  threads = std::min<unsigned>(threads, static_cast<unsigned>(n_tasks));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  }

  // Fixed reduction order: paths summed in index order, then divided.
  for (std::size_t c = 0; c < n_cells; ++c) {
    CellSummary summary;
    summary.mode = cfg.cells[c].mode;
    summary.alpha = cfg.cells[c].alpha;
    for (std::size_t n = 0; n <= static_cast<std::size_t>(cfg.T); ++n) {
      MseRecord sum;
      int contributors = 0;
      for (std::size_t p = 0; p < n_paths; ++p) {
        const PathSeries& series = result.paths[c * n_paths + p];
        if (n >= series.records.size()) continue;
        sum.pnorm += series.records[n].pnorm;
        sum.state += series.records[n].state;
        sum.proj += series.records[n].proj;
        ++contributors;
      }
      if (contributors == 0) break;
      summary.averaged.push_back({sum.pnorm / contributors, sum.state / contributors, sum.proj / contributors});
    }
    for (std::size_t p = 0; p < n_paths; ++p)
      if (result.paths[c * n_paths + p].blew_up) ++summary.paths_blown_up;
    summary.tail_mean_pnorm = tail_mean(summary.averaged, cfg.tail_window);
    result.cells.push_back(std::move(summary));
  }
  return result;
}

namespace {

void write_record(std::ostream& out, const std::string& prefix, std::size_t step, const MseRecord& rec) {
  out << prefix << step << ',' << format_number(rec.pnorm) << ',' << format_number(rec.state) << ','
      << format_number(rec.proj) << '\n';
}

}  // namespace

void write_mse_csv(std::ostream& out, const ExperimentResult& result) {
  out << "mode,alpha,path,step,mse_pnorm,mse_state,mse_proj\n";
  const std::size_t n_paths = static_cast<std::size_t>(result.n_paths);
  for (std::size_t c = 0; c < result.cells.size(); ++c) {
    const CellSummary& cell = result.cells[c];
    const std::string cell_prefix = std::string(to_string(cell.mode)) + ',' + format_number(cell.alpha) + ',';
    for (std::size_t p = 0; p < n_paths; ++p) {
      const PathSeries& series = result.paths[c * n_paths + p];
      const std::string prefix = cell_prefix + std::to_string(series.path) + ',';
      for (std::size_t n = 0; n < series.records.size(); ++n) write_record(out, prefix, n, series.records[n]);
    }
    const std::string prefix = cell_prefix + "mean,";
    for (std::size_t n = 0; n < cell.averaged.size(); ++n) write_record(out, prefix, n, cell.averaged[n]);
  }
}

void write_summary_csv(std::ostream& out, const ExperimentResult& result) {
  out << "mode,alpha,tail_mean_mse_pnorm,bound_4Nyr2\n";
  for (const CellSummary& cell : result.cells) {
    out << to_string(cell.mode) << ',' << format_number(cell.alpha) << ',' << format_number(cell.tail_mean_pnorm)
        << ',' << format_number(result.bound) << '\n';
  }
}

std::string summary_path_for(const std::string& out_path) {
  const std::string ext = ".csv";
  if (out_path.size() >= ext.size() && out_path.compare(out_path.size() - ext.size(), ext.size(), ext) == 0)
    return out_path.substr(0, out_path.size() - ext.size()) + "_summary.csv";
  return out_path + "_summary.csv";
}

void write_outputs(const ExperimentResult& result, const std::string& out_path) {
  auto write_file = [](const std::string& path, auto&& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    body(out);
    out.flush();
    if (!out) throw std::runtime_error("failed while writing '" + path + "'");
  };
  write_file(out_path, [&](std::ostream& out) { write_mse_csv(out, result); });
  write_file(summary_path_for(out_path), [&](std::ostream& out) { write_summary_csv(out, result); });
}

}  // namespace l96da
