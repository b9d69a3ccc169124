#pragma once

// Twin experiment: one truth trajectory and one observation sequence are
// generated from the master seed and shared by every (cell, path) run.
// Paths differ only in the initial ensemble and the perturbed observations.
//
// Seed substreams:
//   truth initial state      (kTruthInit, 0)
//   truth observation noise  (kTruthObs, 0)
//   path p initial ensemble  (kFilterInit, p)
//   path p perturbations     (kPerturbations, p)
// Cells of the same path reuse the path's streams (common random numbers).

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "l96da/filter.hpp"
#include "l96da/model.hpp"
#include "l96da/obs.hpp"
#include "l96da/rng.hpp"

namespace l96da {

struct ExperimentConfig {
  ModelParams model{60, 8.0, 0.01};
  double r = 1.0;
  int m = 10;
  std::vector<FilterConfig> cells;
  int T = 2000;
  double tau = 0.01;
  int n_paths = 5;
  int spin_up_steps = 1000;
  std::uint64_t seed = 20240917;
  std::string out_path = "mse.csv";
  /// Standard deviation of the initial ensemble around u_0.
  double init_spread = 1.0;
  /// Number of final steps averaged for the tail mean.
  int tail_window = 500;
  /// 0 means std::thread::hardware_concurrency().
  int threads = 1;

  /// J=60, F=8, dt=tau=0.01, T=2000, r=1, m=10, 5 paths, {add, proj} x {0, 0.5, 2}.
  static ExperimentConfig defaults();

  /// Throws std::invalid_argument on any violated constraint, including F = 0
  /// (degenerate absorbing ball).
  void validate() const;
};

/// {add, proj} x {0.0, 0.5, 2.0}, add cells first.
std::vector<FilterConfig> default_cells(int m);

/// Parses "mode:alpha" (e.g. "proj:2.0").
FilterConfig parse_cell(const std::string& text, int m);

/// Flat `key = value` document; '#' starts a comment. Keys not listed in
/// ExperimentConfig are rejected with their line number. `cells` takes a
/// comma-separated list of mode:alpha entries.
ExperimentConfig parse_config(std::istream& in, ExperimentConfig base = ExperimentConfig::defaults());
ExperimentConfig load_config(const std::string& path, ExperimentConfig base = ExperimentConfig::defaults());

/// T + 1 states u_0..u_T at interval tau after spin-up. Throws
/// std::runtime_error if any emitted state leaves the absorbing ball.
std::vector<StateVector> generate_truth(const ExperimentConfig& cfg, RngStream& rng);

/// y_1..y_T; element n - 1 observes truth[n].
std::vector<ObsVector> generate_observations(const std::vector<StateVector>& truth, const ObservationOperator& op,
                                             RngStream& rng);

struct MseRecord {
  double pnorm = 0.0;
  double state = 0.0;
  double proj = 0.0;
};

/// (1/m) sum_k of the three squared errors of members against `truth`.
MseRecord ensemble_mse(const Ensemble& ensemble, const StateVector& truth, const ObservationOperator& op);

struct PathSeries {
  InflationMode mode = InflationMode::kNone;
  double alpha = 0.0;
  int path = 0;
  /// records[n] for step n = 0..T; shorter when the run blew up.
  std::vector<MseRecord> records;
  bool blew_up = false;
  std::string diagnostic;
  double max_unobserved_increment = 0.0;
  std::int64_t ball_violations = 0;
};

struct CellSummary {
  InflationMode mode = InflationMode::kNone;
  double alpha = 0.0;
  /// Path average per step over the paths that reached that step.
  std::vector<MseRecord> averaged;
  double tail_mean_pnorm = 0.0;
  int paths_blown_up = 0;
};

struct ExperimentResult {
  std::vector<PathSeries> paths;  // cell-major, then path
  std::vector<CellSummary> cells;
  int n_paths = 0;
  double bound = 0.0;             // 4 Ny r^2
  double truth_max_norm = 0.0;
};

/// Runs one (cell, path) filter over the shared truth and observations.
PathSeries run_cell(const ExperimentConfig& cfg, const FilterConfig& cell, const std::vector<StateVector>& truth,
                    const std::vector<ObsVector>& observations, int path);

/// Mean of averaged[n].pnorm over the last `window` steps (excluding step 0
/// unless it is the only one).
double tail_mean(const std::vector<MseRecord>& averaged, int window);

/// All cells x paths, aggregated in a fixed order. Does not touch the filesystem.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Long format: mode,alpha,path,step,mse_pnorm,mse_state,mse_proj. Path-average
/// rows follow each cell's paths with path = "mean".
void write_mse_csv(std::ostream& out, const ExperimentResult& result);
/// mode,alpha,tail_mean_mse_pnorm,bound_4Nyr2
void write_summary_csv(std::ostream& out, const ExperimentResult& result);

/// "runs/mse.csv" -> "runs/mse_summary.csv".
std::string summary_path_for(const std::string& out_path);

/// Writes both CSVs; throws std::runtime_error naming the path on I/O failure.
void write_outputs(const ExperimentResult& result, const std::string& out_path);

}  // namespace l96da
