#pragma once

// Closed-form evaluation of the uniform-in-time error bound for the
// projected PO filter.
//
// Prediction growth over a window t (for states in the absorbing ball):
//   ||Pi d(t)||^2 <= a1(t) ||d0||^2 + ||Pi d0||^2
//   ||d(t)||^2    <= b1(t) ||d0||^2 + b2(t) ||Pi d0||^2
// Analysis contraction on the observed subspace: Theta = (r^2 / (r^2 + alpha^2))^2.
// One cycle contracts the squared pi-norm error by
//   theta = max{Theta a1(tau) + b1(tau), Theta + b2(tau)}
// up to an additive 4 N r^2 with N = min(m - 1, Ny).

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "l96da/model.hpp"

namespace l96da {

// a1, b1 and b2 are entire functions of t and accept any finite t; they are
// bounds only for t >= 0.

struct BoundParams {
  double rho = 0.0;
  double beta = 1.0;
  double c = 2.0;
  double r = 1.0;
  double alpha = 0.0;
  double tau = 0.01;
  int m = 10;
  int Ny = 40;

  /// N = min(m - 1, Ny).
  int effective_rank() const;
  void validate() const;
};

/// 16 rho^2 (e^{2 beta t} - 1) / beta; the beta -> 0 limit 32 rho^2 t is used at beta == 0.
double a1(double t, const BoundParams& p);
/// Rejects 2 beta + 1 == 0. Uses the beta -> 0 limit at beta == 0.
double b1(double t, const BoundParams& p);
/// c^2 rho^2 (1 - e^{-t}).
double b2(double t, const BoundParams& p);

/// Theta = (r^2 / (r^2 + alpha^2))^2, in (0, 1].
double theta_analysis(const BoundParams& p);

struct ContractionFactor {
  double theta = 0.0;
  double full_term = 0.0;       // Theta a1(tau) + b1(tau)
  double projected_term = 0.0;  // Theta + b2(tau)
  bool feasible() const { return theta < 1.0; }
};

ContractionFactor theta_total(const BoundParams& p);

/// First point of a uniform grid on (0, t_max] with b1 < 1, if any.
std::optional<double> first_b1_contraction_time(const BoundParams& p, double t_max, int points);

struct ErrorBound {
  /// values[n] = theta^n e0 + 4 N r^2 (1 - theta^n) / (1 - theta), n = 0..n_max.
  std::vector<double> values;
  double theta = 0.0;
  /// 4 N r^2 / (1 - theta); +inf when theta >= 1.
  double asymptote = 0.0;
  bool asymptote_finite = false;
};

ErrorBound error_bound_sequence(int n_max, double e0, const BoundParams& p);
/// Same closed form for an explicit theta and noise floor 4 N r^2.
ErrorBound error_bound_sequence(int n_max, double e0, double theta, double noise_floor);

/// ||(I + S)^-1 S||_op via singular values. `symmetric` selects a
/// self-adjoint eigen-solve; otherwise a general LU solve is used.
double shrink_norm(const Eigen::MatrixXd& s, bool symmetric);

/// The 2x2 non-symmetric family S = [[a, 0], [b, 0]].
Eigen::MatrixXd remark_counterexample(double a, double b);

struct BetaEstimate {
  double beta = 0.0;  // max over trials
  double min = 0.0;
  double mean = 0.0;
  std::vector<double> per_trial;
};

/// Empirical divergence rate. Each trial spins a random state up for
/// `spin_up` time units, perturbs it by `perturbation` along a random unit
/// vector, and records sup_t (1/2t) log(||d(t)||^2 / ||d(0)||^2) over the
/// dt grid on (0, horizon]: the smallest beta for which the exponential
/// divergence inequality holds along that trajectory.
BetaEstimate estimate_beta(const ModelParams& params, int trials, double horizon, std::uint64_t seed,
                           double perturbation = 1e-8, double spin_up = 10.0);

/// Rate for one explicit pair of initial states. Rejects identical states.
double divergence_rate(const StateVector& u0, const StateVector& v0, const ModelParams& params, double horizon);

struct SweepRow {
  double tau = 0.0;
  double alpha = 0.0;
  double Theta = 0.0;
  double theta = 0.0;
  bool feasible = false;
};

struct SweepGrid {
  double tau_min = 1e-12;
  double tau_max = 1e-1;
  double alpha_min = 1e-2;
  double alpha_max = 1e2;
  int points = 50;
};

/// Log-spaced (tau, alpha) grid evaluation of theta_total, tau-major.
std::vector<SweepRow> feasibility_sweep(const BoundParams& base, const SweepGrid& grid);

/// Header: tau,alpha,Theta,theta,feasible
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace l96da
