#include "l96da/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "l96da/format.hpp"
#include "l96da/rng.hpp"

namespace l96da {

namespace {

void require_time(double t) {
  if (!std::isfinite(t)) throw std::invalid_argument("bound functions need a finite t");
}

// (e^{2 beta t} - 1) / beta, continuous through beta = 0 where it equals 2t.
double growth_ratio(double beta, double t) { return beta == 0.0 ? 2.0 * t : std::expm1(2.0 * beta * t) / beta; }

}  // namespace

int BoundParams::effective_rank() const { return std::min(m - 1, Ny); }

void BoundParams::validate() const {
  if (!(rho > 0.0)) throw std::invalid_argument("BoundParams: rho must be > 0");
  if (!(c > 0.0)) throw std::invalid_argument("BoundParams: c must be > 0");
  if (!(r > 0.0)) throw std::invalid_argument("BoundParams: r must be > 0");
  if (!(alpha >= 0.0)) throw std::invalid_argument("BoundParams: alpha must be >= 0");
  if (!(tau > 0.0)) throw std::invalid_argument("BoundParams: tau must be > 0");
  if (m < 2) throw std::invalid_argument("BoundParams: m must be >= 2");
  if (Ny < 1) throw std::invalid_argument("BoundParams: Ny must be >= 1");
  if (!std::isfinite(beta)) throw std::invalid_argument("BoundParams: beta must be finite");
  if (2.0 * beta + 1.0 == 0.0) throw std::invalid_argument("BoundParams: 2 beta + 1 must be non-zero");
}

double a1(double t, const BoundParams& p) {
  require_time(t);
  return 16.0 * p.rho * p.rho * growth_ratio(p.beta, t);
}

double b1(double t, const BoundParams& p) {
  require_time(t);
  const double denom = 2.0 * p.beta + 1.0;
  if (denom == 0.0) throw std::invalid_argument("b1: undefined for 2 beta + 1 = 0");
  // [ (e^{2bt} - e^{-t}) / (2b+1) - (1 - e^{-t}) ] / b, rewritten with expm1
  // as [ (e^{2bt} - 1)/b + 2 (e^{-t} - 1) ] / (2b+1).
  const double bracket = (growth_ratio(p.beta, t) + 2.0 * std::expm1(-t)) / denom;
  const double rho2 = p.rho * p.rho;
  return 16.0 * p.c * p.c * rho2 * rho2 * bracket + std::exp(-t);
}

double b2(double t, const BoundParams& p) {
  require_time(t);
  return -p.c * p.c * p.rho * p.rho * std::expm1(-t);
}

double theta_analysis(const BoundParams& p) {
  if (!(p.r > 0.0)) throw std::invalid_argument("theta_analysis: r must be > 0");
  const double r2 = p.r * p.r;
  const double ratio = r2 / (r2 + p.alpha * p.alpha);
  return ratio * ratio;
}

ContractionFactor theta_total(const BoundParams& p) {
  const double big_theta = theta_analysis(p);
  ContractionFactor out;
  out.full_term = big_theta * a1(p.tau, p) + b1(p.tau, p);
  out.projected_term = big_theta + b2(p.tau, p);
  out.theta = std::max(out.full_term, out.projected_term);
  return out;
}

std::optional<double> first_b1_contraction_time(const BoundParams& p, double t_max, int points) {
  if (points < 1 || !(t_max > 0.0)) throw std::invalid_argument("first_b1_contraction_time: empty grid");
  for (int i = 1; i <= points; ++i) {
    const double t = t_max * static_cast<double>(i) / points;
    if (b1(t, p) < 1.0) return t;
  }
  return std::nullopt;
}

ErrorBound error_bound_sequence(int n_max, double e0, double theta, double noise_floor) {
  if (n_max < 0) throw std::invalid_argument("error_bound_sequence: n_max must be >= 0");
  if (!(theta >= 0.0)) throw std::invalid_argument("error_bound_sequence: theta must be >= 0");
  ErrorBound out;
  out.theta = theta;
  out.asymptote_finite = theta < 1.0;
  out.asymptote = out.asymptote_finite ? noise_floor / (1.0 - theta) : std::numeric_limits<double>::infinity();
  out.values.resize(static_cast<std::size_t>(n_max) + 1);
  for (int n = 0; n <= n_max; ++n) {
    double power = 0.0;
    double geometric = 0.0;  // sum_{i<n} theta^i
    if (theta == 0.0) {
      power = n == 0 ? 1.0 : 0.0;
      geometric = n == 0 ? 0.0 : 1.0;
    } else if (theta == 1.0) {
      power = 1.0;
      geometric = n;
    } else {
      const double log_power = n * std::log(theta);
      power = std::exp(log_power);
      geometric = -std::expm1(log_power) / (1.0 - theta);
    }
    out.values[static_cast<std::size_t>(n)] = power * e0 + noise_floor * geometric;
  }
  return out;
}

ErrorBound error_bound_sequence(int n_max, double e0, const BoundParams& p) {
  p.validate();
  const double floor = 4.0 * p.effective_rank() * p.r * p.r;
  return error_bound_sequence(n_max, e0, theta_total(p).theta, floor);
}

double shrink_norm(const Eigen::MatrixXd& s, bool symmetric) {
  if (s.rows() != s.cols()) throw std::invalid_argument("shrink_norm: matrix must be square");
  const Eigen::Index n = s.rows();
  if (symmetric) {
    // (I + S)^-1 S shares eigenvectors with S; its singular values are |l / (1 + l)|.
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (s + s.transpose()), Eigen::EigenvaluesOnly);
    double best = 0.0;
    for (double l : eig.eigenvalues()) {
      if (std::abs(1.0 + l) < 1e-14) throw std::runtime_error("shrink_norm: I + S is singular");
      best = std::max(best, std::abs(l / (1.0 + l)));
    }
    return best;
  }
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(Eigen::MatrixXd::Identity(n, n) + s);
  if (!lu.isInvertible()) throw std::runtime_error("shrink_norm: I + S is singular");
  const Eigen::MatrixXd shrunk = lu.solve(s);
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(shrunk);
  return svd.singularValues().size() > 0 ? svd.singularValues()[0] : 0.0;
}

Eigen::MatrixXd remark_counterexample(double a, double b) {
  Eigen::MatrixXd s(2, 2);
  s << a, 0.0, b, 0.0;
  return s;
}

double divergence_rate(const StateVector& u0, const StateVector& v0, const ModelParams& params, double horizon) {
  params.validate();
  if (u0.size() != v0.size()) throw std::invalid_argument("divergence_rate: length mismatch");
  const double d0 = (v0 - u0).squaredNorm();
  if (!(d0 > 0.0)) throw std::invalid_argument("divergence_rate: initial states are identical (zero perturbation)");
  const std::int64_t steps = steps_in(horizon, params.dt);
  if (steps < 1) throw std::invalid_argument("divergence_rate: horizon must cover at least one step");
  StateVector u = u0;
  StateVector v = v0;
  double rate = -std::numeric_limits<double>::infinity();
  for (std::int64_t i = 1; i <= steps; ++i) {
    u = step_rk4(u, params);
    v = step_rk4(v, params);
    const double t = static_cast<double>(i) * params.dt;
    rate = std::max(rate, std::log((v - u).squaredNorm() / d0) / (2.0 * t));
  }
  return rate;
}

BetaEstimate estimate_beta(const ModelParams& params, int trials, double horizon, std::uint64_t seed,
                           double perturbation, double spin_up) {
  params.validate();
  if (trials < 1) throw std::invalid_argument("estimate_beta: trials must be >= 1");
  if (!(perturbation > 0.0)) throw std::invalid_argument("estimate_beta: zero perturbation");
  BetaEstimate out;
  out.per_trial.reserve(static_cast<std::size_t>(trials));
  for (int k = 0; k < trials; ++k) {
    RngStream rng(seed, Substream::kBetaTrials, static_cast<std::uint64_t>(k));
    StateVector start = StateVector::Constant(params.J, params.F) + rng.normal_vector(params.J);
    start = flow(start, spin_up, params);
    StateVector direction = rng.normal_vector(params.J);
    direction /= direction.norm();
    out.per_trial.push_back(divergence_rate(start, start + perturbation * direction, params, horizon));
  }
  out.beta = *std::max_element(out.per_trial.begin(), out.per_trial.end());
  out.min = *std::min_element(out.per_trial.begin(), out.per_trial.end());
  double sum = 0.0;
  for (double b : out.per_trial) sum += b;
  out.mean = sum / trials;
  return out;
}

std::vector<SweepRow> feasibility_sweep(const BoundParams& base, const SweepGrid& grid) {
  base.validate();
  if (grid.points < 2) throw std::invalid_argument("feasibility_sweep: need at least 2 points per axis");
  if (!(grid.tau_min > 0.0 && grid.tau_max > grid.tau_min && grid.alpha_min > 0.0 && grid.alpha_max > grid.alpha_min))
    throw std::invalid_argument("feasibility_sweep: invalid grid bounds");
  auto log_point = [&](double lo, double hi, int i) {
    if (i == 0) return lo;
    if (i == grid.points - 1) return hi;
    const double s = static_cast<double>(i) / (grid.points - 1);
    return std::exp(std::log(lo) + s * (std::log(hi) - std::log(lo)));
  };
  std::vector<SweepRow> rows;
  rows.reserve(static_cast<std::size_t>(grid.points) * grid.points);
  for (int i = 0; i < grid.points; ++i) {
    for (int j = 0; j < grid.points; ++j) {
      BoundParams p = base;
      p.tau = log_point(grid.tau_min, grid.tau_max, i);
      p.alpha = log_point(grid.alpha_min, grid.alpha_max, j);
      const ContractionFactor f = theta_total(p);
      rows.push_back({p.tau, p.alpha, theta_analysis(p), f.theta, f.feasible()});
    }
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "tau,alpha,Theta,theta,feasible\n";
  for (const SweepRow& row : rows) {
    out << format_number(row.tau) << ',' << format_number(row.alpha) << ',' << format_number(row.Theta) << ','
        << format_number(row.theta) << ',' << (row.feasible ? 1 : 0) << '\n';
  }
}

}  // namespace l96da
