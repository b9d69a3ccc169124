#pragma once

// Perturbed-observation (PO) ensemble Kalman filter with additive and
// projected additive covariance inflation.
//
// One cycle maps V_{n-1} to V_n:
//   prediction  Vhat_n = flow(V_{n-1}, tau) member-wise
//   inflation   P^a = P + a^2 I            (additive)
//               P^a = Pi (P + a^2 I) Pi    (projected additive)
//   analysis    v_k = vhat_k + K (y + xi_k - H vhat_k),  K = P^a H^T (H P^a H^T + R)^-1
//
// Perturbations xi_k are drawn member-major (member 0's full vector first),
// so the gain form and the implicit form can be fed identical noise.

#include <cstdint>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "l96da/ensemble.hpp"
#include "l96da/model.hpp"
#include "l96da/obs.hpp"
#include "l96da/rng.hpp"

namespace l96da {

enum class InflationMode { kNone, kAdditive, kProjectedAdditive };

/// "none", "add", "proj".
std::string_view to_string(InflationMode mode);
/// Accepts "none", "add"/"additive", "proj"/"projected".
InflationMode parse_inflation_mode(std::string_view text);

struct FilterConfig {
  InflationMode mode = InflationMode::kProjectedAdditive;
  double alpha = 0.0;
  int m = 10;
  std::uint64_t seed = 0;

  void validate() const;
};

struct FilterState {
  Ensemble ensemble;
  std::int64_t step = 0;
  /// Frobenius norm of the most recent Kalman gain.
  double last_gain_norm = 0.0;
  /// max_k ||(I - Pi)(v_k - vhat_k)|| of the most recent analysis.
  double last_unobserved_increment = 0.0;
  /// Members outside the absorbing ball after the most recent analysis.
  int last_ball_violations = 0;
};

Covariance inflate(const Covariance& p, const FilterConfig& cfg, const ObservationOperator& op);

/// K = P H^T (H P H^T + R)^-1 via a Cholesky solve of the Ny x Ny innovation
/// system. Throws std::runtime_error if that system is not positive definite.
Eigen::MatrixXd kalman_gain(const Covariance& p, const ObservationOperator& op);

/// Ny x m matrix with column k equal to y + xi_k, xi_k ~ N(0, r^2 I).
Eigen::MatrixXd perturb_observations(const ObsVector& y, int m, const ObservationOperator& op,
                                     RngStream& rng);

/// Gain-form update with injected perturbed observations (one column per member).
Ensemble analysis_gain_form(const Ensemble& forecast, const Eigen::MatrixXd& perturbed_obs,
                            const Covariance& p, const ObservationOperator& op);

/// Gain-form update drawing its own perturbations from `rng`. `p` is the
/// already-inflated covariance.
Ensemble analysis_po(const Ensemble& forecast, const ObsVector& y, const Covariance& p,
                     const ObservationOperator& op, RngStream& rng);

/// Solves (I + P H^T R^-1 H) v_k = vhat_k + P H^T R^-1 y_k per member.
/// Algebraically identical to analysis_gain_form.
Ensemble analysis_implicit(const Ensemble& forecast, const Eigen::MatrixXd& perturbed_obs,
                           const Covariance& p, const ObservationOperator& op);

/// Member-wise flow over tau. BlowUpError carries the member index.
Ensemble predict(const Ensemble& ensemble, double tau, const ModelParams& params);

/// One prediction + analysis cycle; the returned state has step + 1.
FilterState po_cycle(const FilterState& state, const ObsVector& y, double tau, const ModelParams& params,
                     const FilterConfig& cfg, const ObservationOperator& op, RngStream& rng);

}  // namespace l96da
