#include "l96da/filter.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace l96da {

std::string_view to_string(InflationMode mode) {
  switch (mode) {
    case InflationMode::kNone:
      return "none";
    case InflationMode::kAdditive:
      return "add";
    case InflationMode::kProjectedAdditive:
      return "proj";
  }
  return "unknown";
}

InflationMode parse_inflation_mode(std::string_view text) {
  if (text == "none") return InflationMode::kNone;
  if (text == "add" || text == "additive") return InflationMode::kAdditive;
  if (text == "proj" || text == "projected") return InflationMode::kProjectedAdditive;
  throw std::invalid_argument("unknown inflation mode '" + std::string(text) + "'");
}

void FilterConfig::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("inflation alpha must be >= 0");
  if (m < 2) throw std::invalid_argument("ensemble size m must be >= 2");
}

Covariance inflate(const Covariance& p, const FilterConfig& cfg, const ObservationOperator& op) {
  if (p.dim() != op.state_dim()) throw std::invalid_argument("inflate: covariance dimension mismatch");
  const double a2 = cfg.alpha * cfg.alpha;
  switch (cfg.mode) {
    case InflationMode::kNone:
      return p;
    case InflationMode::kAdditive: {
      Eigen::MatrixXd out = p.matrix();
      out.diagonal().array() += a2;
      return Covariance(out);
    }
    case InflationMode::kProjectedAdditive: {
      Eigen::MatrixXd out = p.matrix();
      out.diagonal().array() += a2;
      for (int j = 0; j < op.state_dim(); ++j) {
        if (op.is_observed(j)) continue;
        out.row(j).setZero();
        out.col(j).setZero();
      }
      return Covariance(out);
    }
  }
  throw std::logic_error("inflate: unhandled mode");
}

Eigen::MatrixXd kalman_gain(const Covariance& p, const ObservationOperator& op) {
  if (p.dim() != op.state_dim()) throw std::invalid_argument("kalman_gain: covariance dimension mismatch");
  const std::vector<int> idx(op.observed_indices().begin(), op.observed_indices().end());
  // H P (Ny x J) and H P H^T + R (Ny x Ny) by row/column selection.
  const Eigen::MatrixXd hp = p.matrix()(idx, Eigen::all);
  Eigen::MatrixXd innovation = hp(Eigen::all, idx);
  innovation.diagonal().array() += op.noise_variance();
  const Eigen::LLT<Eigen::MatrixXd> llt(innovation);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("kalman_gain: innovation covariance is not positive definite");
  return llt.solve(hp).transpose();
}

Eigen::MatrixXd perturb_observations(const ObsVector& y, int m, const ObservationOperator& op,
                                     RngStream& rng) {
  if (y.size() != op.obs_dim()) throw std::invalid_argument("perturb_observations: observation length mismatch");
  Eigen::MatrixXd out = rng.normal_matrix(op.obs_dim(), m, op.noise_std());
  out.colwise() += y;
  return out;
}

namespace {

void check_analysis_inputs(const Ensemble& forecast, const Eigen::MatrixXd& perturbed_obs, const Covariance& p,
                           const ObservationOperator& op) {
  if (forecast.dim() != op.state_dim() || p.dim() != op.state_dim())
    throw std::invalid_argument("analysis: state dimension mismatch");
  if (perturbed_obs.rows() != op.obs_dim() || perturbed_obs.cols() != forecast.size())
    throw std::invalid_argument("analysis: perturbed observations must be Ny x m");
}

Ensemble apply_gain(const Ensemble& forecast, const Eigen::MatrixXd& perturbed_obs, const Eigen::MatrixXd& gain,
                    const ObservationOperator& op) {
  const std::vector<int> idx(op.observed_indices().begin(), op.observed_indices().end());
  const Eigen::MatrixXd innovations = perturbed_obs - forecast.matrix()(idx, Eigen::all);
  return Ensemble(forecast.matrix() + gain * innovations);
}

}  // namespace

Ensemble analysis_gain_form(const Ensemble& forecast, const Eigen::MatrixXd& perturbed_obs,
                            const Covariance& p, const ObservationOperator& op) {
  check_analysis_inputs(forecast, perturbed_obs, p, op);
  return apply_gain(forecast, perturbed_obs, kalman_gain(p, op), op);
}

Ensemble analysis_po(const Ensemble& forecast, const ObsVector& y, const Covariance& p,
                     const ObservationOperator& op, RngStream& rng) {
  const Eigen::MatrixXd perturbed = perturb_observations(y, forecast.size(), op, rng);
  return analysis_gain_form(forecast, perturbed, p, op);
}

Ensemble analysis_implicit(const Ensemble& forecast, const Eigen::MatrixXd& perturbed_obs,
                           const Covariance& p, const ObservationOperator& op) {
  check_analysis_inputs(forecast, perturbed_obs, p, op);
  const int J = op.state_dim();
  const Eigen::MatrixXd h = op.dense_h();
  const Eigen::MatrixXd r_inv = op.dense_noise_covariance().inverse();
  const Eigen::MatrixXd weighted = p.matrix() * h.transpose() * r_inv;  // P H^T R^-1
  const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(J, J) + weighted * h;
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
  if (!lu.isInvertible()) throw std::runtime_error("analysis_implicit: singular update system");
  const Eigen::MatrixXd rhs = forecast.matrix() + weighted * perturbed_obs;
  return Ensemble(lu.solve(rhs));
}

Ensemble predict(const Ensemble& ensemble, double tau, const ModelParams& params) {
  Eigen::MatrixXd out(ensemble.dim(), ensemble.size());
  for (int k = 0; k < ensemble.size(); ++k) {
    try {
      out.col(k) = flow(ensemble.member(k), tau, params);
    } catch (const BlowUpError& e) {
      throw e.with_context(e.step(), k);
    }
  }
  return Ensemble(std::move(out));
}

FilterState po_cycle(const FilterState& state, const ObsVector& y, double tau, const ModelParams& params,
                     const FilterConfig& cfg, const ObservationOperator& op, RngStream& rng) {
  const std::int64_t step = state.step + 1;
  Ensemble forecast = [&] {
    try {
      return predict(state.ensemble, tau, params);
    } catch (const BlowUpError& e) {
      throw e.with_context(step, e.member());
    }
  }();

  const Covariance inflated = inflate(covariance(forecast), cfg, op);
  const Eigen::MatrixXd perturbed = perturb_observations(y, forecast.size(), op, rng);
  const Eigen::MatrixXd gain = kalman_gain(inflated, op);

  FilterState next{apply_gain(forecast, perturbed, gain, op), step, gain.norm(), 0.0, 0};
  const double rho = absorbing_radius(params.J, params.F);
  for (int k = 0; k < next.ensemble.size(); ++k) {
    if (!next.ensemble.member(k).allFinite())
      throw BlowUpError("analysis produced a non-finite member", step, k);
    const StateVector increment = next.ensemble.member(k) - forecast.member(k);
    next.last_unobserved_increment = std::max(next.last_unobserved_increment, op.complement(increment).norm());
    if (next.ensemble.member(k).norm() > rho) ++next.last_ball_violations;
  }
  return next;
}

}  // namespace l96da
