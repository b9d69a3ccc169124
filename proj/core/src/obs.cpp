#include "l96da/obs.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace l96da {

namespace {

void require_state(const StateVector& v, const ObservationOperator& op, const char* who) {
  if (v.size() != op.state_dim()) {
    std::ostringstream msg;
    msg << who << ": state has length " << v.size() << ", operator expects " << op.state_dim();
    throw std::invalid_argument(msg.str());
  }
}

}  // namespace

ObservationOperator::ObservationOperator(int J, double r) : state_dim_(J), noise_std_(r) {
  if (J < 6 || J % 3 != 0) {
    std::ostringstream msg;
    msg << "observation operator needs J divisible by 3 and J >= 6, got J = " << J;
    throw std::invalid_argument(msg.str());
  }
  if (!(r > 0.0) || !std::isfinite(r)) throw std::invalid_argument("observation noise r must be > 0");
  observed_.reserve(static_cast<std::size_t>(2 * (J / 3)));
  for (int j = 0; j < J; ++j)
    if (is_observed(j)) observed_.push_back(j);
}

ObsVector ObservationOperator::apply(const StateVector& u) const {
  require_state(u, *this, "H u");
  ObsVector y(obs_dim());
  for (int i = 0; i < obs_dim(); ++i) y[i] = u[observed_[i]];
  return y;
}

StateVector ObservationOperator::adjoint(const ObsVector& y) const {
  if (y.size() != obs_dim()) throw std::invalid_argument("H^T y: observation length mismatch");
  StateVector u = StateVector::Zero(state_dim_);
  for (int i = 0; i < obs_dim(); ++i) u[observed_[i]] = y[i];
  return u;
}

StateVector ObservationOperator::project(const StateVector& v) const {
  require_state(v, *this, "Pi v");
  StateVector out = v;
  for (int j = 2; j < state_dim_; j += 3) out[j] = 0.0;
  return out;
}

StateVector ObservationOperator::complement(const StateVector& v) const {
  require_state(v, *this, "(I - Pi) v");
  StateVector out = StateVector::Zero(state_dim_);
  for (int j = 2; j < state_dim_; j += 3) out[j] = v[j];
  return out;
}

Eigen::MatrixXd ObservationOperator::dense_h() const {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(obs_dim(), state_dim_);
  for (int i = 0; i < obs_dim(); ++i) h(i, observed_[i]) = 1.0;
  return h;
}

Eigen::MatrixXd ObservationOperator::dense_projection() const {
  Eigen::MatrixXd pi = Eigen::MatrixXd::Zero(state_dim_, state_dim_);
  for (int j : observed_) pi(j, j) = 1.0;
  return pi;
}

Eigen::MatrixXd ObservationOperator::dense_noise_covariance() const {
  return noise_variance() * Eigen::MatrixXd::Identity(obs_dim(), obs_dim());
}

ObservationOperator build_observation_operator(int J, double r) { return ObservationOperator(J, r); }

ObsVector observe(const StateVector& u, const ObservationOperator& op, RngStream& rng) {
  ObsVector y = op.apply(u);
  y += rng.normal_vector(op.obs_dim(), op.noise_std());
  return y;
}

ObsVector observe_exact(const StateVector& u, const ObservationOperator& op) { return op.apply(u); }

double pnorm_sq(const StateVector& v, const ObservationOperator& op) {
  require_state(v, op, "pnorm_sq");
  double observed = 0.0;
  for (int j : op.observed_indices()) observed += v[j] * v[j];
  return v.squaredNorm() + observed;
}

}  // namespace l96da
