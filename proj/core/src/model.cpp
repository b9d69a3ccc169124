#include "l96da/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace l96da {

namespace {

void require_dim(const StateVector& u) {
  if (u.size() < kMinStateDim) {
    std::ostringstream msg;
    msg << "Lorenz 96 state needs J >= " << kMinStateDim << ", got " << u.size();
    throw std::invalid_argument(msg.str());
  }
}

inline Eigen::Index wrap(Eigen::Index j, Eigen::Index n) { return (j % n + n) % n; }

std::string describe(const std::string& base, std::int64_t step, int member) {
  std::ostringstream msg;
  msg << base;
  if (step >= 0) msg << " (step " << step;
  if (member >= 0) msg << (step >= 0 ? ", " : " (") << "member " << member;
  if (step >= 0 || member >= 0) msg << ")";
  return msg.str();
}

}  // namespace

void ModelParams::validate() const {
  if (J < kMinStateDim) throw std::invalid_argument("ModelParams: J must be >= 4");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("ModelParams: dt must be > 0");
  if (!std::isfinite(F)) throw std::invalid_argument("ModelParams: F must be finite");
}

BlowUpError::BlowUpError(const std::string& what, std::int64_t step, int member)
    : std::runtime_error(describe(what, step, member)), base_(what), step_(step), member_(member) {}

BlowUpError BlowUpError::with_context(std::int64_t step, int member) const {
  return BlowUpError(base_, step, member);
}

StateVector rhs(const StateVector& u, double F) {
  require_dim(u);
  const Eigen::Index n = u.size();
  StateVector du(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double up1 = u[wrap(j + 1, n)];
    const double um1 = u[wrap(j - 1, n)];
    const double um2 = u[wrap(j - 2, n)];
    du[j] = (up1 - um2) * um1 - u[j] + F;
  }
  return du;
}

StateVector bilinear(const StateVector& u, const StateVector& v) {
  if (u.size() != v.size()) throw std::invalid_argument("bilinear: length mismatch");
  require_dim(u);
  const Eigen::Index n = u.size();
  StateVector out(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index p1 = wrap(j + 1, n);
    const Eigen::Index m1 = wrap(j - 1, n);
    const Eigen::Index m2 = wrap(j - 2, n);
    out[j] = 0.5 * (v[m1] * u[p1] + u[m1] * v[p1] - v[m2] * u[m1] - u[m2] * v[m1]);
  }
  return out;
}

StateVector step_rk4(const StateVector& u, const ModelParams& params) {
  const double h = params.dt;
  const StateVector k1 = rhs(u, params.F);
  const StateVector k2 = rhs(u + 0.5 * h * k1, params.F);
  const StateVector k3 = rhs(u + 0.5 * h * k2, params.F);
  const StateVector k4 = rhs(u + h * k3, params.F);
  StateVector next = u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!next.allFinite()) throw BlowUpError("RK4 step produced a non-finite state");
  return next;
}

std::int64_t steps_in(double t, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("steps_in: dt must be > 0");
  if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("steps_in: duration must be >= 0");
  const double ratio = t / dt;
  const auto n = static_cast<std::int64_t>(std::llround(ratio));
  if (std::abs(static_cast<double>(n) * dt - t) > 1e-9 * std::max(t, dt)) {
    std::ostringstream msg;
    msg << "duration " << t << " is not an integer multiple of dt = " << dt;
    throw std::invalid_argument(msg.str());
  }
  return n;
}

StateVector flow(const StateVector& u, double t, const ModelParams& params) {
  params.validate();
  const std::int64_t n = steps_in(t, params.dt);
  StateVector state = u;
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      state = step_rk4(state, params);
    } catch (const BlowUpError& e) {
      throw e.with_context(i, e.member());
    }
  }
  return state;
}

double absorbing_radius(int J, double F) {
  if (J < kMinStateDim) throw std::invalid_argument("absorbing_radius: J must be >= 4");
  return std::sqrt(2.0 * J) * std::abs(F);
}

StateVector rotate(const StateVector& u, int shift) {
  const Eigen::Index n = u.size();
  StateVector out(n);
  for (Eigen::Index j = 0; j < n; ++j) out[j] = u[wrap(j + shift, n)];
  return out;
}

}  // namespace l96da
