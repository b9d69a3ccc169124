#pragma once

// Lorenz 96 dynamics:
//
//   du^j/dt = (u^{j+1} - u^{j-2}) u^{j-1} - u^j + F,   j = 1..J (cyclic)
//
// Components are stored 0-based; the cyclic wrap u^{-1} = u^{J-1},
// u^0 = u^J, u^{J+1} = u^1 is applied with modular indexing.

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace l96da {

using StateVector = Eigen::VectorXd;

inline constexpr int kMinStateDim = 4;

struct ModelParams {
  int J = 60;
  double F = 8.0;
  double dt = 0.01;

  /// Throws std::invalid_argument unless J >= 4 and dt > 0 (both finite).
  void validate() const;
};

/// Raised when integration produces a non-finite component. `step` and
/// `member` are -1 when unknown at the throw site and filled in by callers.
class BlowUpError : public std::runtime_error {
 public:
  BlowUpError(const std::string& what, std::int64_t step = -1, int member = -1);

  std::int64_t step() const { return step_; }
  int member() const { return member_; }

  BlowUpError with_context(std::int64_t step, int member) const;

 private:
  std::string base_;
  std::int64_t step_;
  int member_;
};

/// Time derivative of the raw form. Rejects J < 4.
StateVector rhs(const StateVector& u, double F);

/// Symmetrized advection term B(u, v) of the dissipative form. B(u, u) equals
/// +(u^{j+1} - u^{j-2}) u^{j-1}, so rhs(u, F) == -u + F*1 + bilinear(u, u).
StateVector bilinear(const StateVector& u, const StateVector& v);

/// One classical RK4 step over params.dt. Throws BlowUpError on non-finite output.
StateVector step_rk4(const StateVector& u, const ModelParams& params);

/// Number of dt steps in a duration t; throws unless t is a non-negative
/// integer multiple of dt within 1e-9 relative.
std::int64_t steps_in(double t, double dt);

/// Discrete flow map: steps_in(t, dt) RK4 steps. flow(u, 0) returns u unchanged.
StateVector flow(const StateVector& u, double t, const ModelParams& params);

/// sqrt(2J)|F|, the radius of the absorbing ball.
double absorbing_radius(int J, double F);

/// Cyclic rotation: out[j] = u[(j + shift) mod J].
StateVector rotate(const StateVector& u, int shift);

}  // namespace l96da
