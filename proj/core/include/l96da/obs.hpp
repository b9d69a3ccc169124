#pragma once

// Partial observation of Lorenz 96: with J = 3J', observe components
// 1, 2, 4, 5, ..., 3J'-2, 3J'-1 (1-based), i.e. two of every three.
// H is kept as the list of observed indices; Pi = H^T H is the diagonal
// 0/1 projector onto the observed subspace and R = r^2 I.

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "l96da/model.hpp"
#include "l96da/rng.hpp"

namespace l96da {

using ObsVector = Eigen::VectorXd;

class ObservationOperator {
 public:
  /// Requires J divisible by 3, J >= 6, and r > 0.
  ObservationOperator(int J, double r);

  int state_dim() const { return state_dim_; }
  int obs_dim() const { return static_cast<int>(observed_.size()); }
  int block_count() const { return state_dim_ / 3; }
  double noise_std() const { return noise_std_; }
  double noise_variance() const { return noise_std_ * noise_std_; }

  /// 0-based observed state indices, in the row order of H.
  std::span<const int> observed_indices() const { return observed_; }
  bool is_observed(int j) const { return j % 3 != 2; }

  /// H u, i.e. the noiseless observation.
  ObsVector apply(const StateVector& u) const;
  /// H^T y, embedding an observation vector into state space.
  StateVector adjoint(const ObsVector& y) const;
  /// Pi v.
  StateVector project(const StateVector& v) const;
  /// (I - Pi) v.
  StateVector complement(const StateVector& v) const;

  Eigen::MatrixXd dense_h() const;
  Eigen::MatrixXd dense_projection() const;
  Eigen::MatrixXd dense_noise_covariance() const;

 private:
  int state_dim_;
  double noise_std_;
  std::vector<int> observed_;
};

ObservationOperator build_observation_operator(int J, double r);

/// H u + xi with xi ~ N(0, r^2 I), drawn from `rng` in component order.
ObsVector observe(const StateVector& u, const ObservationOperator& op, RngStream& rng);

/// H u.
ObsVector observe_exact(const StateVector& u, const ObservationOperator& op);

/// ||v||^2 + ||Pi v||^2.
double pnorm_sq(const StateVector& v, const ObservationOperator& op);

}  // namespace l96da
