#pragma once

#include <Eigen/Dense>

#include "l96da/model.hpp"

namespace l96da {

/// J x m matrix of members, one per column. Construction rejects an empty
/// ensemble; statistics that need m >= 2 check it themselves.
class Ensemble {
 public:
  explicit Ensemble(Eigen::MatrixXd members);

  /// m copies of u.
  static Ensemble replicate(const StateVector& u, int m);

  int size() const { return static_cast<int>(members_.cols()); }
  int dim() const { return static_cast<int>(members_.rows()); }

  auto member(int k) const { return members_.col(k); }
  auto member(int k) { return members_.col(k); }

  const Eigen::MatrixXd& matrix() const { return members_; }
  Eigen::MatrixXd& matrix() { return members_; }

  /// u0 + V, member-wise.
  Ensemble shifted(const StateVector& u0) const;
  /// V T for an m x m transform T.
  Ensemble transformed(const Eigen::MatrixXd& t) const;

 private:
  Eigen::MatrixXd members_;
};

/// Symmetric J x J matrix. The constructor symmetrizes its input as (A + A^T) / 2.
class Covariance {
 public:
  explicit Covariance(const Eigen::MatrixXd& matrix);

  static Covariance zero(int J) { return Covariance(Eigen::MatrixXd::Zero(J, J)); }
  static Covariance scaled_identity(int J, double variance) {
    return Covariance(variance * Eigen::MatrixXd::Identity(J, J));
  }

  int dim() const { return static_cast<int>(matrix_.rows()); }
  const Eigen::MatrixXd& matrix() const { return matrix_; }

 private:
  Eigen::MatrixXd matrix_;
};

StateVector mean(const Ensemble& ensemble);

/// Columns minus the mean; columns sum to zero.
Ensemble perturbations(const Ensemble& ensemble);

/// Unbiased covariance dV dV^T / (m - 1). Requires m >= 2.
Covariance covariance(const Ensemble& ensemble);

/// Root-mean-square member norm: (1/m sum_k ||v_k||^2)^(1/2).
double ensemble_norm(const Ensemble& ensemble);

}  // namespace l96da
