#pragma once

// Generators and independent oracles shared by the unit and acceptance suites.
// Oracles here are written from the defining formulas with dense matrices and
// explicit 1-based index arithmetic; they never call the code paths they check.

#include <cmath>
#include <cstdint>

#include <Eigen/Dense>

#include "l96da/rng.hpp"

namespace l96da::testing {

inline Eigen::VectorXd random_vector(RngStream& rng, int n, double scale = 1.0) {
  return rng.normal_vector(n, scale);
}

/// Symmetric PSD matrix A A^T / cols with A ~ N(0, scale^2), rank <= cols.
inline Eigen::MatrixXd random_psd(RngStream& rng, int n, int cols, double scale = 1.0) {
  const Eigen::MatrixXd a = rng.normal_matrix(n, cols, scale);
  const Eigen::MatrixXd p = a * a.transpose() / cols;
  return 0.5 * (p + p.transpose());
}

/// du^j/dt written with 1-based cyclic indices u^{-1} = u^{J-1}, u^0 = u^J, u^{J+1} = u^1.
inline Eigen::VectorXd oracle_l96_rhs(const Eigen::VectorXd& u, double F) {
  const int J = static_cast<int>(u.size());
  auto at = [&](int j) {  // 1-based with the cyclic convention
    if (j == -1) return u[J - 2];
    if (j == 0) return u[J - 1];
    if (j == J + 1) return u[0];
    return u[j - 1];
  };
  Eigen::VectorXd du(J);
  for (int j = 1; j <= J; ++j) du[j - 1] = (at(j + 1) - at(j - 2)) * at(j - 1) - at(j) + F;
  return du;
}

/// Dense PO gain-form update with an explicit inverse: V + P H^T (H P H^T + R)^-1 (Y - H V).
inline Eigen::MatrixXd oracle_po_update(const Eigen::MatrixXd& forecast, const Eigen::MatrixXd& perturbed,
                                        const Eigen::MatrixXd& p, const Eigen::MatrixXd& h, double r) {
  const Eigen::MatrixXd r_mat = r * r * Eigen::MatrixXd::Identity(h.rows(), h.rows());
  const Eigen::MatrixXd k = p * h.transpose() * (h * p * h.transpose() + r_mat).inverse();
  return forecast + k * (perturbed - h * forecast);
}

inline double relative_difference(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double scale = std::max(1.0, b.norm());
  return (a - b).norm() / scale;
}

}  // namespace l96da::testing
