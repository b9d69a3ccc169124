#include "l96da/ensemble.hpp"

#include <cmath>
#include <stdexcept>

namespace l96da {

Ensemble::Ensemble(Eigen::MatrixXd members) : members_(std::move(members)) {
  if (members_.cols() < 1) throw std::invalid_argument("ensemble must have at least one member");
  if (members_.rows() < 1) throw std::invalid_argument("ensemble members must be non-empty vectors");
}

Ensemble Ensemble::replicate(const StateVector& u, int m) {
  if (m < 1) throw std::invalid_argument("ensemble must have at least one member");
  return Ensemble(u.replicate(1, m));
}

Ensemble Ensemble::shifted(const StateVector& u0) const {
  if (u0.size() != members_.rows()) throw std::invalid_argument("shift: dimension mismatch");
  return Ensemble(members_.colwise() + u0);
}

Ensemble Ensemble::transformed(const Eigen::MatrixXd& t) const {
  if (t.rows() != members_.cols()) throw std::invalid_argument("transform: expected an m x m' matrix");
  return Ensemble(members_ * t);
}

Covariance::Covariance(const Eigen::MatrixXd& matrix) {
  if (matrix.rows() != matrix.cols()) throw std::invalid_argument("covariance must be square");
  matrix_ = 0.5 * (matrix + matrix.transpose());
}

StateVector mean(const Ensemble& ensemble) { return ensemble.matrix().rowwise().mean(); }

Ensemble perturbations(const Ensemble& ensemble) {
  return Ensemble(ensemble.matrix().colwise() - mean(ensemble));
}

Covariance covariance(const Ensemble& ensemble) {
  const int m = ensemble.size();
  if (m < 2) throw std::invalid_argument("unbiased covariance needs m >= 2");
  const Eigen::MatrixXd dv = perturbations(ensemble).matrix();
  return Covariance((dv * dv.transpose()) / static_cast<double>(m - 1));
}

double ensemble_norm(const Ensemble& ensemble) {
  return std::sqrt(ensemble.matrix().squaredNorm() / ensemble.size());
}

}  // namespace l96da
