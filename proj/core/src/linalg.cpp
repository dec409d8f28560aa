#include "evoglm/linalg.hpp"

#include <cmath>

#include "evoglm/error.hpp"

namespace evoglm {

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a) {
  return 0.5 * (a + a.transpose());
}

Eigen::MatrixXd project_psd(const Eigen::MatrixXd& a, double floor) {
  if (a.size() == 0) return a;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(a));
  Eigen::VectorXd d = es.eigenvalues().cwiseMax(floor);
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return a;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(a));
  Eigen::VectorXd d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * d.asDiagonal();
}

double min_eigenvalue(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

SpdSolver::SpdSolver(const Eigen::MatrixXd& a) {
  const Eigen::MatrixXd s = symmetrize(a);
  llt_.compute(s);
  if (llt_.info() == Eigen::Success) return;
  const double scale = s.rows() > 0 ? std::max(s.diagonal().cwiseAbs().mean(), 1e-300) : 1.0;
  for (double rel : {1e-12, 1e-11, 1e-10, 1e-9, 1e-8}) {
    jitter_ = rel * scale;
    Eigen::MatrixXd j = s;
    j.diagonal().array() += jitter_;
    llt_.compute(j);
    if (llt_.info() == Eigen::Success) return;
  }
  throw NumericalError("matrix is not positive definite even after jitter 1e-8");
}

Eigen::MatrixXd SpdSolver::inverse() const {
  const auto n = llt_.matrixLLT().rows();
  return llt_.solve(Eigen::MatrixXd::Identity(n, n));
}

double SpdSolver::log_determinant() const {
  return 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
}

Eigen::VectorXd weighted_mean(const Eigen::MatrixXd& x, const Eigen::VectorXd& w) {
  return x * w;
}

Eigen::MatrixXd weighted_covariance(const Eigen::MatrixXd& x, const Eigen::VectorXd& w,
                                    const Eigen::VectorXd& mean) {
  const Eigen::MatrixXd centered = x.colwise() - mean;
  return centered * w.asDiagonal() * centered.transpose();
}

}  // namespace evoglm
