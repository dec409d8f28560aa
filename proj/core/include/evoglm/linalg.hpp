#pragma once

#include <Eigen/Dense>

namespace evoglm {

/// Symmetric part (A + A') / 2.
Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a);

/// Nearest PSD matrix in Frobenius norm: eigenvalues floored at `floor`.
Eigen::MatrixXd project_psd(const Eigen::MatrixXd& a, double floor = 0.0);

/// A factor L with L L' = A for a PSD matrix (eigen-based, tolerates
/// singular A). Negative eigenvalues are clipped to zero.
Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& a);

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Eigen::MatrixXd& a);

/// Cholesky of a symmetric positive-definite matrix with diagonal jitter
/// escalation 1e-12 -> 1e-8 (relative to the mean diagonal). Throws
/// NumericalError if the matrix is still not positive definite.
class SpdSolver {
 public:
  explicit SpdSolver(const Eigen::MatrixXd& a);

  Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const { return llt_.solve(b); }
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const { return llt_.solve(b); }
  Eigen::MatrixXd inverse() const;
  double log_determinant() const;
  double jitter() const { return jitter_; }

 private:
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double jitter_ = 0.0;
};

/// Weighted mean of the columns of x (weights sum to one).
Eigen::VectorXd weighted_mean(const Eigen::MatrixXd& x, const Eigen::VectorXd& w);

/// Weighted covariance of the columns of x around `mean`.
Eigen::MatrixXd weighted_covariance(const Eigen::MatrixXd& x, const Eigen::VectorXd& w,
                                    const Eigen::VectorXd& mean);

}  // namespace evoglm
