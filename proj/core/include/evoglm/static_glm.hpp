#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "evoglm/triangle.hpp"

namespace evoglm {

/// Mean structures for the static fit of one line.
///
/// - hoerl: a_i + r log j + s j (a_i per accident year, r and s shared)
/// - hoerl_extended: hoerl + b1 1{j=1} + b2 1{j=2}
/// - chain_ladder: a_i + d_j with d_1 = 0
enum class MeanStructure { hoerl, hoerl_extended, chain_ladder };

MeanStructure parse_mean_structure(const std::string& name);
std::string to_string(MeanStructure structure);

struct IrlsOptions {
  int max_iterations = 200;
  /// Convergence on the score, relative to the sum of absolute score terms.
  double score_tolerance = 1e-10;
  int max_halvings = 30;
};

struct GlmCell {
  int i = 0;
  int j = 0;
  double y = 0.0;
  double mu = 0.0;
  double pearson = 0.0;
};

struct GlmFit {
  std::vector<std::string> names;
  Eigen::VectorXd coefficients;
  /// phi_hat * (X' W X)^{-1}
  Eigen::MatrixXd covariance;
  Eigen::VectorXd score;
  std::vector<GlmCell> cells;
  double power = 1.5;
  double dispersion = 1.0;
  double deviance = 0.0;
  int iterations = 0;
  bool converged = false;

  double coefficient(const std::string& name) const;
};

/// Log-link quasi-likelihood fit with variance mu^p by iteratively
/// reweighted least squares with step halving on deviance increase.
/// Throws NumericalError on a singular information matrix or when the
/// iteration budget runs out.
GlmFit fit_irls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double p,
                const IrlsOptions& options = {});

/// Design matrix, response and cell coordinates for one line.
struct LineDesign {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<std::pair<int, int>> cells;
  std::vector<std::string> names;
};

LineDesign build_line_design(const TrianglePanel& panel, int line, MeanStructure structure);

/// Fits one line of a panel; observations are the observed cells.
GlmFit fit_line(const TrianglePanel& panel, int line, MeanStructure structure, double p,
                const IrlsOptions& options = {});

/// Fits every line at each p on the grid and returns the p with the largest
/// total Tweedie log-likelihood at the fitted dispersion.
double profile_power(const TrianglePanel& panel, MeanStructure structure,
                     const std::vector<double>& grid);

/// Tweedie unit deviance summed over observations.
double tweedie_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& mu, double p);

struct ResidualSummary {
  std::vector<GlmCell> cells;
  /// (sum y - sum mu) / sum mu over observed cells with i + j - 1 = t;
  /// NaN where the calendar year has no observed cell.
  std::vector<double> calendar;
};

ResidualSummary pearson_residuals(const GlmFit& fit, int dim);

/// Prior for the first accident-year block derived from a static Hoerl fit:
/// mean (a_1 - h1_mean, r, s[, b1, b2]) and covariance scale * Cov.
struct GammaPrior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

GammaPrior gamma_prior_from_fit(const GlmFit& fit, MeanStructure structure, double h1_mean,
                                double scale = 4.0);

/// Ordinary least squares on log claims with the Hoerl design, used to seed
/// the Gaussian (log-claims) model.
GlmFit fit_log_ols(const TrianglePanel& panel, int line, MeanStructure structure);

}  // namespace evoglm
