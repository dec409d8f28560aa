#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "evoglm/state_space.hpp"
#include "evoglm/triangle.hpp"

namespace evoglm {

/// How the calendar block and the accident-year block interact.
///
/// - exact: one joint update of (gamma, psi) that keeps their cross
///   covariance; equals Gaussian conditioning on all observed cells when the
///   artificial noise is zero.
/// - literal: the two-stage update (psi with gamma held at its previous
///   estimate, then gamma with the fresh psi) and no cross covariance.
enum class Coupling { exact, literal };

enum class CovarianceForm { standard, joseph };

Coupling parse_coupling(const std::string& name);
std::string to_string(Coupling coupling);

struct KalmanConfig {
  bool extended = false;
  /// Prior of the first accident-year block, per line.
  std::vector<Eigen::VectorXd> gamma_mean;
  std::vector<Eigen::MatrixXd> gamma_cov;
  /// h_1 ~ Normal(h1_mean, h1_var) per line.
  Eigen::VectorXd h1_mean;
  Eigen::VectorXd h1_var;

  enum class Init { closed_form, simulation };
  Init init = Init::closed_form;
  int simulation_paths = 10000;
  std::uint64_t seed = 1;

  /// Scalar level of the artificial calendar noise added at every predict.
  /// Negative selects 1e-6 times the mean prior variance of psi.
  double artificial_noise = -1.0;
  Coupling coupling = Coupling::exact;
  CovarianceForm form = CovarianceForm::standard;

  void validate(int lines) const;
};

struct KalmanState {
  Eigen::VectorXd gamma_mean;  // N*K
  Eigen::MatrixXd gamma_cov;
  Eigen::VectorXd psi_mean;    // N*I, line-major
  Eigen::MatrixXd psi_cov;
  Eigen::MatrixXd cross_cov;   // N*K x N*I, Cov(gamma, psi)
  int step = 1;
  double artificial_noise = 0.0;
};

/// Observed cells of accident row i stacked over lines, with the matching
/// rows of A_i, E_i and H_i.
struct RowObservation {
  Eigen::VectorXd y;
  Eigen::MatrixXd A;
  Eigen::MatrixXd E;
  Eigen::MatrixXd H;
  std::vector<std::pair<int, int>> cells;  // (line, j)
};

RowObservation observe_row(const TrianglePanel& panel, int i, const ModelParams& params, bool extended);

/// Prior state for accident row 1.
KalmanState init(int dim, const ModelParams& params, const KalmanConfig& config);

/// Two-stage updates used by the literal coupling.
KalmanState update_calendar(const KalmanState& prior, const RowObservation& obs);
KalmanState update_gamma(const KalmanState& state, const RowObservation& obs);

/// Joint update of (gamma, psi).
KalmanState update_joint(const KalmanState& prior, const RowObservation& obs,
                         CovarianceForm form = CovarianceForm::standard);

/// Time update to accident row i + 1: psi gets the artificial noise, gamma
/// its random-walk covariance.
KalmanState predict(const KalmanState& posterior, const ModelParams& params, bool extended);

struct KalmanStep {
  int step = 0;
  KalmanState prior;
  KalmanState posterior;
  Eigen::VectorXd innovation;
  Eigen::MatrixXd innovation_cov;
  double log_likelihood = 0.0;
  double min_eigenvalue = 0.0;
};

struct KalmanResult {
  std::vector<KalmanStep> steps;
  double log_likelihood = 0.0;
  double artificial_noise = 0.0;
};

KalmanResult run(const TrianglePanel& panel, const ModelParams& params, const KalmanConfig& config);

double log_likelihood(const TrianglePanel& panel, const ModelParams& params, const KalmanConfig& config);

struct MleOptions {
  int max_iterations = 2000;
  /// Simplex size at which the search stops.
  double tolerance = 1e-6;
  double initial_step = 0.5;
  /// Natural-scale box per parameter name, e.g. {"phi[1]", {1e-6, 10}}.
  std::map<std::string, std::pair<double, double>> bounds;
};

struct MleResult {
  ModelParams params;
  std::vector<std::string> names;
  Eigen::VectorXd estimate;  // natural scale, `names` order
  double log_likelihood = 0.0;
  double start_log_likelihood = 0.0;
  double gradient_norm = 0.0;  // transformed scale, central differences
  int iterations = 0;
  bool converged = false;
};

/// Nelder-Mead maximization of the Gaussian log-likelihood over log
/// variances (and the loadings when the common shock is active). Components
/// whose start value is zero stay fixed.
MleResult fit_mle(const TrianglePanel& panel, const ModelParams& start, const KalmanConfig& config,
                  const MleOptions& options = {});

/// Natural log of every observed cell; cells must be positive.
TrianglePanel log_claims(const TrianglePanel& panel);

}  // namespace evoglm
