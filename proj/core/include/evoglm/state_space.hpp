#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "evoglm/rng.hpp"

namespace evoglm {

/// How the linear predictor maps to the observation mean.
///
/// - tweedie: log link, cells ~ Tweedie(exp(eta), phi, p)
/// - gaussian: identity link on (typically log-transformed) claims,
///   cells ~ Normal(eta, phi)
enum class ObservationFamily { tweedie, gaussian };

ObservationFamily parse_family(const std::string& name);
std::string to_string(ObservationFamily family);

/// Static parameters of one line of business.
///
/// `phi` is the Tweedie dispersion, or the observation variance for a
/// Gaussian model. `p` is the Tweedie power (0 for Gaussian).
struct LineParams {
  double sigma2_a = 0.0;
  double sigma2_r = 0.0;
  double sigma2_s = 0.0;
  double sigma2_b1 = 0.0;
  double sigma2_b2 = 0.0;
  double sigma2_h = 0.0;
  double lambda = 0.0;
  double phi = 1.0;
  double p = 0.0;
};

struct ModelParams {
  std::vector<LineParams> lines;
  double sigma2_h_tilde = 0.0;

  int line_count() const noexcept { return static_cast<int>(lines.size()); }
  /// Throws InputError on a negative variance or nonpositive phi.
  void validate() const;
};

/// Hoerl block size: (a, r, s) or (a, r, s, b1, b2).
constexpr int gamma_block_size(bool extended) noexcept { return extended ? 5 : 3; }

/// Names of the accident-year factors in serialization order.
std::vector<std::string> gamma_factor_names(bool extended);

/// One joint realization of all random factors: the current accident-year
/// block per line and all calendar factors h_1..h_I per line.
struct FactorState {
  std::vector<Eigen::VectorXd> gamma;
  std::vector<Eigen::VectorXd> psi;
  bool extended = false;

  int line_count() const noexcept { return static_cast<int>(gamma.size()); }
  void validate(int dim) const;
};

/// Rows j = 1..I-i+1 of [1, log j, j] (or with the j=1, j=2 indicators).
Eigen::MatrixXd design_matrix_A(int i, int dim, bool extended);

/// (I-i+1) x I selector picking h_i .. h_I.
Eigen::MatrixXd selector_matrix_E(int i, int dim);

/// Design row for development index j.
Eigen::VectorXd design_row(int j, bool extended);

/// Log-mean a + r log j + s j [+ b1 1{j=1} + b2 1{j=2}] + h_t for one cell.
double cell_predictor(const Eigen::Ref<const Eigen::VectorXd>& gamma_block,
                      const Eigen::Ref<const Eigen::VectorXd>& psi_line, int i, int j);

/// Log-means of accident row i on line n, entries j = 1..I-i+1.
Eigen::VectorXd linear_predictor(const FactorState& state, int i, int line);

/// Random-walk step of one gamma block.
Eigen::VectorXd evolve_gamma(const Eigen::VectorXd& previous, const LineParams& params,
                             RandomStream& rng);

/// Variances of the gamma random walk in block order.
Eigen::VectorXd gamma_step_variances(const LineParams& params, bool extended);

struct CalendarStep {
  std::vector<double> h;
  std::vector<double> line_shocks;
  double common_shock = 0.0;
};

/// h_t = h_{t-1} + eps_t + lambda * eps~_t for every line, with one shared
/// eps~_t. Line shocks come from their own streams.
CalendarStep evolve_calendar(std::span<const double> previous, const ModelParams& params,
                             std::span<RandomStream> line_streams, RandomStream& common);

/// Single-stream convenience: common shock first, then lines in order.
CalendarStep evolve_calendar(std::span<const double> previous, const ModelParams& params,
                             RandomStream& rng);

/// Stacked matrices of the Gaussian representation for accident row i.
/// Rows follow the observation order: line 1 cells j = 1..I-i+1, then line 2.
struct GaussianSystem {
  Eigen::MatrixXd A;        // block diagonal, rows x N*K
  Eigen::MatrixXd E;        // block diagonal, rows x N*I
  Eigen::MatrixXd H;        // observation covariance
  Eigen::MatrixXd Q_gamma;  // N*K x N*K
  Eigen::MatrixXd Q_h;      // (N+1) x (N+1): line disturbances, then common shock
};

GaussianSystem build_gaussian_system(int i, int dim, const ModelParams& params, bool extended);

/// psi_t = R_{t-1} psi_{t-1} + S_{t-1} eps_t with psi_t = (h_1..h_t) per line.
struct CalendarTransition {
  Eigen::MatrixXd R;  // N*t x N*(t-1)
  Eigen::MatrixXd S;  // N*t x (N+1)
};

CalendarTransition calendar_transition(int t, const ModelParams& params);

/// Closed-form prior moments of psi_I (line-major) when h_1 per line is
/// independent Normal(h1_mean, h1_var) and later values follow the
/// calendar random walk.
struct GaussianMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

GaussianMoments calendar_prior_moments(int dim, const ModelParams& params,
                                       const Eigen::VectorXd& h1_mean,
                                       const Eigen::VectorXd& h1_var);

/// Correlation of the calendar increments of two lines.
double calendar_increment_correlation(const ModelParams& params, int line_a, int line_b);

}  // namespace evoglm
