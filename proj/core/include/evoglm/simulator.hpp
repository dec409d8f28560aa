#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "evoglm/state_space.hpp"
#include "evoglm/triangle.hpp"

namespace evoglm {

struct SimConfig {
  int dim = 15;
  ModelParams params;
  bool extended = false;
  /// First accident-year block per line.
  std::vector<Eigen::VectorXd> gamma1;
  /// h_1 ~ Normal(h1_mean, h1_sd^2) per line; h1_sd = 0 gives a fixed start.
  std::vector<double> h1_mean;
  std::vector<double> h1_sd;
  std::uint64_t seed = 1;
  ObservationFamily family = ObservationFamily::tweedie;
  /// Also draw the lower triangle (h continues to t = 2I - 1).
  bool lower = false;
  /// Fraction of upper-triangle cells dropped at random (uniform mask).
  double missing_fraction = 0.0;
  std::vector<std::string> line_names;

  int line_count() const noexcept { return params.line_count(); }
  void validate() const;

  /// The two-line setting of the paper's simulation study.
  static SimConfig paper_default();
};

/// Every factor and every shock of one simulated realization.
struct TruthRecord {
  /// gamma[n][i-1]: block of line n for accident year i.
  std::vector<std::vector<Eigen::VectorXd>> gamma;
  /// h[n](t-1) for t = 1..T.
  std::vector<Eigen::VectorXd> h;
  /// gamma_shocks[n][i-1]: increment from year i-1 to i (zero for i = 1).
  std::vector<std::vector<Eigen::VectorXd>> gamma_shocks;
  /// line_shocks[n](t-1), common_shocks(t-1); zero at t = 1.
  std::vector<Eigen::VectorXd> line_shocks;
  Eigen::VectorXd common_shocks;

  /// Factor state at accident year i (gamma_i with psi = h_1..h_I).
  FactorState state_at(int i, int dim, bool extended) const;
};

TruthRecord simulate_factors(const SimConfig& config);

struct SimResult {
  TrianglePanel panel;
  TruthRecord truth;
  /// Lower-triangle cells per line (NaN above the diagonal); empty unless
  /// config.lower.
  std::vector<Eigen::MatrixXd> lower;
};

SimResult simulate_panel(const SimConfig& config);

/// Independent replicates with sub-seeds derived from config.seed.
std::vector<SimResult> simulate_replicates(const SimConfig& config, int count, unsigned workers = 0);

}  // namespace evoglm
