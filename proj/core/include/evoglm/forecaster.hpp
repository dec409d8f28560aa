#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "evoglm/dual_kalman.hpp"
#include "evoglm/particle_filter.hpp"
#include "evoglm/rng.hpp"
#include "evoglm/state_space.hpp"
#include "evoglm/triangle.hpp"

namespace evoglm {

/// One joint posterior draw of everything needed to fill the lower triangle.
struct PosteriorDraw {
  ModelParams params;
  /// gamma_rows[n]: K x I, column i-1 is the accident-year-i block.
  std::vector<Eigen::MatrixXd> gamma_rows;
  /// psi[n]: h_1..h_I.
  std::vector<Eigen::VectorXd> psi;
};

struct PosteriorSampler {
  int lines = 0;
  int dim = 0;
  bool extended = false;
  ObservationFamily family = ObservationFamily::tweedie;
  std::function<PosteriorDraw(RandomStream&)> draw;
};

/// Picks a particle by its final weight and follows its ancestral path for
/// the accident-year blocks.
PosteriorSampler particle_sampler(const PfResult& fit);

/// Draws each row's block from its filtered Gaussian and psi from the final
/// posterior, with the given static parameters.
PosteriorSampler kalman_sampler(const KalmanResult& fit, const ModelParams& params, bool extended);

/// Always returns the same draw.
PosteriorSampler point_sampler(const PosteriorDraw& draw, bool extended, ObservationFamily family);

struct ForecastConfig {
  int draws = 100000;
  std::uint64_t seed = 2;
  unsigned workers = 0;
  /// Cells are exp of the drawn value (Gaussian model on log claims).
  bool log_scale = false;
  /// Draw cells from the observation family; false uses the cell means.
  bool observation_noise = true;
};

struct ReserveDistribution {
  std::vector<std::string> line_names;
  int dim = 0;
  int draws = 0;
  std::uint64_t seed = 0;
  Eigen::MatrixXd line_totals;         // S x N
  Eigen::VectorXd aggregate;           // S
  std::vector<Eigen::MatrixXd> by_ay;  // per line S x I (column i-1 = accident year i)
};

/// Simulates future calendar factors with fresh common shocks and draws every
/// unobserved lower-triangle cell. Loss-ratio panels are scaled back by the
/// accident-year premium.
ReserveDistribution forecast(const PosteriorSampler& sampler, const TrianglePanel& panel,
                             const ForecastConfig& config);

/// Order statistic at index ceil(chi * S) (1-based) of the sorted samples.
double var_quantile(const Eigen::VectorXd& samples, double chi);

/// max(VaR - mean, SD / 2).
double risk_margin(double mean, double sd, double var);
double risk_margin(const Eigen::VectorXd& samples, double chi);

/// (sum of line margins - aggregate margin) / sum of line margins, in percent.
double diversification_benefit(const std::vector<double>& line_margins, double aggregate_margin);

struct SampleStats {
  double mean = 0.0;
  double sd = 0.0;  // n - 1 denominator
  std::vector<double> levels;
  std::vector<double> var;
  std::vector<double> margin;
};

SampleStats sample_stats(const Eigen::VectorXd& samples, const std::vector<double>& levels);

struct DensityPoint {
  double x = 0.0;
  double density = 0.0;
};

/// Gaussian kernel with Silverman's bandwidth 0.9 min(sd, IQR/1.34) n^(-1/5)
/// on an even grid from min - 5h to max + 5h. Empty for degenerate samples.
std::vector<DensityPoint> kernel_density(const Eigen::VectorXd& samples, int grid_points = 512);

struct ForecastSummary {
  std::vector<std::string> columns;  // line names then "total"
  std::vector<SampleStats> totals;
  /// Per column, per accident year: mean and sd.
  std::vector<Eigen::VectorXd> ay_mean;
  std::vector<Eigen::VectorXd> ay_sd;
  std::vector<double> diversification;  // per level, percent
};

ForecastSummary summarize(const ReserveDistribution& dist, const std::vector<double>& levels);

}  // namespace evoglm
