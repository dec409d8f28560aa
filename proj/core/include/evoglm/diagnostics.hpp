#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "evoglm/dual_kalman.hpp"
#include "evoglm/particle_filter.hpp"
#include "evoglm/simulator.hpp"
#include "evoglm/static_glm.hpp"
#include "evoglm/triangle.hpp"

namespace evoglm {

struct HoerlSummary {
  double mean = 0.0;
  double variance = 0.0;
  /// False when s >= 0 (the summaries are not finite curve moments).
  bool finite = true;
};

/// mean = (r - 1) / (-s), variance = (r - 1) / s^2. Throws on s = 0.
HoerlSummary hoerl_summary(double r, double s);

/// Posterior means of a filter run: gamma[i-1] is the stacked row-i block
/// after step i, psi[i-1] the calendar block after step i.
struct FilteredPath {
  std::vector<Eigen::VectorXd> gamma;
  std::vector<Eigen::VectorXd> psi;
  bool extended = false;
  ObservationFamily family = ObservationFamily::tweedie;

  int lines() const;
};

FilteredPath filtered_path(const PfResult& fit);
FilteredPath filtered_path(const KalmanResult& fit, bool extended);

struct FitRatio {
  int line = 0;  // 1-based
  int step = 0;  // accident index, or calendar index for h
  std::string factor;
  double filtered = 0.0;
  double truth = 0.0;
  double ratio = 0.0;  // NaN where truth is zero
};

/// Filtered / true per line, step and factor: the gamma entries and the two
/// Hoerl summaries per accident step, and h_t per calendar index taken from
/// the final step's calendar block.
std::vector<FitRatio> fitting_ratios(const FilteredPath& path, const TruthRecord& truth);

/// Fitted cell means per line (I x I, NaN off the observed region) using the
/// row-i block after step i and the final calendar block.
std::vector<Eigen::MatrixXd> fitted_cells(const TrianglePanel& panel, const FilteredPath& path);

/// Fitted means from static per-line GLM fits.
std::vector<Eigen::MatrixXd> fitted_cells(const TrianglePanel& panel, const std::vector<GlmFit>& fits);

struct ResidualTables {
  /// (sum y - sum mu) / sum mu by accident, development and calendar year;
  /// NaN where a year has no observed cell.
  Eigen::VectorXd accident;
  Eigen::VectorXd development;
  Eigen::VectorXd calendar;
};

ResidualTables residuals_by_dimension(const LineTriangle& line, const Eigen::MatrixXd& fitted);

struct Association {
  int n = 0;
  double pearson = 0.0;
  double pearson_p = 0.0;
  double spearman = 0.0;
  double spearman_p = 0.0;
  double kendall = 0.0;
  double kendall_p = 0.0;
};

/// Pearson and Spearman with two-sided t-approximation p-values (n - 2 df);
/// Kendall tau-b with the normal approximation
/// z = 3 tau sqrt(n (n - 1)) / sqrt(2 (2n + 5)).
Association association(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

struct TrackingRow {
  int line = 0;  // 1-based
  int i = 0;
  int j = 0;
  double observed = 0.0;     // NaN when the cell is masked
  double fitted = 0.0;       // pattern after step i
  double fitted_prev = 0.0;  // row i-1 pattern after step i-1, NaN for i = 1
};

std::vector<TrackingRow> tracking_table(const TrianglePanel& panel, const FilteredPath& path);

struct TrackingScore {
  int transitions = 0;
  /// Rows where the current fit is closer (RMSE over observed cells) to the
  /// data than the previous row's fit.
  int closer = 0;
};

TrackingScore tracking_score(const std::vector<TrackingRow>& rows, int line);

/// Observed / fitted per cell, NaN where unobserved.
Eigen::MatrixXd heatmap_table(const LineTriangle& line, const Eigen::MatrixXd& fitted);

/// Pearson correlation of the calendar-year increments h_t - h_{t-1} of two
/// lines from a calendar block (line-major).
double sample_increment_correlation(const Eigen::VectorXd& psi, int dim, int line_a, int line_b);

}  // namespace evoglm
