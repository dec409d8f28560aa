#pragma once

#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "evoglm/diagnostics.hpp"
#include "evoglm/dual_kalman.hpp"
#include "evoglm/particle_filter.hpp"
#include "evoglm/serialization.hpp"
#include "evoglm/triangle.hpp"
#include "manifest.hpp"

namespace evoglm::cli {

/// File-system failures; the CLI maps these to exit status 1.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Args = std::vector<std::string>;

/// Runs one command line (without the program name) and returns its exit
/// status. Re-entrant, so studies can chain ordinary commands.
int dispatch(const Args& args);

struct PanelArgs {
  std::string panel_json;
  std::vector<std::string> triangles;
  bool cumulative = false;
  bool loss_ratios = false;
  bool no_premium = false;
};

void add_panel_options(CLI::App* app, PanelArgs& args);
TrianglePanel load_panel(const PanelArgs& args, RunRecord& record);
Json to_json(const PanelArgs& args);

void require_file(const std::filesystem::path& path);
void prepare_out(const std::filesystem::path& dir);

/// Fills missing first-row priors from static per-line fits.
void fill_gamma_prior(PriorSpec& prior, const TrianglePanel& panel, double power, double scale);

/// Name/value pairs of every model parameter, e.g. ("phi[1]", 0.4).
std::vector<std::pair<std::string, double>> named_params(const ModelParams& params, bool extended);

Json to_json(const KalmanConfig& config);
KalmanConfig kalman_config_from_json(const Json& j);

/// What a fit directory stores: inputs that re-create the filter run
/// exactly, plus the filtered means used by diagnostics.
struct FitBundle {
  enum class Kind { particle, kalman };
  Kind kind = Kind::particle;
  TrianglePanel panel;
  PriorSpec prior;
  PfConfig pf;
  ModelParams params;
  KalmanConfig kalman;
  bool log_scale = false;
  FilteredPath path;
  /// Posterior mean parameters (the fixed parameters for Kalman fits).
  ModelParams posterior;
};

void save_bundle(const FitBundle& bundle, const std::filesystem::path& path);
FitBundle load_bundle(const std::filesystem::path& path);

CsvTable pf_factor_table(const PfResult& fit);
CsvTable kalman_factor_table(const KalmanResult& fit, int lines, int dim, bool extended);
CsvTable tracking_csv(const std::vector<TrackingRow>& rows);

std::string level_label(double level);

/// One row per level: the margin of every column and the diversification
/// benefit in percent.
CsvTable risk_margin_table(const std::vector<std::string>& columns, const std::vector<double>& levels,
                           const std::vector<std::vector<double>>& margins, const std::vector<double>& benefit);

/// Residual tables shared by explore (static fits) and diagnose (filtered
/// fits), tagged by source.
class ResidualReport {
 public:
  ResidualReport();
  /// `fitted` and `cell_residuals` are I x I per line, NaN off the data.
  void add(const std::string& source, const TrianglePanel& panel, const std::vector<Eigen::MatrixXd>& fitted,
           const std::vector<Eigen::MatrixXd>& cell_residuals);
  void write(const std::filesystem::path& dir) const;

 private:
  CsvTable by_year_;
  CsvTable heatmap_;
  CsvTable association_;
};

/// Each command registers its subcommand and, when selected, stores the
/// work to run after parsing in `action`.
using Action = std::function<int()>;

void add_simulate(CLI::App& app, const Args& args, Action& action);
void add_explore(CLI::App& app, const Args& args, Action& action);
void add_fit_pf(CLI::App& app, const Args& args, Action& action);
void add_fit_kf(CLI::App& app, const Args& args, Action& action);
void add_forecast(CLI::App& app, const Args& args, Action& action);
void add_diagnose(CLI::App& app, const Args& args, Action& action);
void add_reproduce(CLI::App& app, const Args& args, Action& action);
void add_replay(CLI::App& app, const Args& args, Action& action);

}  // namespace evoglm::cli
