#include <cmath>
#include <limits>
#include <memory>

#include "common.hpp"
#include "evoglm/error.hpp"
#include "evoglm/static_glm.hpp"

namespace evoglm::cli {
namespace {

struct ExploreOptions {
  PanelArgs panel;
  std::string structure = "hoerl_extended";
  double power = 1.5;
  bool profile = false;
  std::string out;
};

int run_explore(const ExploreOptions& o, const Args& args) {
  RunRecord record("explore", args);
  const MeanStructure structure = parse_mean_structure(o.structure);
  if (!(o.power == 0.0 || (o.power >= 1.0 && o.power <= 2.0))) throw InputError("--power: must be 0 or in [1, 2]");
  const TrianglePanel panel = load_panel(o.panel, record);
  double power = o.power;
  if (o.profile) power = profile_power(panel, structure, {1.1, 1.2, 1.3, 1.4, 1.5, 1.6, 1.7, 1.8, 1.9});
  record.config({{"panel", to_json(o.panel)},
                 {"structure", to_string(structure)},
                 {"power", power},
                 {"profile_power", o.profile}});

  const std::filesystem::path out(o.out);
  prepare_out(out);
  const int dim = panel.dim();
  CsvTable coefficients({"line", "name", "estimate", "se"});
  CsvTable summary({"line", "power", "dispersion", "deviance", "iterations"});
  CsvTable cells({"line", "i", "j", "t", "y", "mu", "pearson"});
  std::vector<Eigen::MatrixXd> fitted;
  std::vector<Eigen::MatrixXd> residuals;
  for (int n = 0; n < panel.lines(); ++n) {
    const GlmFit fit = fit_line(panel, n, structure, power);
    for (std::size_t k = 0; k < fit.names.size(); ++k) {
      const auto e = static_cast<Eigen::Index>(k);
      coefficients.add({num(n + 1), fit.names[k], num(fit.coefficients(e)), num(std::sqrt(fit.covariance(e, e)))});
    }
    summary.add({num(n + 1), num(fit.power), num(fit.dispersion), num(fit.deviance), num(fit.iterations)});
    Eigen::MatrixXd mu = Eigen::MatrixXd::Constant(dim, dim, std::numeric_limits<double>::quiet_NaN());
    Eigen::MatrixXd r = mu;
    for (const auto& c : fit.cells) {
      mu(c.i - 1, c.j - 1) = c.mu;
      r(c.i - 1, c.j - 1) = c.pearson;
      cells.add({num(n + 1), num(c.i), num(c.j), num(calendar_index(c.i, c.j)), num(c.y), num(c.mu), num(c.pearson)});
    }
    fitted.push_back(mu);
    residuals.push_back(r);
  }
  ResidualReport report;
  report.add("static", panel, fitted, residuals);

  coefficients.write(out / "coefficients.csv");
  summary.write(out / "glm_summary.csv");
  cells.write(out / "cell_residuals.csv");
  report.write(out);
  record.finish(out);
  return 0;
}

}  // namespace

void add_explore(CLI::App& app, const Args& args, Action& action) {
  auto o = std::make_shared<ExploreOptions>();
  CLI::App* sub = app.add_subcommand("explore", "Static per-line GLM fits, residual tables and association measures");
  add_panel_options(sub, o->panel);
  sub->add_option("--structure", o->structure, "hoerl, hoerl_extended or chain_ladder")->capture_default_str();
  sub->add_option("--power", o->power, "Tweedie power of the static fits")->capture_default_str();
  sub->add_flag("--profile-power", o->profile, "Pick the power from the grid 1.1..1.9 by likelihood");
  sub->add_option("--out", o->out, "Output directory")->required();
  sub->callback([o, args, &action] { action = [o, args] { return run_explore(*o, args); }; });
}

}  // namespace evoglm::cli
