#include <cmath>
#include <iostream>
#include <limits>
#include <map>
#include <memory>

#include "common.hpp"
#include "evoglm/error.hpp"
#include "evoglm/static_glm.hpp"
#include "evoglm/tweedie.hpp"

namespace evoglm::cli {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct DiagnoseOptions {
  std::string fit;
  std::string truth;
  double glm_power = 1.5;
  int ratio_after = 3;
  std::string out;
};

std::vector<Eigen::MatrixXd> model_residuals(const TrianglePanel& panel, const std::vector<Eigen::MatrixXd>& fitted,
                                             const ModelParams& params, ObservationFamily family) {
  std::vector<Eigen::MatrixXd> out;
  const int dim = panel.dim();
  for (int n = 0; n < panel.lines(); ++n) {
    const LineParams& lp = params.lines[static_cast<std::size_t>(n)];
    const TweedieSpec spec{family == ObservationFamily::gaussian ? 0.0 : lp.p, lp.phi};
    Eigen::MatrixXd r = Eigen::MatrixXd::Constant(dim, dim, kNaN);
    for (int i = 1; i <= dim; ++i) {
      for (int j = 1; j <= dim - i + 1; ++j) {
        if (!panel.observed(n, i, j)) continue;
        const double mu = fitted[static_cast<std::size_t>(n)](i - 1, j - 1);
        const double v = spec.p == 0.0 ? spec.phi : variance(mu, spec);
        r(i - 1, j - 1) = (panel.value(n, i, j) - mu) / std::sqrt(v);
      }
    }
    out.push_back(r);
  }
  return out;
}

double level_correlation(const Eigen::VectorXd& psi, int dim, int a, int b) {
  const Eigen::VectorXd x = psi.segment(a * dim, dim);
  const Eigen::VectorXd y = psi.segment(b * dim, dim);
  const Eigen::VectorXd xc = x.array() - x.mean();
  const Eigen::VectorXd yc = y.array() - y.mean();
  const double denom = std::sqrt(xc.squaredNorm() * yc.squaredNorm());
  return denom > 0.0 ? xc.dot(yc) / denom : kNaN;
}

int run_diagnose(const DiagnoseOptions& o, const Args& args) {
  RunRecord record("diagnose", args);
  const std::filesystem::path bundle_path = std::filesystem::path(o.fit) / "fit.json";
  const FitBundle bundle = load_bundle(bundle_path);
  record.input(bundle_path);
  TruthRecord truth;
  if (!o.truth.empty()) {
    require_file(o.truth);
    record.input(o.truth);
    truth = truth_from_json(read_json_file(o.truth));
  }
  record.config({{"glm_power", o.glm_power}, {"ratio_after", o.ratio_after}, {"truth", !o.truth.empty()}});

  const std::filesystem::path out(o.out);
  prepare_out(out);
  const TrianglePanel& panel = bundle.panel;
  const FilteredPath& path = bundle.path;
  const int dim = panel.dim();

  ResidualReport report;
  if (path.family == ObservationFamily::tweedie) {
    const MeanStructure structure = path.extended ? MeanStructure::hoerl_extended : MeanStructure::hoerl;
    try {
      std::vector<Eigen::MatrixXd> fitted;
      std::vector<Eigen::MatrixXd> residuals;
      for (int n = 0; n < panel.lines(); ++n) {
        const GlmFit fit = fit_line(panel, n, structure, o.glm_power);
        Eigen::MatrixXd mu = Eigen::MatrixXd::Constant(dim, dim, kNaN);
        Eigen::MatrixXd r = mu;
        for (const auto& c : fit.cells) {
          mu(c.i - 1, c.j - 1) = c.mu;
          r(c.i - 1, c.j - 1) = c.pearson;
        }
        fitted.push_back(mu);
        residuals.push_back(r);
      }
      report.add("static", panel, fitted, residuals);
    } catch (const NumericalError& e) {
      std::cerr << "warning: static comparison fit failed: " << e.what() << '\n';
    }
  }
  const std::vector<Eigen::MatrixXd> fitted = fitted_cells(panel, path);
  report.add("model", panel, fitted, model_residuals(panel, fitted, bundle.posterior, path.family));
  report.write(out);

  CsvTable cells({"line", "i", "j", "observed", "fitted"});
  for (int n = 0; n < panel.lines(); ++n) {
    for (int i = 1; i <= dim; ++i) {
      for (int j = 1; j <= dim - i + 1; ++j) {
        if (!panel.observed(n, i, j)) continue;
        cells.add({num(n + 1), num(i), num(j), num(panel.value(n, i, j)),
                   num(fitted[static_cast<std::size_t>(n)](i - 1, j - 1))});
      }
    }
  }
  cells.write(out / "fitted.csv");

  const auto rows = tracking_table(panel, path);
  tracking_csv(rows).write(out / "tracking.csv");
  CsvTable score({"line", "transitions", "closer"});
  for (int n = 1; n <= panel.lines(); ++n) {
    const TrackingScore s = tracking_score(rows, n);
    score.add({num(n), num(s.transitions), num(s.closer)});
  }
  score.write(out / "tracking_score.csv");

  CsvTable corr({"line_a", "line_b", "theoretical_increment", "sample_increment", "sample_level"});
  const Eigen::VectorXd& psi = path.psi.back();
  for (int a = 0; a < panel.lines(); ++a) {
    for (int b = a + 1; b < panel.lines(); ++b) {
      corr.add({num(a + 1), num(b + 1), num(calendar_increment_correlation(bundle.posterior, a, b)),
                num(dim >= 4 ? sample_increment_correlation(psi, dim, a, b) : kNaN),
                num(level_correlation(psi, dim, a, b))});
    }
  }
  corr.write(out / "calendar_correlation.csv");

  if (!o.truth.empty()) {
    const auto ratios = fitting_ratios(path, truth);
    CsvTable table({"line", "step", "factor", "filtered", "truth", "ratio"});
    std::map<std::pair<int, std::string>, std::pair<int, double>> worst;
    for (const auto& r : ratios) {
      table.add({num(r.line), num(r.step), r.factor, num(r.filtered), num(r.truth), num(r.ratio)});
      if (r.factor == "h" || r.step <= o.ratio_after || std::isnan(r.ratio)) continue;
      auto& w = worst[{r.line, r.factor}];
      w.first += 1;
      w.second = std::max(w.second, std::abs(r.ratio - 1.0));
    }
    table.write(out / "fitting_ratios.csv");
    CsvTable summary({"line", "factor", "steps", "max_abs_deviation"});
    for (const auto& [key, w] : worst) summary.add({num(key.first), key.second, num(w.first), num(w.second)});
    summary.write(out / "ratio_summary.csv");
  }
  record.finish(out);
  return 0;
}

}  // namespace

void add_diagnose(CLI::App& app, const Args& args, Action& action) {
  auto o = std::make_shared<DiagnoseOptions>();
  CLI::App* sub = app.add_subcommand("diagnose", "Residual, tracking, dependence and fitting-ratio tables");
  sub->add_option("--fit", o->fit, "Directory written by fit-pf or fit-kf")->required();
  sub->add_option("--truth", o->truth, "truth.json from simulate");
  sub->add_option("--glm-power", o->glm_power, "Tweedie power of the static comparison fit")->capture_default_str();
  sub->add_option("--ratio-after", o->ratio_after, "Ratio summary covers steps after this one")->capture_default_str();
  sub->add_option("--out", o->out, "Output directory")->required();
  sub->callback([o, args, &action] { action = [o, args] { return run_diagnose(*o, args); }; });
}

}  // namespace evoglm::cli
