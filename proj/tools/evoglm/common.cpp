#include "common.hpp"

#include <cmath>

#include "evoglm/error.hpp"
#include "evoglm/static_glm.hpp"

namespace evoglm::cli {
namespace {

// Two-sided 90% band of a normal posterior.
constexpr double kZ95 = 1.6448536269514722;

Json vectors_json(const std::vector<Eigen::VectorXd>& vs) {
  Json out = Json::array();
  for (const auto& v : vs) out.push_back(std::vector<double>(v.data(), v.data() + v.size()));
  return out;
}

std::vector<Eigen::VectorXd> vectors_from_json(const Json& j) {
  std::vector<Eigen::VectorXd> out;
  for (const auto& row : j) {
    const auto v = row.get<std::vector<double>>();
    out.push_back(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
  }
  return out;
}

Json matrices_json(const std::vector<Eigen::MatrixXd>& ms) {
  Json out = Json::array();
  for (const auto& m : ms) {
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      std::vector<double> row(static_cast<std::size_t>(m.cols()));
      for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
      rows.push_back(row);
    }
    out.push_back(rows);
  }
  return out;
}

std::vector<Eigen::MatrixXd> matrices_from_json(const Json& j) {
  std::vector<Eigen::MatrixXd> out;
  for (const auto& m : j) {
    const auto rows = static_cast<Eigen::Index>(m.size());
    Eigen::MatrixXd x(rows, rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const auto row = m[static_cast<std::size_t>(r)].get<std::vector<double>>();
      if (static_cast<Eigen::Index>(row.size()) != rows) throw InputError("kalman.gamma_cov: not square");
      for (Eigen::Index c = 0; c < rows; ++c) x(r, c) = row[static_cast<std::size_t>(c)];
    }
    out.push_back(x);
  }
  return out;
}

Eigen::VectorXd vector_from(const Json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void add_factor_rows(CsvTable& table, int step, int lines, int dim, bool extended,
                     const Eigen::VectorXd& gmean, const Eigen::VectorXd& gsd, const Eigen::VectorXd& glo,
                     const Eigen::VectorXd& ghi, const Eigen::VectorXd& pmean, const Eigen::VectorXd& psd,
                     const Eigen::VectorXd& plo, const Eigen::VectorXd& phi) {
  const auto names = gamma_factor_names(extended);
  const int k = gamma_block_size(extended);
  for (int n = 0; n < lines; ++n) {
    for (int f = 0; f < k; ++f) {
      const Eigen::Index e = n * k + f;
      table.add({num(step), names[static_cast<std::size_t>(f)], num(n + 1), num(step), num(gmean(e)),
                 num(gsd(e)), num(glo(e)), num(ghi(e))});
    }
  }
  for (int n = 0; n < lines; ++n) {
    for (int t = 1; t <= step; ++t) {
      const Eigen::Index e = n * dim + (t - 1);
      table.add({num(step), "h", num(n + 1), num(t), num(pmean(e)), num(psd(e)), num(plo(e)), num(phi(e))});
    }
  }
}

}  // namespace

void add_panel_options(CLI::App* app, PanelArgs& args) {
  app->add_option("--panel", args.panel_json, "Panel JSON (as written by simulate)");
  app->add_option("--triangle", args.triangles, "Triangle CSV, one per line of business (repeatable)");
  app->add_flag("--cumulative", args.cumulative, "Triangle CSVs hold cumulative claims");
  app->add_flag("--loss-ratios", args.loss_ratios, "Divide claims by accident-year premium");
  app->add_flag("--no-premium", args.no_premium, "Triangle CSVs have no premium column");
}

void require_file(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) throw IoError("cannot read " + path.string());
}

void prepare_out(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

TrianglePanel load_panel(const PanelArgs& args, RunRecord& record) {
  if (args.panel_json.empty() == args.triangles.empty()) {
    throw InputError("give either --panel or one or more --triangle files");
  }
  TrianglePanel panel;
  if (!args.panel_json.empty()) {
    require_file(args.panel_json);
    record.input(args.panel_json);
    panel = panel_from_json(read_json_file(args.panel_json));
    if (args.cumulative) panel = to_incremental(panel);
    if (args.loss_ratios) panel = to_loss_ratios(panel);
  } else {
    std::vector<std::filesystem::path> paths;
    for (const auto& t : args.triangles) {
      require_file(t);
      record.input(t);
      paths.emplace_back(t);
    }
    IngestConfig config;
    config.kind = args.cumulative ? ClaimKind::cumulative : ClaimKind::incremental;
    config.premium_column = !args.no_premium;
    config.to_incremental = true;
    config.loss_ratios = args.loss_ratios;
    panel = evoglm::load_panel(paths, config);
  }
  panel.validate();
  return panel;
}

Json to_json(const PanelArgs& args) {
  return Json{{"panel", args.panel_json},
              {"triangles", args.triangles},
              {"cumulative", args.cumulative},
              {"loss_ratios", args.loss_ratios},
              {"no_premium", args.no_premium}};
}

void fill_gamma_prior(PriorSpec& prior, const TrianglePanel& panel, double power, double scale) {
  if (prior.line_count() != panel.lines()) {
    throw InputError("prior.lines: expected " + std::to_string(panel.lines()) + " entries, one per triangle");
  }
  const MeanStructure structure = prior.extended ? MeanStructure::hoerl_extended : MeanStructure::hoerl;
  for (int n = 0; n < panel.lines(); ++n) {
    auto& lp = prior.lines[static_cast<std::size_t>(n)];
    if (lp.gamma_mean.size() > 0) continue;
    if (prior.family == ObservationFamily::gaussian) {
      throw InputError("prior.lines[" + std::to_string(n) +
                       "].gamma_mean: required for the gaussian family (no static hand-off)");
    }
    const GlmFit fit = fit_line(panel, n, structure, power);
    const GammaPrior g = gamma_prior_from_fit(fit, structure, lp.h1_mean, scale);
    lp.gamma_mean = g.mean;
    lp.gamma_cov = g.cov;
  }
}

std::vector<std::pair<std::string, double>> named_params(const ModelParams& params, bool extended) {
  using F = ParameterCodec::Field;
  std::vector<F> fields{F::sigma2_a, F::sigma2_r, F::sigma2_s};
  if (extended) {
    fields.push_back(F::sigma2_b1);
    fields.push_back(F::sigma2_b2);
  }
  for (F f : {F::sigma2_h, F::lambda, F::phi, F::p}) fields.push_back(f);
  std::vector<std::pair<std::string, double>> out;
  for (int n = 0; n < params.line_count(); ++n) {
    for (F f : fields) {
      ParameterCodec::Slot slot{n, f, ParameterCodec::field_name(f) + "[" + std::to_string(n + 1) + "]"};
      out.emplace_back(slot.name, ParameterCodec::get(params, slot));
    }
  }
  ParameterCodec::Slot shared{-1, F::sigma2_h_tilde, "sigma2_h_tilde"};
  out.emplace_back(shared.name, ParameterCodec::get(params, shared));
  return out;
}

Json to_json(const KalmanConfig& c) {
  return Json{{"extended", c.extended},
              {"gamma_mean", vectors_json(c.gamma_mean)},
              {"gamma_cov", matrices_json(c.gamma_cov)},
              {"h1_mean", std::vector<double>(c.h1_mean.data(), c.h1_mean.data() + c.h1_mean.size())},
              {"h1_var", std::vector<double>(c.h1_var.data(), c.h1_var.data() + c.h1_var.size())},
              {"init", c.init == KalmanConfig::Init::closed_form ? "closed-form" : "simulation"},
              {"simulation_paths", c.simulation_paths},
              {"seed", c.seed},
              {"artificial_noise", c.artificial_noise},
              {"coupling", to_string(c.coupling)},
              {"covariance_form", c.form == CovarianceForm::joseph ? "joseph" : "standard"}};
}

KalmanConfig kalman_config_from_json(const Json& j) {
  KalmanConfig c;
  c.extended = j.at("extended").get<bool>();
  c.gamma_mean = vectors_from_json(j.at("gamma_mean"));
  c.gamma_cov = matrices_from_json(j.at("gamma_cov"));
  c.h1_mean = vector_from(j.at("h1_mean"));
  c.h1_var = vector_from(j.at("h1_var"));
  c.init = j.at("init").get<std::string>() == "simulation" ? KalmanConfig::Init::simulation
                                                            : KalmanConfig::Init::closed_form;
  c.simulation_paths = j.at("simulation_paths").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.artificial_noise = j.at("artificial_noise").get<double>();
  c.coupling = parse_coupling(j.at("coupling").get<std::string>());
  c.form = j.at("covariance_form").get<std::string>() == "joseph" ? CovarianceForm::joseph
                                                                  : CovarianceForm::standard;
  return c;
}

void save_bundle(const FitBundle& b, const std::filesystem::path& path) {
  Json j;
  j["kind"] = b.kind == FitBundle::Kind::particle ? "particle" : "kalman";
  j["panel"] = to_json(b.panel);
  if (b.kind == FitBundle::Kind::particle) {
    j["prior"] = to_json(b.prior);
    j["filter"] = {{"particles", b.pf.particles}, {"xi", b.pf.xi}, {"seed", b.pf.seed}, {"jitter", b.pf.jitter}};
  } else {
    j["params"] = to_json(b.params);
    j["kalman"] = to_json(b.kalman);
    j["log_scale"] = b.log_scale;
  }
  j["filtered"] = {{"extended", b.path.extended},
                   {"family", to_string(b.path.family)},
                   {"gamma", vectors_json(b.path.gamma)},
                   {"psi", vectors_json(b.path.psi)}};
  j["posterior_params"] = to_json(b.posterior);
  write_json_file(path, j);
}

FitBundle load_bundle(const std::filesystem::path& path) {
  require_file(path);
  const Json j = read_json_file(path);
  FitBundle b;
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind != "particle" && kind != "kalman") throw InputError("fit.kind: unknown kind " + kind);
    b.kind = kind == "particle" ? FitBundle::Kind::particle : FitBundle::Kind::kalman;
    b.panel = panel_from_json(j.at("panel"));
    if (b.kind == FitBundle::Kind::particle) {
      b.prior = prior_spec_from_json(j.at("prior"));
      const Json& f = j.at("filter");
      b.pf.particles = f.at("particles").get<int>();
      b.pf.xi = f.at("xi").get<double>();
      b.pf.seed = f.at("seed").get<std::uint64_t>();
      b.pf.jitter = f.at("jitter").get<double>();
    } else {
      b.params = model_params_from_json(j.at("params"));
      b.kalman = kalman_config_from_json(j.at("kalman"));
      b.log_scale = j.at("log_scale").get<bool>();
    }
    const Json& fp = j.at("filtered");
    b.path.extended = fp.at("extended").get<bool>();
    b.path.family = parse_family(fp.at("family").get<std::string>());
    b.path.gamma = vectors_from_json(fp.at("gamma"));
    b.path.psi = vectors_from_json(fp.at("psi"));
    b.posterior = model_params_from_json(j.at("posterior_params"));
  } catch (const Json::exception& e) {
    throw InputError(path.string() + ": malformed fit bundle (" + e.what() + ")");
  }
  return b;
}

CsvTable pf_factor_table(const PfResult& fit) {
  CsvTable table({"step", "factor", "line", "index", "mean", "sd", "q05", "q95"});
  const int lines = fit.model.panel->lines();
  const int dim = fit.model.panel->dim();
  for (const auto& s : fit.steps) {
    add_factor_rows(table, s.step, lines, dim, fit.model.extended, s.gamma.mean, s.gamma.sd, s.gamma.q05,
                    s.gamma.q95, s.psi.mean, s.psi.sd, s.psi.q05, s.psi.q95);
  }
  return table;
}

CsvTable kalman_factor_table(const KalmanResult& fit, int lines, int dim, bool extended) {
  CsvTable table({"step", "factor", "line", "index", "mean", "sd", "q05", "q95"});
  for (const auto& s : fit.steps) {
    const KalmanState& x = s.posterior;
    const Eigen::VectorXd gsd = x.gamma_cov.diagonal().cwiseMax(0.0).cwiseSqrt();
    const Eigen::VectorXd psd = x.psi_cov.diagonal().cwiseMax(0.0).cwiseSqrt();
    add_factor_rows(table, s.step, lines, dim, extended, x.gamma_mean, gsd, x.gamma_mean - kZ95 * gsd,
                    x.gamma_mean + kZ95 * gsd, x.psi_mean, psd, x.psi_mean - kZ95 * psd,
                    x.psi_mean + kZ95 * psd);
  }
  return table;
}

CsvTable tracking_csv(const std::vector<TrackingRow>& rows) {
  CsvTable table({"line", "i", "j", "observed", "fitted", "fitted_prev"});
  for (const auto& r : rows) {
    table.add({num(r.line), num(r.i), num(r.j), num(r.observed), num(r.fitted), num(r.fitted_prev)});
  }
  return table;
}

ResidualReport::ResidualReport()
    : by_year_({"source", "line", "dimension", "index", "value"}),
      heatmap_({"source", "line", "i", "j", "ratio"}),
      association_({"source", "basis", "line_a", "line_b", "n", "pearson", "pearson_p", "spearman", "spearman_p",
                    "kendall", "kendall_p"}) {}

void ResidualReport::add(const std::string& source, const TrianglePanel& panel,
                         const std::vector<Eigen::MatrixXd>& fitted,
                         const std::vector<Eigen::MatrixXd>& cell_residuals) {
  const int dim = panel.dim();
  std::vector<Eigen::VectorXd> calendar;
  for (int n = 0; n < panel.lines(); ++n) {
    const auto idx = static_cast<std::size_t>(n);
    const ResidualTables r = residuals_by_dimension(panel.line(n), fitted[idx]);
    const std::pair<const char*, const Eigen::VectorXd*> dims[] = {
        {"accident", &r.accident}, {"development", &r.development}, {"calendar", &r.calendar}};
    for (const auto& [name, v] : dims) {
      for (Eigen::Index k = 0; k < v->size(); ++k) {
        by_year_.add({source, num(n + 1), name, num(static_cast<int>(k) + 1), num((*v)(k))});
      }
    }
    calendar.push_back(r.calendar);
    const Eigen::MatrixXd heat = heatmap_table(panel.line(n), fitted[idx]);
    for (int i = 1; i <= dim; ++i) {
      for (int j = 1; j <= dim - i + 1; ++j) {
        if (panel.observed(n, i, j)) heatmap_.add({source, num(n + 1), num(i), num(j), num(heat(i - 1, j - 1))});
      }
    }
  }
  auto emit = [&](const char* basis, int a, int b, const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() < 3) return;
    const Association s = association(Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())),
                                      Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size())));
    association_.add({source, basis, num(a + 1), num(b + 1), num(s.n), num(s.pearson), num(s.pearson_p),
                      num(s.spearman), num(s.spearman_p), num(s.kendall), num(s.kendall_p)});
  };
  for (int a = 0; a < panel.lines(); ++a) {
    for (int b = a + 1; b < panel.lines(); ++b) {
      std::vector<double> x;
      std::vector<double> y;
      const auto& ca = calendar[static_cast<std::size_t>(a)];
      const auto& cb = calendar[static_cast<std::size_t>(b)];
      for (Eigen::Index t = 0; t < ca.size(); ++t) {
        if (std::isnan(ca(t)) || std::isnan(cb(t))) continue;
        x.push_back(ca(t));
        y.push_back(cb(t));
      }
      emit("calendar", a, b, x, y);
      x.clear();
      y.clear();
      const auto& ra = cell_residuals[static_cast<std::size_t>(a)];
      const auto& rb = cell_residuals[static_cast<std::size_t>(b)];
      for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) {
          if (std::isnan(ra(i, j)) || std::isnan(rb(i, j))) continue;
          x.push_back(ra(i, j));
          y.push_back(rb(i, j));
        }
      }
      emit("cell", a, b, x, y);
    }
  }
}

void ResidualReport::write(const std::filesystem::path& dir) const {
  by_year_.write(dir / "residuals_by_year.csv");
  heatmap_.write(dir / "heatmap.csv");
  association_.write(dir / "association.csv");
}

CsvTable risk_margin_table(const std::vector<std::string>& columns, const std::vector<double>& levels,
                           const std::vector<std::vector<double>>& margins, const std::vector<double>& benefit) {
  std::vector<std::string> header{"level"};
  header.insert(header.end(), columns.begin(), columns.end());
  header.emplace_back("diversification_pct");
  CsvTable table(header);
  for (std::size_t l = 0; l < levels.size(); ++l) {
    std::vector<std::string> row{num(levels[l])};
    for (double m : margins[l]) row.push_back(num(m));
    row.push_back(num(benefit[l]));
    table.add(row);
  }
  return table;
}

std::string level_label(double level) { return "var_" + num(std::round(level * 1e6) / 1e4); }

}  // namespace evoglm::cli
