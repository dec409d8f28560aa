#include <iostream>
#include <memory>

#include "common.hpp"
#include "evoglm/error.hpp"
#include "evoglm/static_glm.hpp"

namespace evoglm::cli {
namespace {

struct FitPfOptions {
  PanelArgs panel;
  std::string prior;
  int particles = 1000;
  double xi = 0.98;
  std::uint64_t seed = 1;
  bool extended = false;
  bool anchor_h1 = false;
  double glm_power = 1.5;
  double glm_scale = 4.0;
  unsigned workers = 0;
  std::string out;
};

ModelParams posterior_mean_params(const PfResult& fit) {
  ModelParams params = fit.model.codec.base();
  const auto& slots = fit.model.codec.slots();
  const PfStep& last = fit.steps.back();
  for (std::size_t k = 0; k < slots.size(); ++k) {
    ParameterCodec::set(params, slots[k], last.params.mean(static_cast<Eigen::Index>(k)));
  }
  return params;
}

int run_fit_pf(const FitPfOptions& o, const Args& args) {
  RunRecord record("fit-pf", args);
  if (o.particles < 1) throw InputError("--particles: must be >= 1");
  if (!(o.xi > 0.0 && o.xi <= 1.0)) throw InputError("--xi: must be in (0, 1]");
  const TrianglePanel panel = load_panel(o.panel, record);
  require_file(o.prior);
  record.input(o.prior);
  PriorSpec prior = prior_spec_from_json(read_json_file(o.prior));
  if (o.extended) prior.extended = true;
  if (o.anchor_h1) prior.anchor_h1 = true;
  fill_gamma_prior(prior, panel, o.glm_power, o.glm_scale);
  prior.validate();

  PfConfig config;
  config.particles = o.particles;
  config.xi = o.xi;
  config.seed = o.seed;
  config.workers = o.workers;
  config.keep_paths = false;
  record.config({{"panel", to_json(o.panel)},
                 {"prior", to_json(prior)},
                 {"particles", config.particles},
                 {"xi", config.xi},
                 {"jitter", config.jitter}});
  record.seed("filter", config.seed);

  const std::filesystem::path out(o.out);
  prepare_out(out);
  const PfResult fit = run(panel, prior, config);
  for (const auto& w : fit.warnings) std::cerr << "warning: " << w << '\n';

  pf_factor_table(fit).write(out / "factors.csv");
  CsvTable params({"step", "name", "mean", "sd", "q05", "q95"});
  const auto names = fit.param_names();
  for (const auto& s : fit.steps) {
    for (std::size_t k = 0; k < names.size(); ++k) {
      const auto e = static_cast<Eigen::Index>(k);
      params.add({num(s.step), names[k], num(s.params.mean(e)), num(s.params.sd(e)), num(s.params.q05(e)),
                  num(s.params.q95(e))});
    }
  }
  params.write(out / "params.csv");
  CsvTable ess({"step", "ess", "ess_lookahead", "zero_lookahead"});
  for (const auto& s : fit.steps) ess.add({num(s.step), num(s.ess), num(s.ess_lookahead), num(s.zero_lookahead)});
  ess.write(out / "ess.csv");

  FitBundle bundle;
  bundle.kind = FitBundle::Kind::particle;
  bundle.panel = panel;
  bundle.prior = prior;
  bundle.pf = config;
  bundle.path = filtered_path(fit);
  bundle.posterior = posterior_mean_params(fit);
  tracking_csv(tracking_table(panel, bundle.path)).write(out / "tracking.csv");
  save_bundle(bundle, out / "fit.json");
  record.finish(out);
  return 0;
}

struct FitKfOptions {
  PanelArgs panel;
  std::string params;
  std::string prior;
  bool mle = false;
  double artificial_noise = -1.0;
  bool log_transform = false;
  bool extended = false;
  std::string coupling = "exact";
  std::string form = "standard";
  std::string init = "closed-form";
  int simulation_paths = 10000;
  std::uint64_t seed = 1;
  double glm_scale = 4.0;
  std::string out;
};

int run_fit_kf(const FitKfOptions& o, const Args& args) {
  RunRecord record("fit-kf", args);
  const TrianglePanel raw = load_panel(o.panel, record);
  const TrianglePanel panel = o.log_transform ? log_claims(raw) : raw;
  require_file(o.params);
  record.input(o.params);
  const ModelParams start = model_params_from_json(read_json_file(o.params));
  if (start.line_count() != panel.lines()) {
    throw InputError("params.lines: expected " + std::to_string(panel.lines()) + " entries, one per triangle");
  }

  KalmanConfig config;
  config.extended = o.extended;
  config.coupling = parse_coupling(o.coupling);
  if (o.form != "standard" && o.form != "joseph") throw InputError("--covariance-form: standard or joseph");
  config.form = o.form == "joseph" ? CovarianceForm::joseph : CovarianceForm::standard;
  if (o.init != "closed-form" && o.init != "simulation") throw InputError("--init: closed-form or simulation");
  config.init = o.init == "simulation" ? KalmanConfig::Init::simulation : KalmanConfig::Init::closed_form;
  config.simulation_paths = o.simulation_paths;
  config.seed = o.seed;
  config.artificial_noise = o.artificial_noise;
  const int lines = panel.lines();
  config.h1_mean = Eigen::VectorXd::Zero(lines);
  config.h1_var = Eigen::VectorXd::Zero(lines);
  if (!o.prior.empty()) {
    require_file(o.prior);
    record.input(o.prior);
    bool has_gamma = false;
    const PriorSpec prior = prior_spec_from_json(read_json_file(o.prior), &has_gamma);
    config.extended = config.extended || prior.extended;
    if (!has_gamma) throw InputError("prior.lines: gamma_mean is required by fit-kf");
    if (prior.line_count() != lines) throw InputError("prior.lines: expected one entry per triangle");
    for (int n = 0; n < lines; ++n) {
      const auto& lp = prior.lines[static_cast<std::size_t>(n)];
      config.gamma_mean.push_back(lp.gamma_mean);
      config.gamma_cov.push_back(lp.gamma_cov);
      config.h1_mean(n) = lp.h1_mean;
      config.h1_var(n) = lp.h1_var;
    }
  } else if (o.log_transform) {
    const MeanStructure structure = config.extended ? MeanStructure::hoerl_extended : MeanStructure::hoerl;
    for (int n = 0; n < lines; ++n) {
      const GammaPrior g = gamma_prior_from_fit(fit_log_ols(raw, n, structure), structure, 0.0, o.glm_scale);
      config.gamma_mean.push_back(g.mean);
      config.gamma_cov.push_back(g.cov);
    }
  } else {
    throw InputError("--prior: required unless --log-transform supplies the static hand-off");
  }
  config.validate(lines);
  record.config({{"panel", to_json(o.panel)},
                 {"params", to_json(start)},
                 {"kalman", to_json(config)},
                 {"mle", o.mle},
                 {"log_transform", o.log_transform}});
  record.seed("kalman-init", config.seed);

  const std::filesystem::path out(o.out);
  prepare_out(out);
  ModelParams params = start;
  if (o.mle) {
    const MleResult m = fit_mle(panel, start, config);
    params = m.params;
    const auto before = named_params(start, config.extended);
    const auto after = named_params(params, config.extended);
    CsvTable table({"name", "start", "estimate"});
    for (std::size_t k = 0; k < after.size(); ++k) {
      table.add({after[k].first, num(before[k].second), num(after[k].second)});
    }
    table.write(out / "mle.csv");
    CsvTable summary({"metric", "value"});
    summary.add({"start_log_likelihood", num(m.start_log_likelihood)});
    summary.add({"log_likelihood", num(m.log_likelihood)});
    summary.add({"gradient_norm", num(m.gradient_norm)});
    summary.add({"iterations", num(m.iterations)});
    summary.add({"converged", m.converged ? "true" : "false"});
    summary.write(out / "mle_summary.csv");
    if (!m.converged) std::cerr << "warning: likelihood maximization did not converge\n";
  }
  const KalmanResult fit = run(panel, params, config);
  for (const auto& s : fit.steps) {
    if (s.min_eigenvalue < 0.0) {
      std::cerr << "warning: step " << s.step << " posterior covariance has eigenvalue " << s.min_eigenvalue << '\n';
    }
  }

  kalman_factor_table(fit, lines, panel.dim(), config.extended).write(out / "factors.csv");
  CsvTable table({"name", "value"});
  for (const auto& [name, value] : named_params(params, config.extended)) table.add({name, num(value)});
  table.write(out / "params.csv");
  CsvTable loglik({"step", "log_likelihood", "cumulative"});
  double total = 0.0;
  for (const auto& s : fit.steps) {
    total += s.log_likelihood;
    loglik.add({num(s.step), num(s.log_likelihood), num(total)});
  }
  loglik.write(out / "loglik.csv");

  FitBundle bundle;
  bundle.kind = FitBundle::Kind::kalman;
  bundle.panel = panel;
  bundle.params = params;
  bundle.kalman = config;
  bundle.kalman.artificial_noise = fit.artificial_noise;
  bundle.log_scale = o.log_transform;
  bundle.path = filtered_path(fit, config.extended);
  bundle.posterior = params;
  tracking_csv(tracking_table(panel, bundle.path)).write(out / "tracking.csv");
  save_bundle(bundle, out / "fit.json");
  record.finish(out);
  return 0;
}

}  // namespace

void add_fit_pf(CLI::App& app, const Args& args, Action& action) {
  auto o = std::make_shared<FitPfOptions>();
  CLI::App* sub = app.add_subcommand("fit-pf", "Particle filter with parameter learning");
  add_panel_options(sub, o->panel);
  sub->add_option("--prior", o->prior, "Prior JSON")->required();
  sub->add_option("--particles", o->particles, "Number of particles M")->capture_default_str();
  sub->add_option("--xi", o->xi, "Shrinkage coefficient in (0, 1]")->capture_default_str();
  sub->add_option("--seed", o->seed, "Filter seed")->capture_default_str();
  sub->add_flag("--extended-hoerl", o->extended, "Add the j=1 and j=2 indicator factors");
  sub->add_flag("--anchor-h1", o->anchor_h1, "Fix h_1 at zero");
  sub->add_option("--glm-power", o->glm_power, "Tweedie power of the static hand-off fit")->capture_default_str();
  sub->add_option("--glm-scale", o->glm_scale, "Covariance scale of the static hand-off")->capture_default_str();
  sub->add_option("--workers", o->workers, "Worker threads (0 = available parallelism)");
  sub->add_option("--out", o->out, "Output directory")->required();
  sub->callback([o, args, &action] { action = [o, args] { return run_fit_pf(*o, args); }; });
}

void add_fit_kf(CLI::App& app, const Args& args, Action& action) {
  auto o = std::make_shared<FitKfOptions>();
  CLI::App* sub = app.add_subcommand("fit-kf", "Dual Kalman filter for the Gaussian model");
  add_panel_options(sub, o->panel);
  sub->add_option("--params", o->params, "ModelParams JSON (start values with --mle)")->required();
  sub->add_option("--prior", o->prior, "Prior JSON supplying gamma_mean/gamma_cov and h1 per line");
  sub->add_flag("--mle", o->mle, "Maximize the likelihood over the variances and loadings");
  sub->add_option("--artificial-noise", o->artificial_noise,
                  "Calendar-block noise per step (negative: 1e-6 of the prior scale)")
      ->capture_default_str();
  sub->add_flag("--log-transform", o->log_transform, "Filter log claims");
  sub->add_flag("--extended-hoerl", o->extended, "Add the j=1 and j=2 indicator factors");
  sub->add_option("--coupling", o->coupling, "exact or literal")->capture_default_str();
  sub->add_option("--covariance-form", o->form, "standard or joseph")->capture_default_str();
  sub->add_option("--init", o->init, "closed-form or simulation")->capture_default_str();
  sub->add_option("--simulation-paths", o->simulation_paths, "Paths for --init simulation")->capture_default_str();
  sub->add_option("--seed", o->seed, "Seed for --init simulation")->capture_default_str();
  sub->add_option("--glm-scale", o->glm_scale, "Covariance scale of the static hand-off")->capture_default_str();
  sub->add_option("--out", o->out, "Output directory")->required();
  sub->callback([o, args, &action] { action = [o, args] { return run_fit_kf(*o, args); }; });
}

}  // namespace evoglm::cli
