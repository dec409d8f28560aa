#include <memory>

#include "common.hpp"
#include "evoglm/error.hpp"
#include "evoglm/forecaster.hpp"

namespace evoglm::cli {
namespace {

struct ForecastOptions {
  std::string fit;
  int draws = 100000;
  std::vector<double> levels{0.75, 0.95};
  std::uint64_t seed = 2;
  unsigned workers = 0;
  std::string out;
};

ReserveDistribution simulate_reserves(const FitBundle& bundle, const ForecastConfig& config) {
  if (bundle.kind == FitBundle::Kind::particle) {
    PfConfig pf = bundle.pf;
    pf.keep_paths = true;
    pf.workers = config.workers;
    const PfResult fit = run(bundle.panel, bundle.prior, pf);
    return forecast(particle_sampler(fit), bundle.panel, config);
  }
  const KalmanResult fit = run(bundle.panel, bundle.params, bundle.kalman);
  return forecast(kalman_sampler(fit, bundle.params, bundle.kalman.extended), bundle.panel, config);
}

int run_forecast(const ForecastOptions& o, const Args& args) {
  RunRecord record("forecast", args);
  if (o.draws < 1) throw InputError("--draws: must be >= 1");
  for (double l : o.levels) {
    if (!(l > 0.0 && l < 1.0)) throw InputError("--levels: every level must be in (0, 1)");
  }
  const std::filesystem::path bundle_path = std::filesystem::path(o.fit) / "fit.json";
  const FitBundle bundle = load_bundle(bundle_path);
  record.input(bundle_path);

  ForecastConfig config;
  config.draws = o.draws;
  config.seed = o.seed;
  config.workers = o.workers;
  config.log_scale = bundle.log_scale;
  record.config({{"draws", config.draws}, {"levels", o.levels}, {"log_scale", config.log_scale}});
  record.seed("forecast", config.seed);
  if (bundle.kind == FitBundle::Kind::particle) record.seed("filter", bundle.pf.seed);

  const std::filesystem::path out(o.out);
  prepare_out(out);
  const ReserveDistribution dist = simulate_reserves(bundle, config);
  const ForecastSummary summary = summarize(dist, o.levels);

  std::vector<std::string> header{"column", "mean", "sd"};
  for (double l : o.levels) header.push_back(level_label(l));
  CsvTable table(header);
  std::vector<std::vector<double>> margins(o.levels.size());
  for (std::size_t c = 0; c < summary.columns.size(); ++c) {
    const SampleStats& s = summary.totals[c];
    std::vector<std::string> row{summary.columns[c], num(s.mean), num(s.sd)};
    for (std::size_t l = 0; l < o.levels.size(); ++l) {
      row.push_back(num(s.var[l]));
      margins[l].push_back(s.margin[l]);
    }
    table.add(row);
  }
  table.write(out / "summary.csv");
  risk_margin_table(summary.columns, o.levels, margins, summary.diversification).write(out / "risk_margins.csv");

  CsvTable by_ay({"column", "i", "mean", "sd"});
  for (std::size_t c = 0; c < summary.columns.size(); ++c) {
    for (Eigen::Index i = 0; i < summary.ay_mean[c].size(); ++i) {
      by_ay.add({summary.columns[c], num(static_cast<int>(i) + 1), num(summary.ay_mean[c](i)), num(summary.ay_sd[c](i))});
    }
  }
  by_ay.write(out / "reserves_by_ay.csv");

  CsvTable density({"column", "x", "density"});
  for (std::size_t c = 0; c < summary.columns.size(); ++c) {
    const Eigen::VectorXd samples = c < dist.line_names.size()
                                        ? Eigen::VectorXd(dist.line_totals.col(static_cast<Eigen::Index>(c)))
                                        : dist.aggregate;
    for (const auto& p : kernel_density(samples)) density.add({summary.columns[c], num(p.x), num(p.density)});
  }
  density.write(out / "density.csv");
  record.finish(out);
  return 0;
}

}  // namespace

void add_forecast(CLI::App& app, const Args& args, Action& action) {
  auto o = std::make_shared<ForecastOptions>();
  CLI::App* sub = app.add_subcommand("forecast", "Reserve distribution, VaR and risk margins from a fit");
  sub->add_option("--fit", o->fit, "Directory written by fit-pf or fit-kf")->required();
  sub->add_option("--draws", o->draws, "Posterior predictive draws S")->capture_default_str();
  sub->add_option("--levels", o->levels, "VaR levels, comma separated")->delimiter(',')->capture_default_str();
  sub->add_option("--seed", o->seed, "Forecast seed")->capture_default_str();
  sub->add_option("--workers", o->workers, "Worker threads (0 = available parallelism)");
  sub->add_option("--out", o->out, "Output directory")->required();
  sub->callback([o, args, &action] { action = [o, args] { return run_forecast(*o, args); }; });
}

}  // namespace evoglm::cli
