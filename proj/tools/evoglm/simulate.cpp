#include <cmath>
#include <memory>

#include "common.hpp"
#include "evoglm/simulator.hpp"

namespace evoglm::cli {
namespace {

struct SimulateOptions {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_given = false;
  bool lower = false;
  std::string out;
};

int run_simulate(const SimulateOptions& o, const Args& args) {
  RunRecord record("simulate", args);
  SimConfig config = SimConfig::paper_default();
  if (!o.config.empty()) {
    require_file(o.config);
    record.input(o.config);
    config = sim_config_from_json(read_json_file(o.config));
  }
  if (o.seed_given) config.seed = o.seed;
  if (o.lower) config.lower = true;
  config.validate();
  const Json resolved = to_json(config);
  record.config(resolved);
  record.seed("simulation", config.seed);

  const std::filesystem::path out(o.out);
  prepare_out(out);
  const SimResult sim = simulate_panel(config);

  for (int n = 0; n < sim.panel.lines(); ++n) {
    write_triangle_csv(sim.panel.line(n), out / ("triangle_" + std::to_string(n + 1) + ".csv"));
  }
  write_json_file(out / "panel.json", to_json(sim.panel));
  write_json_file(out / "truth.json", to_json(sim.truth));
  write_json_file(out / "config.json", resolved);

  CsvTable factors({"line", "factor", "index", "value"});
  const auto names = gamma_factor_names(config.extended);
  for (int n = 0; n < config.line_count(); ++n) {
    const auto& rows = sim.truth.gamma[static_cast<std::size_t>(n)];
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t f = 0; f < names.size(); ++f) {
        factors.add({num(n + 1), names[f], num(static_cast<int>(i) + 1), num(rows[i](static_cast<Eigen::Index>(f)))});
      }
    }
    const Eigen::VectorXd& h = sim.truth.h[static_cast<std::size_t>(n)];
    for (Eigen::Index t = 0; t < h.size(); ++t) {
      factors.add({num(n + 1), "h", num(static_cast<int>(t) + 1), num(h(t))});
    }
  }
  factors.write(out / "truth_factors.csv");

  if (!sim.lower.empty()) {
    CsvTable lower({"line", "i", "j", "value"});
    for (std::size_t n = 0; n < sim.lower.size(); ++n) {
      const Eigen::MatrixXd& m = sim.lower[n];
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
          if (std::isnan(m(i, j))) continue;
          lower.add({num(static_cast<int>(n) + 1), num(static_cast<int>(i) + 1), num(static_cast<int>(j) + 1),
                     num(m(i, j))});
        }
      }
    }
    lower.write(out / "lower.csv");
  }
  record.finish(out);
  return 0;
}

}  // namespace

void add_simulate(CLI::App& app, const Args& args, Action& action) {
  auto o = std::make_shared<SimulateOptions>();
  CLI::App* sub = app.add_subcommand("simulate", "Simulate a panel of triangles with a truth record");
  sub->add_option("--config", o->config, "Simulation config JSON (default: the two-line study setting)");
  sub->add_option("--seed", o->seed, "Override the config seed")->each([o](const std::string&) { o->seed_given = true; });
  sub->add_flag("--lower", o->lower, "Also simulate the lower triangle");
  sub->add_option("--out", o->out, "Output directory")->required();
  sub->callback([o, args, &action] { action = [o, args] { return run_simulate(*o, args); }; });
}

}  // namespace evoglm::cli
