#include <iostream>
#include <map>
#include <memory>

#include "common.hpp"
#include "evoglm/error.hpp"
#include "evoglm/forecaster.hpp"

namespace evoglm::cli {
namespace {

struct ReproduceOptions {
  std::string study;
  std::string fixtures = EVOGLM_FIXTURE_DIR;
  std::string configs = EVOGLM_CONFIG_DIR;
  int particles = 10000;
  int draws = 100000;
  std::uint64_t seed = 1;
  unsigned workers = 0;
  std::string out;
};

int risk_margins(const ReproduceOptions& o, RunRecord& record, const std::filesystem::path& out) {
  const std::filesystem::path input = std::filesystem::path(o.fixtures) / "risk_margin_inputs.json";
  require_file(input);
  record.input(input);
  const Json j = read_json_file(input);
  std::vector<std::string> columns;
  std::vector<double> mean;
  std::vector<double> sd;
  try {
    columns = j.at("lines").get<std::vector<std::string>>();
    mean = j.at("mean").get<std::vector<double>>();
    sd = j.at("sd").get<std::vector<double>>();
  } catch (const Json::exception& e) {
    throw InputError(input.string() + ": " + e.what());
  }
  if (columns.size() < 2 || mean.size() != columns.size() || sd.size() != columns.size()) {
    throw InputError(input.string() + ": lines, mean and sd must align (lines then the aggregate)");
  }
  std::vector<double> levels;
  std::vector<std::vector<double>> margins;
  std::vector<double> benefit;
  for (const auto& [label, vars] : j.at("var").items()) {
    const auto v = vars.get<std::vector<double>>();
    if (v.size() != columns.size()) throw InputError(input.string() + ": var." + label + " length mismatch");
    levels.push_back(std::stod(label));
    std::vector<double> m;
    for (std::size_t c = 0; c < columns.size(); ++c) m.push_back(risk_margin(mean[c], sd[c], v[c]));
    benefit.push_back(diversification_benefit(std::vector<double>(m.begin(), m.end() - 1), m.back()));
    margins.push_back(m);
  }
  const CsvTable table = risk_margin_table(columns, levels, margins, benefit);
  table.write(out / "risk_margins.csv");
  std::cout << table.str();
  return 0;
}

std::string path_arg(const std::filesystem::path& p) { return std::filesystem::absolute(p).lexically_normal().string(); }

int chain(const std::vector<Args>& runs) {
  for (const auto& run : runs) {
    std::cerr << "evoglm";
    for (const auto& a : run) std::cerr << ' ' << a;
    std::cerr << '\n';
    const int status = dispatch(run);
    if (status != 0) return status;
  }
  return 0;
}

int run_reproduce(const ReproduceOptions& o, const Args& args) {
  RunRecord record("reproduce", args);
  if (o.study != "risk-margins" && o.study != "simulation" && o.study != "real-data") {
    throw InputError("--study: one of risk-margins, simulation, real-data");
  }
  record.config({{"study", o.study}, {"particles", o.particles}, {"draws", o.draws}});
  record.seed("study", o.seed);
  const std::filesystem::path out(o.out);
  prepare_out(out);

  int status = 0;
  const std::string seed = std::to_string(o.seed);
  const std::string particles = std::to_string(o.particles);
  const std::string workers = std::to_string(o.workers);
  const std::filesystem::path configs(o.configs);
  const std::filesystem::path fixtures(o.fixtures);
  if (o.study == "risk-margins") {
    status = risk_margins(o, record, out);
  } else if (o.study == "simulation") {
    const std::string sim = path_arg(out / "simulate");
    const std::string fit = path_arg(out / "fit");
    status = chain({
        {"simulate", "--config", path_arg(configs / "sim_paper.json"), "--seed", seed, "--out", sim},
        {"fit-pf", "--panel", sim + "/panel.json", "--prior", path_arg(configs / "prior_simulation.json"),
         "--particles", particles, "--seed", seed, "--workers", workers, "--out", fit},
        {"diagnose", "--fit", fit, "--truth", sim + "/truth.json", "--out", path_arg(out / "diagnose")},
    });
  } else {
    const Args panel{"--triangle", path_arg(fixtures / "ab_excl_di.csv"), "--triangle",
                     path_arg(fixtures / "ab_di_only.csv"), "--cumulative", "--loss-ratios"};
    Args explore{"explore"};
    explore.insert(explore.end(), panel.begin(), panel.end());
    explore.insert(explore.end(), {"--structure", "hoerl_extended", "--out", path_arg(out / "explore")});
    Args fit_pf{"fit-pf"};
    fit_pf.insert(fit_pf.end(), panel.begin(), panel.end());
    const std::string fit = path_arg(out / "fit");
    fit_pf.insert(fit_pf.end(), {"--prior", path_arg(configs / "prior_ab.json"), "--extended-hoerl", "--particles",
                                 particles, "--seed", seed, "--workers", workers, "--out", fit});
    status = chain({
        explore,
        fit_pf,
        {"forecast", "--fit", fit, "--draws", std::to_string(o.draws), "--seed", std::to_string(o.seed + 1),
         "--workers", workers, "--out", path_arg(out / "forecast")},
        {"diagnose", "--fit", fit, "--out", path_arg(out / "diagnose")},
    });
  }
  if (status == 0) record.finish(out);
  return status;
}

int run_replay(const std::string& manifest_path, const std::string& out_arg) {
  require_file(manifest_path);
  const Json manifest = read_json_file(manifest_path);
  Args argv;
  std::string cwd;
  try {
    argv = manifest.at("argv").get<Args>();
    cwd = manifest.at("cwd").get<std::string>();
  } catch (const Json::exception& e) {
    throw InputError(manifest_path + ": not a run manifest (" + e.what() + ")");
  }
  const std::filesystem::path out = std::filesystem::absolute(out_arg);
  bool replaced = false;
  for (std::size_t k = 0; k < argv.size(); ++k) {
    if (argv[k] == "--out" && k + 1 < argv.size()) {
      argv[k + 1] = out.string();
      replaced = true;
    } else if (argv[k].rfind("--out=", 0) == 0) {
      argv[k] = "--out=" + out.string();
      replaced = true;
    }
  }
  if (!replaced) throw InputError(manifest_path + ": recorded command has no --out");

  const std::filesystem::path here = std::filesystem::current_path();
  std::error_code ec;
  if (std::filesystem::is_directory(cwd, ec)) std::filesystem::current_path(cwd);
  if (manifest.contains("inputs")) {
    for (const auto& in : manifest.at("inputs")) {
      const std::string p = in.at("path").get<std::string>();
      if (!std::filesystem::is_regular_file(p, ec) || sha256_file(p) != in.at("sha256").get<std::string>()) {
        std::cerr << "warning: input " << p << " no longer matches its recorded digest\n";
      }
    }
  }
  const int status = dispatch(argv);
  std::filesystem::current_path(here);
  if (status != 0) return status;

  std::map<std::string, std::string> expected;
  for (const auto& o : manifest.at("outputs")) expected[o.at("path").get<std::string>()] = o.at("sha256").get<std::string>();
  std::map<std::string, std::string> actual;
  for (const auto& [p, d] : output_digests(out)) actual[p] = d;
  int mismatches = 0;
  for (const auto& [p, d] : expected) {
    const auto it = actual.find(p);
    if (it == actual.end()) {
      std::cerr << "missing: " << p << '\n';
      ++mismatches;
    } else if (it->second != d) {
      std::cerr << "differs: " << p << '\n';
      ++mismatches;
    }
  }
  for (const auto& [p, d] : actual) {
    if (!expected.count(p)) {
      std::cerr << "unexpected: " << p << '\n';
      ++mismatches;
    }
  }
  std::cout << (mismatches == 0 ? "identical" : "mismatch") << ": " << expected.size() << " recorded outputs, "
            << mismatches << " differences\n";
  return mismatches == 0 ? 0 : 1;
}

}  // namespace

void add_reproduce(CLI::App& app, const Args& args, Action& action) {
  auto o = std::make_shared<ReproduceOptions>();
  CLI::App* sub = app.add_subcommand("reproduce", "Run one of the end-to-end studies");
  sub->add_option("--study", o->study, "risk-margins, simulation or real-data")->required();
  sub->add_option("--fixtures", o->fixtures, "Fixture directory")->capture_default_str();
  sub->add_option("--configs", o->configs, "Config directory")->capture_default_str();
  sub->add_option("--particles", o->particles, "Particles for the filter runs")->capture_default_str();
  sub->add_option("--draws", o->draws, "Forecast draws")->capture_default_str();
  sub->add_option("--seed", o->seed, "Study seed")->capture_default_str();
  sub->add_option("--workers", o->workers, "Worker threads (0 = available parallelism)");
  sub->add_option("--out", o->out, "Output directory")->required();
  sub->callback([o, args, &action] { action = [o, args] { return run_reproduce(*o, args); }; });
}

void add_replay(CLI::App& app, const Args& /*args*/, Action& action) {
  auto manifest = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  CLI::App* sub = app.add_subcommand("replay", "Re-run a manifest and compare output digests");
  sub->add_option("--manifest", *manifest, "manifest.json of an earlier run")->required();
  sub->add_option("--out", *out, "Output directory for the re-run")->required();
  sub->callback([manifest, out, &action] { action = [manifest, out] { return run_replay(*manifest, *out); }; });
}

}  // namespace evoglm::cli
