#include "evoglm/serialization.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>

#include "evoglm/error.hpp"
#include "format.hpp"

namespace evoglm {
namespace {

std::string join(const std::string& ctx, const std::string& key) {
  return ctx.empty() ? key : ctx + "." + key;
}

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw InputError(where + ": " + what);
}

void require_object(const Json& j, const std::string& ctx) {
  if (!j.is_object()) fail(ctx.empty() ? "document" : ctx, "expected an object");
}

void allow_only(const Json& j, const std::string& ctx, std::initializer_list<const char*> keys) {
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; })) {
      fail(join(ctx, key), "unknown field");
    }
  }
}

double number(const Json& j, const std::string& key, const std::string& ctx,
              std::optional<double> fallback = std::nullopt) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    fail(join(ctx, key), "missing");
  }
  const Json& v = j.at(key);
  if (!v.is_number()) fail(join(ctx, key), "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(join(ctx, key), "must be finite");
  return d;
}

bool flag(const Json& j, const std::string& key, const std::string& ctx, bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) fail(join(ctx, key), "expected true or false");
  return j.at(key).get<bool>();
}

std::string text(const Json& j, const std::string& key, const std::string& ctx, const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_string()) fail(join(ctx, key), "expected a string");
  return j.at(key).get<std::string>();
}

Eigen::VectorXd vector_of(const Json& v, const std::string& where) {
  if (!v.is_array()) fail(where, "expected an array of numbers");
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!v[k].is_number()) fail(where + "[" + std::to_string(k) + "]", "expected a number");
    out(static_cast<Eigen::Index>(k)) = v[k].get<double>();
  }
  return out;
}

Eigen::MatrixXd matrix_of(const Json& v, const std::string& where) {
  if (!v.is_array()) fail(where, "expected an array of rows");
  const auto rows = static_cast<Eigen::Index>(v.size());
  Eigen::MatrixXd out(rows, rows);
  for (std::size_t r = 0; r < v.size(); ++r) {
    const Eigen::VectorXd row = vector_of(v[r], where + "[" + std::to_string(r) + "]");
    if (row.size() != rows) fail(where, "expected a square matrix");
    out.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return out;
}

Json json_of(const Eigen::VectorXd& v) {
  return Json(std::vector<double>(v.data(), v.data() + v.size()));
}

Json json_of(const Eigen::MatrixXd& m) {
  Json out = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(json_of(Eigen::VectorXd(m.row(r).transpose())));
  return out;
}

const Json& array_field(const Json& j, const std::string& key, const std::string& ctx) {
  if (!j.contains(key)) fail(join(ctx, key), "missing");
  if (!j.at(key).is_array()) fail(join(ctx, key), "expected an array");
  return j.at(key);
}

Json to_json(const ComponentPrior& c) {
  if (c.is_fixed()) return c.a;
  return Json{{"dist", to_string(c.dist)}, {"params", {c.a, c.b}}};
}

ComponentPrior component_from_json(const Json& j, const std::string& where) {
  if (j.is_number()) return ComponentPrior::fixed(j.get<double>());
  if (!j.is_object()) fail(where, "expected a number or {dist, params}");
  allow_only(j, where, {"dist", "params", "value"});
  ComponentPrior c;
  try {
    c.dist = parse_dist(text(j, "dist", where, "fixed"));
  } catch (const InputError& e) {
    fail(join(where, "dist"), e.what());
  }
  if (c.is_fixed()) {
    c.a = number(j, "value", where);
    return c;
  }
  const Eigen::VectorXd p = vector_of(array_field(j, "params", where), join(where, "params"));
  if (p.size() != 2) fail(join(where, "params"), "expected two numbers");
  c.a = p(0);
  c.b = p(1);
  if (c.dist == ComponentPrior::Dist::uniform && !(c.b > c.a)) fail(where, "uniform needs lo < hi");
  if (c.dist != ComponentPrior::Dist::uniform && !(c.b > 0.0)) fail(where, "sd must be positive");
  return c;
}

}  // namespace

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InputError(path.string() + ": malformed JSON (" + e.what() + ")");
  }
}

void write_json_file(const std::filesystem::path& path, const Json& value) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << value.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

Json to_json(const ModelParams& params) {
  Json lines = Json::array();
  for (const auto& l : params.lines) {
    lines.push_back({{"sigma2_a", l.sigma2_a},   {"sigma2_r", l.sigma2_r}, {"sigma2_s", l.sigma2_s},
                     {"sigma2_b1", l.sigma2_b1}, {"sigma2_b2", l.sigma2_b2}, {"sigma2_h", l.sigma2_h},
                     {"lambda", l.lambda},       {"phi", l.phi},           {"p", l.p}});
  }
  return Json{{"lines", lines}, {"sigma2_h_tilde", params.sigma2_h_tilde}};
}

ModelParams model_params_from_json(const Json& j) {
  require_object(j, "params");
  allow_only(j, "params", {"lines", "sigma2_h_tilde"});
  ModelParams p;
  const Json& lines = array_field(j, "lines", "params");
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const std::string ctx = "params.lines[" + std::to_string(n) + "]";
    const Json& lj = lines[n];
    require_object(lj, ctx);
    allow_only(lj, ctx, {"sigma2_a", "sigma2_r", "sigma2_s", "sigma2_b1", "sigma2_b2", "sigma2_h", "lambda",
                         "phi", "p"});
    LineParams l;
    l.sigma2_a = number(lj, "sigma2_a", ctx);
    l.sigma2_r = number(lj, "sigma2_r", ctx);
    l.sigma2_s = number(lj, "sigma2_s", ctx);
    l.sigma2_b1 = number(lj, "sigma2_b1", ctx, 0.0);
    l.sigma2_b2 = number(lj, "sigma2_b2", ctx, 0.0);
    l.sigma2_h = number(lj, "sigma2_h", ctx);
    l.lambda = number(lj, "lambda", ctx, 0.0);
    l.phi = number(lj, "phi", ctx);
    l.p = number(lj, "p", ctx, 0.0);
    for (const char* key : {"sigma2_a", "sigma2_r", "sigma2_s", "sigma2_b1", "sigma2_b2", "sigma2_h"}) {
      if (lj.contains(key) && lj.at(key).get<double>() < 0.0) fail(join(ctx, key), "variance must be >= 0");
    }
    if (!(l.phi > 0.0)) fail(join(ctx, "phi"), "must be > 0");
    if (!(l.p == 0.0 || (l.p >= 1.0 && l.p <= 2.0))) fail(join(ctx, "p"), "must be 0 or in [1, 2]");
    p.lines.push_back(l);
  }
  if (p.lines.empty()) fail("params.lines", "at least one line required");
  p.sigma2_h_tilde = number(j, "sigma2_h_tilde", "params", 0.0);
  if (p.sigma2_h_tilde < 0.0) fail("params.sigma2_h_tilde", "variance must be >= 0");
  return p;
}

Json to_json(const FactorState& state) {
  Json gamma = Json::array();
  Json psi = Json::array();
  for (const auto& g : state.gamma) gamma.push_back(json_of(g));
  for (const auto& h : state.psi) psi.push_back(json_of(h));
  return Json{{"extended", state.extended}, {"gamma", gamma}, {"psi", psi}};
}

FactorState factor_state_from_json(const Json& j) {
  require_object(j, "state");
  allow_only(j, "state", {"extended", "gamma", "psi"});
  FactorState s;
  s.extended = flag(j, "extended", "state", false);
  const Json& gamma = array_field(j, "gamma", "state");
  const Json& psi = array_field(j, "psi", "state");
  for (std::size_t n = 0; n < gamma.size(); ++n) {
    s.gamma.push_back(vector_of(gamma[n], "state.gamma[" + std::to_string(n) + "]"));
  }
  for (std::size_t n = 0; n < psi.size(); ++n) {
    s.psi.push_back(vector_of(psi[n], "state.psi[" + std::to_string(n) + "]"));
  }
  if (!s.psi.empty()) {
    try {
      s.validate(static_cast<int>(s.psi.front().size()));
    } catch (const InputError& e) {
      fail("state", e.what());
    }
  }
  return s;
}

Json to_json(const PriorSpec& prior) {
  Json lines = Json::array();
  for (const auto& lp : prior.lines) {
    Json lj{{"sigma2_a", to_json(lp.sigma2_a)}, {"sigma2_r", to_json(lp.sigma2_r)},
            {"sigma2_s", to_json(lp.sigma2_s)}, {"sigma2_h", to_json(lp.sigma2_h)},
            {"lambda", to_json(lp.lambda)},     {"phi", to_json(lp.phi)},
            {"p", to_json(lp.p)},               {"h1_mean", lp.h1_mean},
            {"h1_var", lp.h1_var}};
    if (prior.extended) {
      lj["sigma2_b1"] = to_json(lp.sigma2_b1);
      lj["sigma2_b2"] = to_json(lp.sigma2_b2);
    }
    if (lp.gamma_mean.size() > 0) {
      lj["gamma_mean"] = json_of(lp.gamma_mean);
      lj["gamma_cov"] = json_of(lp.gamma_cov);
    }
    lines.push_back(lj);
  }
  return Json{{"family", to_string(prior.family)},
              {"extended", prior.extended},
              {"anchor_h1", prior.anchor_h1},
              {"sigma2_h_tilde", to_json(prior.sigma2_h_tilde)},
              {"lines", lines}};
}

PriorSpec prior_spec_from_json(const Json& j, bool* has_gamma_prior) {
  require_object(j, "prior");
  allow_only(j, "prior", {"family", "extended", "anchor_h1", "sigma2_h_tilde", "lines"});
  PriorSpec prior;
  try {
    prior.family = parse_family(text(j, "family", "prior", "tweedie"));
  } catch (const InputError& e) {
    fail("prior.family", e.what());
  }
  prior.extended = flag(j, "extended", "prior", false);
  prior.anchor_h1 = flag(j, "anchor_h1", "prior", false);
  prior.sigma2_h_tilde =
      j.contains("sigma2_h_tilde") ? component_from_json(j.at("sigma2_h_tilde"), "prior.sigma2_h_tilde")
                                   : ComponentPrior::fixed(0.0);
  const int k = gamma_block_size(prior.extended);
  bool all_gamma = true;
  const Json& lines = array_field(j, "lines", "prior");
  if (lines.empty()) fail("prior.lines", "at least one line required");
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const std::string ctx = "prior.lines[" + std::to_string(n) + "]";
    const Json& lj = lines[n];
    require_object(lj, ctx);
    allow_only(lj, ctx, {"sigma2_a", "sigma2_r", "sigma2_s", "sigma2_b1", "sigma2_b2", "sigma2_h", "lambda",
                         "phi", "p", "gamma_mean", "gamma_cov", "gamma_sd", "h1_mean", "h1_var"});
    LinePrior lp;
    auto comp = [&](const char* key, ComponentPrior fallback) {
      return lj.contains(key) ? component_from_json(lj.at(key), join(ctx, key)) : fallback;
    };
    lp.sigma2_a = comp("sigma2_a", ComponentPrior::fixed(0.0));
    lp.sigma2_r = comp("sigma2_r", ComponentPrior::fixed(0.0));
    lp.sigma2_s = comp("sigma2_s", ComponentPrior::fixed(0.0));
    lp.sigma2_b1 = comp("sigma2_b1", ComponentPrior::fixed(0.0));
    lp.sigma2_b2 = comp("sigma2_b2", ComponentPrior::fixed(0.0));
    lp.sigma2_h = comp("sigma2_h", ComponentPrior::fixed(0.0));
    lp.lambda = comp("lambda", ComponentPrior::fixed(0.0));
    if (!lj.contains("phi")) fail(join(ctx, "phi"), "missing");
    lp.phi = comp("phi", ComponentPrior::fixed(1.0));
    lp.p = comp("p", ComponentPrior::fixed(prior.family == ObservationFamily::gaussian ? 0.0 : 1.5));
    lp.h1_mean = number(lj, "h1_mean", ctx, 0.0);
    lp.h1_var = number(lj, "h1_var", ctx, 0.0);
    if (lp.h1_var < 0.0) fail(join(ctx, "h1_var"), "must be >= 0");
    if (lj.contains("gamma_mean")) {
      lp.gamma_mean = vector_of(lj.at("gamma_mean"), join(ctx, "gamma_mean"));
      if (lp.gamma_mean.size() != k) fail(join(ctx, "gamma_mean"), "expected length " + std::to_string(k));
      if (lj.contains("gamma_cov")) {
        lp.gamma_cov = matrix_of(lj.at("gamma_cov"), join(ctx, "gamma_cov"));
      } else if (lj.contains("gamma_sd")) {
        const Eigen::VectorXd sd = vector_of(lj.at("gamma_sd"), join(ctx, "gamma_sd"));
        if (sd.size() != k) fail(join(ctx, "gamma_sd"), "expected length " + std::to_string(k));
        lp.gamma_cov = sd.array().square().matrix().asDiagonal();
      } else {
        fail(ctx, "gamma_mean needs gamma_cov or gamma_sd");
      }
      if (lp.gamma_cov.rows() != k) fail(join(ctx, "gamma_cov"), "expected " + std::to_string(k) + "x" + std::to_string(k));
    } else {
      all_gamma = false;
    }
    prior.lines.push_back(lp);
  }
  if (has_gamma_prior) *has_gamma_prior = all_gamma;
  return prior;
}

Json to_json(const SimConfig& c) {
  Json lines = Json::array();
  for (int n = 0; n < c.line_count(); ++n) {
    const auto idx = static_cast<std::size_t>(n);
    Json lj{{"gamma1", json_of(c.gamma1.at(idx))}, {"h1_mean", c.h1_mean.at(idx)},
            {"h1_sd", c.h1_sd.empty() ? 0.0 : c.h1_sd.at(idx)}};
    if (idx < c.line_names.size()) lj["name"] = c.line_names[idx];
    lines.push_back(lj);
  }
  return Json{{"dim", c.dim},
              {"family", to_string(c.family)},
              {"extended", c.extended},
              {"seed", c.seed},
              {"lower", c.lower},
              {"missing_fraction", c.missing_fraction},
              {"params", to_json(c.params)},
              {"lines", lines}};
}

SimConfig sim_config_from_json(const Json& j) {
  require_object(j, "config");
  allow_only(j, "config", {"dim", "family", "extended", "seed", "lower", "missing_fraction", "params", "lines"});
  SimConfig c;
  const double dim = number(j, "dim", "config");
  if (dim != std::floor(dim) || dim < 2) fail("config.dim", "must be an integer >= 2");
  c.dim = static_cast<int>(dim);
  try {
    c.family = parse_family(text(j, "family", "config", "tweedie"));
  } catch (const InputError& e) {
    fail("config.family", e.what());
  }
  c.extended = flag(j, "extended", "config", false);
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) fail("config.seed", "expected a nonnegative integer");
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  c.lower = flag(j, "lower", "config", false);
  c.missing_fraction = number(j, "missing_fraction", "config", 0.0);
  if (!j.contains("params")) fail("config.params", "missing");
  c.params = model_params_from_json(j.at("params"));
  const Json& lines = array_field(j, "lines", "config");
  if (static_cast<int>(lines.size()) != c.params.line_count()) {
    fail("config.lines", "expected one entry per line in params (" + std::to_string(c.params.line_count()) + ")");
  }
  const int k = gamma_block_size(c.extended);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const std::string ctx = "config.lines[" + std::to_string(n) + "]";
    const Json& lj = lines[n];
    require_object(lj, ctx);
    allow_only(lj, ctx, {"name", "gamma1", "h1_mean", "h1_sd"});
    if (!lj.contains("gamma1")) fail(join(ctx, "gamma1"), "missing");
    Eigen::VectorXd g = vector_of(lj.at("gamma1"), join(ctx, "gamma1"));
    if (g.size() != k) fail(join(ctx, "gamma1"), "expected length " + std::to_string(k));
    c.gamma1.push_back(g);
    c.h1_mean.push_back(number(lj, "h1_mean", ctx, 0.0));
    const double sd = number(lj, "h1_sd", ctx, 0.0);
    if (sd < 0.0) fail(join(ctx, "h1_sd"), "must be >= 0");
    c.h1_sd.push_back(sd);
    c.line_names.push_back(text(lj, "name", ctx, "line" + std::to_string(n + 1)));
  }
  if (c.family == ObservationFamily::tweedie) {
    for (std::size_t n = 0; n < c.params.lines.size(); ++n) {
      const double p = c.params.lines[n].p;
      if (!(p == 0.0 || (p >= 1.0 && p <= 2.0))) {
        fail("config.params.lines[" + std::to_string(n) + "].p", "unsupported Tweedie power");
      }
    }
  }
  try {
    c.validate();
  } catch (const InputError& e) {
    fail("config", e.what());
  }
  return c;
}

Json to_json(const TrianglePanel& panel) {
  Json j = Json::object();
  j["dim"] = panel.dim();
  j["kind"] = panel.kind() == ClaimKind::cumulative ? "cumulative" : "incremental";
  j["scale"] = panel.scale() == ClaimScale::loss_ratio ? "loss_ratio" : "raw";
  Json lines = Json::array();
  for (const auto& l : panel.all_lines()) {
    Json lj;
    lj["name"] = l.name();
    lj["exposures"] = l.exposures();
    lj["has_exposure"] = l.has_exposure();
    Json values = Json::array();
    Json mask = Json::array();
    for (int i = 1; i <= l.dim(); ++i) {
      Json vrow = Json::array();
      Json mrow = Json::array();
      for (int c = 1; c <= l.dim(); ++c) {
        const bool obs = l.observed(i, c);
        mrow.push_back(obs ? 1 : 0);
        vrow.push_back(obs ? Json(l.value(i, c)) : Json(nullptr));
      }
      values.push_back(vrow);
      mask.push_back(mrow);
    }
    lj["values"] = values;
    lj["mask"] = mask;
    lines.push_back(lj);
  }
  j["lines"] = lines;
  return j;
}

TrianglePanel panel_from_json(const Json& j) {
  require_object(j, "panel");
  const int dim = static_cast<int>(number(j, "dim", "panel"));
  std::vector<LineTriangle> lines;
  const Json& lines_j = array_field(j, "lines", "panel");
  for (std::size_t n = 0; n < lines_j.size(); ++n) {
    const std::string ctx = "panel.lines[" + std::to_string(n) + "]";
    const Json& lj = lines_j[n];
    LineTriangle l(dim, text(lj, "name", ctx, ""));
    if (flag(lj, "has_exposure", ctx, true)) {
      l.set_exposures(lj.at("exposures").get<std::vector<double>>());
    }
    const Json& values = array_field(lj, "values", ctx);
    const Json& mask = array_field(lj, "mask", ctx);
    if (static_cast<int>(values.size()) != dim || static_cast<int>(mask.size()) != dim) {
      fail(ctx, "dimension mismatch");
    }
    for (int i = 1; i <= dim; ++i) {
      for (int c = 1; c <= dim; ++c) {
        if (mask[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(c - 1)].get<int>() != 0) {
          l.set(i, c, values[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(c - 1)].get<double>());
        }
      }
    }
    lines.push_back(std::move(l));
  }
  const auto kind = text(j, "kind", "panel", "incremental") == "cumulative" ? ClaimKind::cumulative
                                                                           : ClaimKind::incremental;
  const auto scale = text(j, "scale", "panel", "raw") == "loss_ratio" ? ClaimScale::loss_ratio : ClaimScale::raw;
  return TrianglePanel(std::move(lines), kind, scale);
}

Json to_json(const TruthRecord& truth) {
  Json lines = Json::array();
  for (std::size_t n = 0; n < truth.gamma.size(); ++n) {
    Json gamma = Json::array();
    Json shocks = Json::array();
    for (const auto& g : truth.gamma[n]) gamma.push_back(json_of(g));
    for (const auto& g : truth.gamma_shocks[n]) shocks.push_back(json_of(g));
    lines.push_back({{"gamma", gamma},
                     {"gamma_shocks", shocks},
                     {"h", json_of(truth.h[n])},
                     {"line_shocks", json_of(truth.line_shocks[n])}});
  }
  return Json{{"lines", lines}, {"common_shocks", json_of(truth.common_shocks)}};
}

TruthRecord truth_from_json(const Json& j) {
  require_object(j, "truth");
  TruthRecord t;
  const Json& lines = array_field(j, "lines", "truth");
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const std::string ctx = "truth.lines[" + std::to_string(n) + "]";
    const Json& lj = lines[n];
    std::vector<Eigen::VectorXd> gamma;
    std::vector<Eigen::VectorXd> shocks;
    for (const auto& g : array_field(lj, "gamma", ctx)) gamma.push_back(vector_of(g, join(ctx, "gamma")));
    if (lj.contains("gamma_shocks")) {
      for (const auto& g : lj.at("gamma_shocks")) shocks.push_back(vector_of(g, join(ctx, "gamma_shocks")));
    }
    t.gamma.push_back(std::move(gamma));
    t.gamma_shocks.push_back(std::move(shocks));
    t.h.push_back(vector_of(array_field(lj, "h", ctx), join(ctx, "h")));
    t.line_shocks.push_back(lj.contains("line_shocks") ? vector_of(lj.at("line_shocks"), join(ctx, "line_shocks"))
                                                      : Eigen::VectorXd());
  }
  if (j.contains("common_shocks")) t.common_shocks = vector_of(j.at("common_shocks"), "truth.common_shocks");
  return t;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

CsvTable& CsvTable::add(std::vector<std::string> row) {
  if (row.size() != header_.size()) throw InputError("CSV row width does not match the header");
  rows_.push_back(std::move(row));
  return *this;
}

std::string CsvTable::str() const {
  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k > 0) out << ',';
      out << row[k];
    }
    out << '\n';
  };
  emit(header_);
  for (const auto& r : rows_) emit(r);
  return out.str();
}

void CsvTable::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << str();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string num(double v) { return format_double(v); }
std::string num(int v) { return std::to_string(v); }

CsvTable read_csv_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  auto split = [](const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
  };
  std::string line;
  if (!std::getline(in, line)) throw InputError(path.string() + ": empty CSV");
  CsvTable table(split(line));
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    table.add(split(line));
  }
  return table;
}

}  // namespace evoglm
