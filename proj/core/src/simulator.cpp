#include "evoglm/simulator.hpp"

#include <cmath>
#include <limits>

#include "evoglm/error.hpp"
#include "evoglm/parallel.hpp"
#include "evoglm/rng.hpp"
#include "evoglm/tweedie.hpp"

namespace evoglm {

void SimConfig::validate() const {
  if (dim < 2) throw InputError("simulation needs I >= 2");
  params.validate();
  const auto n = static_cast<std::size_t>(line_count());
  const int k = gamma_block_size(extended);
  if (gamma1.size() != n) throw InputError("initial gamma must be given for every line");
  for (const auto& g : gamma1) {
    if (g.size() != k) throw InputError("initial gamma length does not match the Hoerl form");
  }
  if (h1_mean.size() != n) throw InputError("initial h1 must be given for every line");
  if (!h1_sd.empty() && h1_sd.size() != n) throw InputError("h1_sd must be given for every line");
  for (double s : h1_sd) {
    if (!(s >= 0.0)) throw InputError("h1_sd must be >= 0");
  }
  if (family == ObservationFamily::tweedie) {
    for (const auto& l : params.lines) evoglm::validate(TweedieSpec{l.p, l.phi});
  }
  if (!(missing_fraction >= 0.0 && missing_fraction < 1.0)) {
    throw InputError("missing_fraction must lie in [0, 1)");
  }
}

SimConfig SimConfig::paper_default() {
  SimConfig c;
  c.dim = 15;
  LineParams l1;
  l1.phi = 0.4;
  l1.sigma2_a = 0.01;
  l1.sigma2_r = 0.005;
  l1.sigma2_s = 0.001;
  l1.sigma2_h = 0.005;
  l1.lambda = 0.6;
  l1.p = 1.27;
  LineParams l2;
  l2.phi = 0.5;
  l2.sigma2_a = 0.005;
  l2.sigma2_r = 0.002;
  l2.sigma2_s = 0.0005;
  l2.sigma2_h = 0.005;
  l2.lambda = 0.8;
  l2.p = 1.35;
  c.params.lines = {l1, l2};
  c.params.sigma2_h_tilde = 0.005;
  c.gamma1 = {Eigen::Vector3d(6.9111, 1.2867, -0.8014), Eigen::Vector3d(7.0908, 2.0212, -0.4343)};
  c.h1_mean = {0.5, 0.5};
  c.h1_sd = {0.0, 0.0};
  c.seed = 20190101;
  c.line_names = {"line1", "line2"};
  return c;
}

FactorState TruthRecord::state_at(int i, int dim, bool extended) const {
  FactorState s;
  s.extended = extended;
  for (std::size_t n = 0; n < gamma.size(); ++n) {
    s.gamma.push_back(gamma[n].at(static_cast<std::size_t>(i - 1)));
    s.psi.push_back(h[n].head(dim));
  }
  return s;
}

TruthRecord simulate_factors(const SimConfig& config) {
  config.validate();
  const int lines = config.line_count();
  const int dim = config.dim;
  const int horizon = config.lower ? 2 * dim - 1 : dim;
  const int k = gamma_block_size(config.extended);
  TruthRecord truth;
  truth.gamma.resize(static_cast<std::size_t>(lines));
  truth.gamma_shocks.resize(static_cast<std::size_t>(lines));
  for (int n = 0; n < lines; ++n) {
    const auto& lp = config.params.lines[static_cast<std::size_t>(n)];
    RandomStream rng(config.seed, {label_hash("sim-gamma"), static_cast<std::uint64_t>(n)});
    auto& path = truth.gamma[static_cast<std::size_t>(n)];
    auto& shocks = truth.gamma_shocks[static_cast<std::size_t>(n)];
    path.push_back(config.gamma1[static_cast<std::size_t>(n)]);
    shocks.push_back(Eigen::VectorXd::Zero(k));
    for (int i = 2; i <= dim; ++i) {
      Eigen::VectorXd next = evolve_gamma(path.back(), lp, rng);
      shocks.push_back(next - path.back());
      path.push_back(std::move(next));
    }
  }

  std::vector<RandomStream> line_streams;
  for (int n = 0; n < lines; ++n) {
    line_streams.emplace_back(config.seed, std::initializer_list<std::uint64_t>{label_hash("sim-h"), static_cast<std::uint64_t>(n)});
  }
  RandomStream common(config.seed, {label_hash("sim-common")});
  RandomStream h1_rng(config.seed, {label_hash("sim-h1")});
  truth.h.assign(static_cast<std::size_t>(lines), Eigen::VectorXd::Zero(horizon));
  truth.line_shocks.assign(static_cast<std::size_t>(lines), Eigen::VectorXd::Zero(horizon));
  truth.common_shocks = Eigen::VectorXd::Zero(horizon);
  std::vector<double> h(static_cast<std::size_t>(lines));
  for (int n = 0; n < lines; ++n) {
    const auto idx = static_cast<std::size_t>(n);
    const double sd = config.h1_sd.empty() ? 0.0 : config.h1_sd[idx];
    h[idx] = config.h1_mean[idx] + (sd > 0.0 ? sd * h1_rng.normal() : 0.0);
    truth.h[idx](0) = h[idx];
  }
  for (int t = 2; t <= horizon; ++t) {
    const CalendarStep step = evolve_calendar(h, config.params, line_streams, common);
    h = step.h;
    truth.common_shocks(t - 1) = step.common_shock;
    for (int n = 0; n < lines; ++n) {
      const auto idx = static_cast<std::size_t>(n);
      truth.h[idx](t - 1) = step.h[idx];
      truth.line_shocks[idx](t - 1) = step.line_shocks[idx];
    }
  }
  return truth;
}

namespace {

double draw_cell(double eta, const LineParams& lp, ObservationFamily family, RandomStream& rng) {
  if (family == ObservationFamily::gaussian) return rng.normal(eta, std::sqrt(lp.phi));
  return sample(std::exp(eta), TweedieSpec{lp.p, lp.phi}, rng);
}

}  // namespace

SimResult simulate_panel(const SimConfig& config) {
  SimResult out;
  out.truth = simulate_factors(config);
  const int lines = config.line_count();
  const int dim = config.dim;
  std::vector<LineTriangle> tris;
  for (int n = 0; n < lines; ++n) {
    const auto idx = static_cast<std::size_t>(n);
    const auto& lp = config.params.lines[idx];
    const std::string name = idx < config.line_names.size() ? config.line_names[idx]
                                                           : "line" + std::to_string(n + 1);
    LineTriangle tri(dim, name);
    RandomStream mask_rng(config.seed, {label_hash("sim-mask"), static_cast<std::uint64_t>(n)});
    Eigen::MatrixXd lower;
    if (config.lower) lower = Eigen::MatrixXd::Constant(dim, dim, std::numeric_limits<double>::quiet_NaN());
    for (int i = 1; i <= dim; ++i) {
      const auto& g = out.truth.gamma[idx][static_cast<std::size_t>(i - 1)];
      for (int j = 1; j <= dim; ++j) {
        const int t = calendar_index(i, j);
        if (t > dim && !config.lower) break;
        RandomStream rng(config.seed, {label_hash("sim-cell"), static_cast<std::uint64_t>(n),
                                       static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j)});
        const double eta = cell_predictor(g, out.truth.h[idx], i, j);
        const double y = draw_cell(eta, lp, config.family, rng);
        if (t > dim) {
          lower(i - 1, j - 1) = y;
        } else if (config.missing_fraction > 0.0 && mask_rng.uniform() < config.missing_fraction) {
          continue;
        } else {
          tri.set(i, j, y);
        }
      }
    }
    tris.push_back(std::move(tri));
    if (config.lower) out.lower.push_back(std::move(lower));
  }
  out.panel = TrianglePanel(std::move(tris), ClaimKind::incremental, ClaimScale::raw);
  return out;
}

std::vector<SimResult> simulate_replicates(const SimConfig& config, int count, unsigned workers) {
  if (count < 0) throw InputError("replicate count must be >= 0");
  std::vector<SimResult> out(static_cast<std::size_t>(count));
  parallel_for(out.size(), workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t r = b; r < e; ++r) {
      SimConfig c = config;
      c.seed = stream_key(config.seed, {label_hash("replicate"), r});
      out[r] = simulate_panel(c);
    }
  });
  return out;
}

}  // namespace evoglm
