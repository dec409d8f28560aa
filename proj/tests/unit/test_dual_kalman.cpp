#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "doctest.h"
#include "evoglm/dual_kalman.hpp"
#include "evoglm/error.hpp"
#include "evoglm/linalg.hpp"
#include "evoglm/parallel.hpp"
#include "evoglm/simulator.hpp"
#include "oracle/dense_gaussian.hpp"

using namespace evoglm;

namespace {

SimConfig gaussian_config(int dim, int lines, std::uint64_t seed) {
  SimConfig c = SimConfig::paper_default();
  c.dim = dim;
  c.family = ObservationFamily::gaussian;
  c.seed = seed;
  c.params.lines.resize(static_cast<std::size_t>(lines));
  c.gamma1.resize(static_cast<std::size_t>(lines));
  c.h1_mean.resize(static_cast<std::size_t>(lines));
  c.h1_sd.resize(static_cast<std::size_t>(lines));
  c.line_names.resize(static_cast<std::size_t>(lines));
  for (auto& l : c.params.lines) {
    l.p = 0.0;
    l.phi = 0.04;
  }
  return c;
}

KalmanConfig config_for(const SimConfig& c) {
  KalmanConfig k;
  k.extended = c.extended;
  const int lines = c.line_count();
  for (int n = 0; n < lines; ++n) {
    k.gamma_mean.push_back(c.gamma1[static_cast<std::size_t>(n)]);
    k.gamma_cov.push_back(0.05 * Eigen::MatrixXd::Identity(3, 3));
  }
  k.h1_mean = Eigen::VectorXd::Constant(lines, 0.3);
  k.h1_var = Eigen::VectorXd::Constant(lines, 0.02);
  k.artificial_noise = 0.0;
  return k;
}

oracle::DenseSetup dense_setup(const SimConfig& c, const KalmanConfig& k) {
  oracle::DenseSetup s;
  s.params = c.params;
  s.dim = c.dim;
  s.extended = c.extended;
  s.gamma_mean = k.gamma_mean;
  s.gamma_cov = k.gamma_cov;
  s.h1_mean = k.h1_mean;
  s.h1_var = k.h1_var;
  return s;
}

double max_abs(const Eigen::MatrixXd& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

KalmanState scalar_state(double psi_mean, double psi_var, double gamma_mean, double gamma_var) {
  KalmanState s;
  s.psi_mean = Eigen::VectorXd::Constant(1, psi_mean);
  s.psi_cov = Eigen::MatrixXd::Constant(1, 1, psi_var);
  s.gamma_mean = Eigen::VectorXd::Constant(1, gamma_mean);
  s.gamma_cov = Eigen::MatrixXd::Constant(1, 1, gamma_var);
  s.cross_cov = Eigen::MatrixXd::Zero(1, 1);
  return s;
}

RowObservation scalar_obs(double y, double a, double e, double h) {
  RowObservation o;
  o.y = Eigen::VectorXd::Constant(1, y);
  o.A = Eigen::MatrixXd::Constant(1, 1, a);
  o.E = Eigen::MatrixXd::Constant(1, 1, e);
  o.H = Eigen::MatrixXd::Constant(1, 1, h);
  return o;
}

}  // namespace

TEST_SUITE("dual_kalman") {
  TEST_CASE("scalar calendar update") {
    const KalmanState prior = scalar_state(2.0, 1.0, 0.0, 0.0);
    const double nu = 1.4;
    const KalmanState post = update_calendar(prior, scalar_obs(2.0 + nu, 0.0, 1.0, 1.0));
    CHECK(post.psi_cov(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(post.psi_mean(0) == doctest::Approx(2.0 + 0.5 * nu).epsilon(1e-15));

    const KalmanState flat = update_calendar(prior, scalar_obs(50.0, 0.0, 1.0, 1e12));
    CHECK(std::abs(flat.psi_mean(0) - 2.0) < 1e-10);
    CHECK(std::abs(flat.psi_cov(0, 0) - 1.0) < 1e-10);
  }

  TEST_CASE("scalar gamma update") {
    const KalmanState prior = scalar_state(0.0, 0.0, -1.0, 1.0);
    const double nu = 0.6;
    const KalmanState post = update_gamma(prior, scalar_obs(-1.0 + nu, 1.0, 0.0, 1.0));
    CHECK(post.gamma_cov(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(post.gamma_mean(0) == doctest::Approx(-1.0 + 0.5 * nu).epsilon(1e-15));

    const KalmanState flat = update_gamma(prior, scalar_obs(50.0, 1.0, 0.0, 1e12));
    CHECK(std::abs(flat.gamma_mean(0) + 1.0) < 1e-10);
    CHECK(std::abs(flat.gamma_cov(0, 0) - 1.0) < 1e-10);
  }

  TEST_CASE("single updates match dense conditioning on row 1") {
    const SimConfig c = gaussian_config(3, 2, 5);
    const SimResult sim = simulate_panel(c);
    const KalmanConfig k = config_for(c);
    const KalmanState prior = init(3, c.params, k);
    const RowObservation obs = observe_row(sim.panel, 1, c.params, false);
    const oracle::Posterior dense = oracle::condition(oracle::build_dense(dense_setup(c, k)), sim.panel, 1);

    // With gamma known (zero covariance) the calendar update is the exact
    // conditional; with psi known, the gamma update is.
    KalmanState known_gamma = prior;
    known_gamma.gamma_cov.setZero();
    const KalmanState a = update_calendar(known_gamma, obs);
    const KalmanState b = update_joint(known_gamma, obs);
    CHECK(max_abs(a.psi_mean - b.psi_mean) < 1e-10);
    CHECK(max_abs(a.psi_cov - b.psi_cov) < 1e-10);

    KalmanState known_psi = prior;
    known_psi.psi_cov.setZero();
    const KalmanState g = update_gamma(known_psi, obs);
    const KalmanState j = update_joint(known_psi, obs);
    CHECK(max_abs(g.gamma_mean - j.gamma_mean) < 1e-10);
    CHECK(max_abs(g.gamma_cov - j.gamma_cov) < 1e-10);

    const KalmanState joint = update_joint(prior, obs);
    CHECK(max_abs(joint.gamma_mean - dense.gamma.mean) < 1e-10);
    CHECK(max_abs(joint.psi_mean - dense.psi.mean) < 1e-10);
    CHECK(max_abs(joint.psi_cov - dense.psi.cov) < 1e-10);
  }

  TEST_CASE("prediction adds the evolution variances") {
    const SimConfig c = gaussian_config(4, 1, 1);
    KalmanConfig k = config_for(c);
    KalmanState s = init(4, c.params, k);
    ModelParams zero = c.params;
    zero.lines[0].sigma2_a = zero.lines[0].sigma2_r = zero.lines[0].sigma2_s = 0.0;
    s.artificial_noise = 0.0;
    const KalmanState same = predict(s, zero, false);
    CHECK(same.gamma_cov == s.gamma_cov);
    CHECK(same.psi_cov == s.psi_cov);
    CHECK(same.gamma_mean == s.gamma_mean);

    ModelParams b10 = c.params;
    b10.lines[0].sigma2_a = 0.01;
    b10.lines[0].sigma2_r = 0.005;
    b10.lines[0].sigma2_s = 0.001;
    const KalmanState moved = predict(s, b10, false);
    const Eigen::Vector3d added = (moved.gamma_cov - s.gamma_cov).diagonal();
    CHECK(added(0) == doctest::Approx(0.01).epsilon(1e-14));
    CHECK(added(1) == doctest::Approx(0.005).epsilon(1e-14));
    CHECK(added(2) == doctest::Approx(0.001).epsilon(1e-14));
    CHECK(moved.gamma_cov.trace() > s.gamma_cov.trace());

    s.artificial_noise = 1e-4;
    const KalmanState noisy = predict(s, zero, false);
    CHECK(noisy.psi_cov.trace() > s.psi_cov.trace());
  }

  TEST_CASE("closed-form initial calendar moments") {
    SimConfig c = gaussian_config(5, 2, 1);
    for (auto& l : c.params.lines) l.sigma2_h = 0.0;
    c.params.sigma2_h_tilde = 0.0;
    KalmanConfig k = config_for(c);
    k.h1_var.setZero();
    const KalmanState s = init(5, c.params, k);
    CHECK(s.psi_cov.isZero());
    CHECK(s.psi_mean == Eigen::VectorXd::Constant(10, 0.3));
  }

  TEST_CASE("simulated initial moments agree with the closed form") {
    const SimConfig c = gaussian_config(5, 2, 1);
    KalmanConfig k = config_for(c);
    const KalmanState exact = init(5, c.params, k);
    k.init = KalmanConfig::Init::simulation;
    k.simulation_paths = 100000;
    const KalmanState sim = init(5, c.params, k);
    for (Eigen::Index a = 0; a < 10; ++a) {
      CHECK(std::abs(sim.psi_mean(a) - exact.psi_mean(a)) < 4.0 * std::sqrt(exact.psi_cov(a, a) / 1e5));
      for (Eigen::Index b = 0; b < 10; ++b) {
        const double se = std::sqrt((exact.psi_cov(a, a) * exact.psi_cov(b, b) + exact.psi_cov(a, b) * exact.psi_cov(a, b)) / 1e5);
        CHECK(std::abs(sim.psi_cov(a, b) - exact.psi_cov(a, b)) < 4.0 * se);
      }
    }
  }

  TEST_CASE("N=1, I=2 filter equals hand conditioning") {
    const SimConfig c = gaussian_config(2, 1, 9);
    const SimResult sim = simulate_panel(c);
    const KalmanConfig k = config_for(c);
    const KalmanResult r = run(sim.panel, c.params, k);
    const oracle::DenseModel m = oracle::build_dense(dense_setup(c, k));
    for (int i = 1; i <= 2; ++i) {
      const oracle::Posterior d = oracle::condition(m, sim.panel, i);
      const KalmanState& s = r.steps[static_cast<std::size_t>(i - 1)].posterior;
      CHECK(max_abs(s.gamma_mean - d.gamma.mean) < 1e-10);
      CHECK(max_abs(s.psi_mean - d.psi.mean) < 1e-10);
      CHECK(max_abs(s.gamma_cov - d.gamma.cov) < 1e-10);
    }
    CHECK(std::abs(r.log_likelihood - oracle::condition(m, sim.panel, 2).log_likelihood) < 1e-10);
  }

  TEST_CASE("whole-filter posterior equals dense conditioning") {
    for (int lines : {1, 2}) {
      for (int dim : {2, 3, 4}) {
        const SimConfig c = gaussian_config(dim, lines, 100 + dim);
        const SimResult sim = simulate_panel(c);
        const KalmanConfig k = config_for(c);
        const KalmanResult r = run(sim.panel, c.params, k);
        const oracle::DenseModel m = oracle::build_dense(dense_setup(c, k));
        for (int i = 1; i <= dim; ++i) {
          const oracle::Posterior d = oracle::condition(m, sim.panel, i);
          const KalmanState& s = r.steps[static_cast<std::size_t>(i - 1)].posterior;
          INFO("lines=" << lines << " dim=" << dim << " step=" << i);
          CHECK(max_abs(s.gamma_mean - d.gamma.mean) < 1e-8);
          CHECK(max_abs(s.psi_mean - d.psi.mean) < 1e-8);
          CHECK(max_abs(s.gamma_cov - d.gamma.cov) < 1e-8);
          CHECK(max_abs(s.psi_cov - d.psi.cov) < 1e-8);
          CHECK(max_abs(s.cross_cov - d.cross) < 1e-8);
        }
        CHECK(std::abs(r.log_likelihood - oracle::condition(m, sim.panel, dim).log_likelihood) < 1e-8);
      }
    }
  }

  TEST_CASE("log-likelihood of a single observation") {
    SimConfig c = gaussian_config(1, 1, 3);
    c.params.lines[0] = LineParams{};
    c.params.lines[0].phi = 0.7;
    c.params.sigma2_h_tilde = 0.0;
    KalmanConfig k = config_for(c);
    k.gamma_mean[0] = Eigen::Vector3d(1.5, 0.0, 0.25);
    k.gamma_cov[0].setZero();
    k.h1_mean(0) = 0.1;
    k.h1_var(0) = 0.0;
    LineTriangle t(1);
    t.set(1, 1, 2.3);
    const TrianglePanel panel({t}, ClaimKind::incremental, ClaimScale::raw);
    const double mu = 1.5 + 0.25 + 0.1;
    const double expected = -0.5 * std::log(2.0 * std::numbers::pi * 0.7) - 0.5 * (2.3 - mu) * (2.3 - mu) / 0.7;
    CHECK(log_likelihood(panel, c.params, k) == doctest::Approx(expected).epsilon(1e-14));
  }

  TEST_CASE("level trade-off between a and h leaves the likelihood unchanged") {
    const SimConfig c = gaussian_config(5, 2, 12);
    const SimResult sim = simulate_panel(c);
    KalmanConfig k = config_for(c);
    const double base = log_likelihood(sim.panel, c.params, k);
    for (auto& g : k.gamma_mean) g(0) -= 0.8;
    k.h1_mean.array() += 0.8;
    CHECK(log_likelihood(sim.panel, c.params, k) == doctest::Approx(base).epsilon(1e-12));
  }

  TEST_CASE("Joseph and standard covariance forms agree") {
    const SimConfig c = gaussian_config(6, 2, 13);
    const SimResult sim = simulate_panel(c);
    KalmanConfig k = config_for(c);
    const KalmanResult a = run(sim.panel, c.params, k);
    k.form = CovarianceForm::joseph;
    const KalmanResult b = run(sim.panel, c.params, k);
    for (std::size_t i = 0; i < a.steps.size(); ++i) {
      CHECK(max_abs(a.steps[i].posterior.gamma_cov - b.steps[i].posterior.gamma_cov) < 1e-8);
      CHECK(max_abs(a.steps[i].posterior.psi_cov - b.steps[i].posterior.psi_cov) < 1e-8);
      CHECK(max_abs(a.steps[i].posterior.gamma_mean - b.steps[i].posterior.gamma_mean) < 1e-8);
    }
  }

  TEST_CASE("covariances stay symmetric PSD") {
    for (Coupling coupling : {Coupling::exact, Coupling::literal}) {
      const SimConfig c = gaussian_config(10, 2, 14);
      const SimResult sim = simulate_panel(c);
      KalmanConfig k = config_for(c);
      k.coupling = coupling;
      k.artificial_noise = -1.0;
      const KalmanResult r = run(sim.panel, c.params, k);
      for (const auto& s : r.steps) {
        CHECK(s.posterior.psi_cov == s.posterior.psi_cov.transpose());
        CHECK(s.posterior.gamma_cov == s.posterior.gamma_cov.transpose());
        CHECK(s.min_eigenvalue > -1e-10);
      }
    }
  }

  TEST_CASE("line order does not change the filter") {
    const SimConfig c = gaussian_config(5, 2, 15);
    const SimResult sim = simulate_panel(c);
    const KalmanConfig k = config_for(c);
    const KalmanResult a = run(sim.panel, c.params, k);

    SimConfig swapped = c;
    std::swap(swapped.params.lines[0], swapped.params.lines[1]);
    KalmanConfig ks = k;
    std::swap(ks.gamma_mean[0], ks.gamma_mean[1]);
    std::swap(ks.gamma_cov[0], ks.gamma_cov[1]);
    const TrianglePanel panel({sim.panel.line(1), sim.panel.line(0)}, ClaimKind::incremental, ClaimScale::raw);
    const KalmanResult b = run(panel, swapped.params, ks);
    CHECK(std::abs(a.log_likelihood - b.log_likelihood) < 1e-10);
    const KalmanState& x = a.steps.back().posterior;
    const KalmanState& y = b.steps.back().posterior;
    CHECK(max_abs(x.gamma_mean.head(3) - y.gamma_mean.tail(3)) < 1e-10);
    CHECK(max_abs(x.psi_mean.head(5) - y.psi_mean.tail(5)) < 1e-10);
  }

  TEST_CASE("noise-free consistent data gives zero innovations") {
    SimConfig c = gaussian_config(5, 2, 16);
    for (auto& l : c.params.lines) {
      l.sigma2_a = l.sigma2_r = l.sigma2_s = l.sigma2_h = 0.0;
      l.phi = 1e-12;
    }
    c.params.sigma2_h_tilde = 0.0;
    for (auto& sd : c.h1_sd) sd = 0.0;
    const SimResult sim = simulate_panel(c);
    KalmanConfig k = config_for(c);
    for (auto& g : k.gamma_cov) g.setZero();
    k.h1_var.setZero();
    for (int n = 0; n < 2; ++n) k.h1_mean(n) = sim.truth.h[static_cast<std::size_t>(n)](0);
    const KalmanResult r = run(sim.panel, c.params, k);
    for (const auto& s : r.steps) CHECK(max_abs(s.innovation) < 1e-5);
  }

  TEST_CASE("MLE of the observation variance is the residual mean square") {
    SimConfig c = gaussian_config(6, 1, 17);
    c.params.lines[0] = LineParams{};
    c.params.lines[0].phi = 0.3;
    c.params.sigma2_h_tilde = 0.0;
    c.h1_sd[0] = 0.0;
    const SimResult sim = simulate_panel(c);
    KalmanConfig k = config_for(c);
    k.gamma_cov[0].setZero();
    k.h1_var.setZero();
    k.h1_mean(0) = c.h1_mean[0];
    double ss = 0.0;
    int cells = 0;
    for (int i = 1; i <= 6; ++i) {
      for (int j = 1; j <= 7 - i; ++j) {
        const double mu = c.gamma1[0](0) + c.gamma1[0](1) * std::log(j) + c.gamma1[0](2) * j + c.h1_mean[0];
        ss += std::pow(sim.panel.value(0, i, j) - mu, 2);
        ++cells;
      }
    }
    ModelParams start = c.params;
    start.lines[0].phi = 1.0;
    MleOptions opts;
    opts.tolerance = 1e-10;
    const MleResult fit = fit_mle(sim.panel, start, k, opts);
    REQUIRE(fit.names.size() == 1);
    CHECK(fit.params.lines[0].phi == doctest::Approx(ss / cells).epsilon(1e-6));
    CHECK(fit.log_likelihood >= fit.start_log_likelihood);
  }

  TEST_CASE("MLE never ends below its start") {
    const SimConfig c = gaussian_config(8, 2, 18);
    const SimResult sim = simulate_panel(c);
    const KalmanConfig k = config_for(c);
    ModelParams start = c.params;
    for (auto& l : start.lines) {
      l.sigma2_h *= 3.0;
      l.phi *= 0.5;
    }
    MleOptions opts;
    opts.max_iterations = 300;
    const MleResult fit = fit_mle(sim.panel, start, k, opts);
    CHECK(fit.log_likelihood >= fit.start_log_likelihood);
    CHECK(fit.log_likelihood == doctest::Approx(log_likelihood(sim.panel, fit.params, k)).epsilon(1e-12));
  }

  TEST_CASE("MLE recovers variance parameters over 200 panels") {
    // One line with no common shock: the slope variances and the loading are
    // not identified on 10 rows, so they stay fixed at zero.
    SimConfig c = gaussian_config(10, 1, 2024);
    LineParams& l = c.params.lines[0];
    l = LineParams{};
    l.p = 0.0;
    l.phi = 0.04;
    l.sigma2_a = 0.02;
    l.sigma2_h = 0.02;
    c.params.sigma2_h_tilde = 0.0;
    KalmanConfig k = config_for(c);
    k.h1_mean(0) = c.h1_mean[0];
    k.h1_var(0) = 0.01;
    const auto sims = simulate_replicates(c, 200);
    std::vector<MleResult> fits(sims.size());
    parallel_for(sims.size(), 0, [&](std::size_t b, std::size_t e) {
      for (std::size_t r = b; r < e; ++r) fits[r] = fit_mle(sims[r].panel, c.params, k);
    });
    const std::vector<std::pair<std::string, double>> truth = {{"phi[1]", 0.04}, {"sigma2_a[1]", 0.02}, {"sigma2_h[1]", 0.02}};
    for (const auto& [name, value] : truth) {
      const auto at = std::find(fits[0].names.begin(), fits[0].names.end(), name) - fits[0].names.begin();
      REQUIRE(at < static_cast<std::ptrdiff_t>(fits[0].names.size()));
      std::vector<double> est;
      for (const auto& f : fits) est.push_back(f.estimate(at));
      std::nth_element(est.begin(), est.begin() + 100, est.end());
      INFO(name << " median " << est[100]);
      CHECK(std::abs(est[100] / value - 1.0) < 0.25);
    }
  }

  TEST_CASE("log claims require positive cells") {
    LineTriangle t(2);
    t.set(1, 1, 1.0);
    t.set(1, 2, 0.0);
    t.set(2, 1, 2.0);
    CHECK_THROWS_AS(log_claims(TrianglePanel({t}, ClaimKind::incremental, ClaimScale::raw)), InputError);
    t.set(1, 2, std::exp(1.0));
    const TrianglePanel logged = log_claims(TrianglePanel({t}, ClaimKind::incremental, ClaimScale::raw));
    CHECK(logged.value(0, 1, 2) == doctest::Approx(1.0).epsilon(1e-15));
  }
}
