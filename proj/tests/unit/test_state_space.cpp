#include <cmath>
#include <vector>

#include "doctest.h"
#include "evoglm/error.hpp"
#include "evoglm/state_space.hpp"

using namespace evoglm;

namespace {

ModelParams two_lines(double s2h1, double s2h2, double l1, double l2, double s2ht) {
  ModelParams p;
  p.lines.resize(2);
  p.lines[0].sigma2_h = s2h1;
  p.lines[1].sigma2_h = s2h2;
  p.lines[0].lambda = l1;
  p.lines[1].lambda = l2;
  p.sigma2_h_tilde = s2ht;
  return p;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
    syy += (y[k] - my) * (y[k] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

TEST_SUITE("state_space") {
  TEST_CASE("design matrix rows") {
    const Eigen::MatrixXd last = design_matrix_A(4, 4, false);
    REQUIRE(last.rows() == 1);
    CHECK(last(0, 0) == 1.0);
    CHECK(last(0, 1) == 0.0);
    CHECK(last(0, 2) == 1.0);

    const Eigen::MatrixXd a = design_matrix_A(1, 3, false);
    REQUIRE(a.rows() == 3);
    CHECK(a(1, 1) == std::log(2.0));
    CHECK(a(2, 1) == std::log(3.0));
    CHECK(a(2, 2) == 3.0);

    const Eigen::MatrixXd x = design_matrix_A(4, 5, true);
    REQUIRE(x.rows() == 2);
    REQUIRE(x.cols() == 5);
    Eigen::MatrixXd expected(2, 5);
    expected << 1, 0, 1, 1, 0, 1, std::log(2.0), 2, 0, 1;
    CHECK(x == expected);
    CHECK_THROWS_AS(design_matrix_A(0, 3, false), InputError);
    CHECK_THROWS_AS(design_matrix_A(4, 3, false), InputError);
  }

  TEST_CASE("selector matrix") {
    CHECK(selector_matrix_E(1, 4) == Eigen::MatrixXd::Identity(4, 4));
    const Eigen::MatrixXd last = selector_matrix_E(4, 4);
    REQUIRE(last.rows() == 1);
    CHECK(last(0, 3) == 1.0);
    CHECK(last.sum() == 1.0);
    const Eigen::VectorXd idx = Eigen::VectorXd::LinSpaced(6, 1, 6);
    const Eigen::VectorXd picked = selector_matrix_E(3, 6) * idx;
    CHECK(picked == Eigen::VectorXd::LinSpaced(4, 3, 6));
  }

  TEST_CASE("linear predictor examples") {
    FactorState s;
    s.gamma = {Eigen::VectorXd::Zero(3)};
    s.psi = {Eigen::VectorXd::Zero(5)};
    CHECK(linear_predictor(s, 2, 0).isZero());

    s.gamma[0] << 1, 0, 0;
    s.psi[0] = Eigen::VectorXd::LinSpaced(5, 1, 5);
    const Eigen::VectorXd eta = linear_predictor(s, 2, 0);
    for (int j = 1; j <= 4; ++j) CHECK(eta(j - 1) == 1.0 + 2 + j - 1);

    FactorState b9;
    b9.gamma = {Eigen::Vector3d(6.9772, 1.1637, -0.7669)};
    b9.psi = {Eigen::VectorXd::Zero(15)};
    b9.psi[0](0) = 0.45;
    CHECK(linear_predictor(b9, 1, 0)(0) == doctest::Approx(6.6603).epsilon(1e-12));
  }

  TEST_CASE("linear predictor equals the matrix form") {
    RandomStream rng(5, {1});
    for (bool extended : {false, true}) {
      const int k = gamma_block_size(extended);
      FactorState s;
      s.extended = extended;
      for (int n = 0; n < 2; ++n) {
        Eigen::VectorXd g(k);
        for (int c = 0; c < k; ++c) g(c) = rng.normal();
        Eigen::VectorXd h(7);
        for (int c = 0; c < 7; ++c) h(c) = rng.normal();
        s.gamma.push_back(g);
        s.psi.push_back(h);
      }
      for (int i = 1; i <= 7; ++i) {
        for (int n = 0; n < 2; ++n) {
          const Eigen::VectorXd direct = linear_predictor(s, i, n);
          const Eigen::VectorXd matrix =
              design_matrix_A(i, 7, extended) * s.gamma[n] + selector_matrix_E(i, 7) * s.psi[n];
          CHECK((direct - matrix).cwiseAbs().maxCoeff() < 1e-12);
        }
      }
    }
  }

  TEST_CASE("zero-variance gamma evolution is the identity") {
    RandomStream rng(1, {0});
    const Eigen::Vector3d g(1.0, 2.0, -3.0);
    CHECK(evolve_gamma(g, LineParams{}, rng) == g);
  }

  TEST_CASE("gamma increment moments") {
    LineParams lp;
    lp.sigma2_a = 1.0;
    RandomStream rng(2, {0});
    const Eigen::Vector3d g = Eigen::Vector3d::Zero();
    const int n = 1000000;
    double s = 0.0, s2 = 0.0;
    for (int k = 0; k < n; ++k) {
      const Eigen::VectorXd next = evolve_gamma(g, lp, rng);
      REQUIRE(next(1) == 0.0);
      s += next(0);
      s2 += next(0) * next(0);
    }
    CHECK(std::abs(s / n) < 0.004);
    CHECK(std::abs(s2 / n - 1.0) < 0.01);
  }

  TEST_CASE("seeded gamma evolution is reproducible") {
    LineParams lp;
    lp.sigma2_a = 0.01;
    lp.sigma2_r = 0.005;
    lp.sigma2_s = 0.001;
    RandomStream a(9, {3});
    RandomStream b(9, {3});
    const Eigen::Vector3d g(6.9, 1.3, -0.8);
    for (int k = 0; k < 10; ++k) CHECK(evolve_gamma(g, lp, a) == evolve_gamma(g, lp, b));
  }

  TEST_CASE("calendar evolution without variance stays put") {
    const ModelParams p = two_lines(0.0, 0.0, 0.6, 0.4, 0.0);
    RandomStream rng(1, {0});
    const std::vector<double> prev{0.5, -0.2};
    const CalendarStep s = evolve_calendar(prev, p, rng);
    CHECK(s.h == prev);
  }

  TEST_CASE("pure common shock moves both lines together") {
    const ModelParams p = two_lines(0.0, 0.0, 1.0, 1.0, 0.3);
    RandomStream rng(2, {0});
    const std::vector<double> prev{0.0, 0.0};
    for (int k = 0; k < 50; ++k) {
      const CalendarStep s = evolve_calendar(prev, p, rng);
      CHECK(s.h[0] == s.h[1]);
    }
  }

  TEST_CASE("calendar increment correlation matches the analytic value") {
    const ModelParams p = two_lines(0.003, 0.002, 0.6, 0.4, 0.005);
    const double analytic = calendar_increment_correlation(p, 0, 1);
    const double var1 = 0.003 + 0.36 * 0.005;
    const double var2 = 0.002 + 0.16 * 0.005;
    CHECK(analytic == doctest::Approx(0.6 * 0.4 * 0.005 / std::sqrt(var1 * var2)).epsilon(1e-14));

    RandomStream rng(3, {0});
    const int n = 1000000;
    std::vector<double> x(n), y(n);
    const std::vector<double> prev{0.0, 0.0};
    for (int k = 0; k < n; ++k) {
      const CalendarStep s = evolve_calendar(prev, p, rng);
      x[k] = s.h[0];
      y[k] = s.h[1];
    }
    const double se = (1.0 - analytic * analytic) / std::sqrt(n);
    CHECK(std::abs(pearson(x, y) - analytic) < 3.0 * se);
  }

  TEST_CASE("no loadings decouple the lines") {
    const ModelParams p = two_lines(0.01, 0.02, 0.0, 0.0, 0.5);
    CHECK(calendar_increment_correlation(p, 0, 1) == 0.0);
    RandomStream rng(4, {0});
    const int n = 100000;
    std::vector<double> x(n), y(n);
    const std::vector<double> prev{0.0, 0.0};
    for (int k = 0; k < n; ++k) {
      const CalendarStep s = evolve_calendar(prev, p, rng);
      x[k] = s.h[0];
      y[k] = s.h[1];
    }
    CHECK(std::abs(pearson(x, y)) < 3.0 / std::sqrt(n));
  }

  TEST_CASE("smallest Gaussian system") {
    ModelParams p;
    p.lines.resize(1);
    p.lines[0].phi = 0.7;
    const GaussianSystem s = build_gaussian_system(1, 1, p, false);
    CHECK(s.A.rows() == 1);
    CHECK(s.A.cols() == 3);
    CHECK(s.E.rows() == 1);
    CHECK(s.E.cols() == 1);
    CHECK(s.H.rows() == 1);
    CHECK(s.H(0, 0) == 0.7);
  }

  TEST_CASE("common shock covariance block") {
    const ModelParams p = two_lines(0.01, 0.02, 0.6, 0.4, 0.005);
    const GaussianSystem sys = build_gaussian_system(1, 3, p, false);
    const CalendarTransition tr = calendar_transition(2, p);
    const Eigen::MatrixXd v = tr.S * sys.Q_h * tr.S.transpose();
    // rows of h_2 for line 1 and line 2 in the line-major t = 2 block
    CHECK(v(1, 3) == doctest::Approx(0.6 * 0.4 * 0.005).epsilon(1e-15));
    CHECK(v(1, 1) == doctest::Approx(0.01 + 0.36 * 0.005).epsilon(1e-15));
    CHECK(v(0, 0) == 0.0);
  }

  TEST_CASE("R appends a copy of the last calendar factor") {
    const ModelParams p = two_lines(0.01, 0.02, 0.6, 0.4, 0.005);
    const CalendarTransition tr = calendar_transition(4, p);
    Eigen::VectorXd psi(6);
    psi << 1, 2, 3, 10, 20, 30;
    Eigen::VectorXd expected(8);
    expected << 1, 2, 3, 3, 10, 20, 30, 30;
    CHECK(tr.R * psi == expected);
  }

  TEST_CASE("closed-form calendar prior moments") {
    const ModelParams p = two_lines(0.01, 0.02, 0.6, 0.4, 0.005);
    const Eigen::Vector2d m(0.5, 0.1);
    const Eigen::Vector2d v(0.04, 0.09);
    const int dim = 5;
    const GaussianMoments g = calendar_prior_moments(dim, p, m, v);
    const double q1 = 0.01 + 0.36 * 0.005;
    for (int s = 1; s <= dim; ++s) {
      for (int t = 1; t <= dim; ++t) {
        CHECK(g.cov(s - 1, t - 1) == doctest::Approx(std::min(s - 1, t - 1) * q1 + 0.04).epsilon(1e-14));
      }
      CHECK(g.cov(s - 1, dim + s - 1) == doctest::Approx((s - 1) * 0.6 * 0.4 * 0.005 + 0.0).epsilon(1e-14));
    }
    CHECK(g.mean(0) == 0.5);
    CHECK(g.mean(dim) == 0.1);

    // Monte Carlo check through the evolution kernel.
    RandomStream rng(6, {0});
    const int paths = 200000;
    Eigen::MatrixXd draws(2 * dim, paths);
    for (int k = 0; k < paths; ++k) {
      std::vector<double> h{m(0) + std::sqrt(v(0)) * rng.normal(), m(1) + std::sqrt(v(1)) * rng.normal()};
      draws(0, k) = h[0];
      draws(dim, k) = h[1];
      for (int t = 2; t <= dim; ++t) {
        h = evolve_calendar(h, p, rng).h;
        draws(t - 1, k) = h[0];
        draws(dim + t - 1, k) = h[1];
      }
    }
    const Eigen::VectorXd mean = draws.rowwise().mean();
    const Eigen::MatrixXd centred = draws.colwise() - mean;
    const Eigen::MatrixXd cov = centred * centred.transpose() / (paths - 1);
    for (int a = 0; a < 2 * dim; ++a) {
      for (int b = 0; b < 2 * dim; ++b) {
        const double se = std::sqrt((g.cov(a, a) * g.cov(b, b) + g.cov(a, b) * g.cov(a, b)) / paths);
        CHECK(std::abs(cov(a, b) - g.cov(a, b)) < 4.0 * se);
      }
    }
  }

  TEST_CASE("parameter validation") {
    ModelParams p = two_lines(0.01, 0.02, 0.6, 0.4, 0.005);
    CHECK_NOTHROW(p.validate());
    p.lines[1].sigma2_h = -1e-3;
    CHECK_THROWS_AS(p.validate(), InputError);
    p.lines[1].sigma2_h = 0.0;
    p.lines[0].phi = 0.0;
    CHECK_THROWS_AS(p.validate(), InputError);
  }
}
