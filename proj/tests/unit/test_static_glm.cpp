#include <cmath>
#include <numeric>

#include "doctest.h"
#include "evoglm/error.hpp"
#include "evoglm/static_glm.hpp"
#include "evoglm/tweedie.hpp"
#include "support.hpp"

using namespace evoglm;

namespace {

// Hoerl-shaped incremental triangle with multiplicative noise.
TrianglePanel hoerl_panel(int dim, std::uint64_t seed, double noise) {
  RandomStream rng(seed, {0});
  LineTriangle t(dim, "hoerl");
  for (int i = 1; i <= dim; ++i) {
    const double a = 7.0 + 0.05 * i;
    for (int j = 1; j <= dim - i + 1; ++j) {
      const double eta = a + 1.2 * std::log(j) - 0.7 * j;
      t.set(i, j, std::exp(eta + noise * rng.normal()));
    }
  }
  return TrianglePanel({t}, ClaimKind::incremental, ClaimScale::raw);
}

double sse(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& beta) {
  return (y.array() - (X * beta).array().exp()).square().sum();
}

}  // namespace

TEST_SUITE("static_glm") {
  TEST_CASE("intercept-only fit returns the sample mean") {
    const Eigen::MatrixXd X = Eigen::MatrixXd::Ones(2, 1);
    const Eigen::VectorXd y = Eigen::Vector2d(2.0, 4.0);
    for (double p : {0.0, 1.0, 1.5, 2.0}) {
      const GlmFit fit = fit_irls(X, y, p);
      CHECK(fit.coefficients(0) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
      CHECK(fit.cells[0].mu == doctest::Approx(3.0).epsilon(1e-12));
    }
  }

  TEST_CASE("Gaussian log-link fit is a least-squares optimum") {
    const TrianglePanel panel = hoerl_panel(5, 11, 0.2);
    const LineDesign d = build_line_design(panel, 0, MeanStructure::hoerl);
    const GlmFit fit = fit_irls(d.X, d.y, 0.0);
    const double base = sse(d.X, d.y, fit.coefficients);
    // Central-difference gradient of the squared error vanishes relative to
    // its scale, and no coordinate step lowers the objective.
    for (Eigen::Index k = 0; k < fit.coefficients.size(); ++k) {
      const double h = 1e-6;
      Eigen::VectorXd up = fit.coefficients;
      Eigen::VectorXd down = fit.coefficients;
      up(k) += h;
      down(k) -= h;
      const double grad = (sse(d.X, d.y, up) - sse(d.X, d.y, down)) / (2.0 * h);
      CHECK(std::abs(grad) < 1e-6 * std::max(1.0, base));
      up(k) += 1e-3;
      down(k) -= 1e-3;
      CHECK(sse(d.X, d.y, up) >= base);
      CHECK(sse(d.X, d.y, down) >= base);
    }
  }

  TEST_CASE("noise-free data recovers the generating coefficients") {
    const TrianglePanel panel = hoerl_panel(8, 1, 0.0);
    const GlmFit fit = fit_line(panel, 0, MeanStructure::hoerl, 1.5);
    CHECK(fit.coefficient("r") == doctest::Approx(1.2).epsilon(1e-8));
    CHECK(fit.coefficient("s") == doctest::Approx(-0.7).epsilon(1e-8));
    for (int i = 1; i <= 8; ++i) {
      CHECK(fit.coefficient("a" + std::to_string(i)) == doctest::Approx(7.0 + 0.05 * i).epsilon(1e-8));
    }
  }

  TEST_CASE("score equations hold at convergence") {
    const TrianglePanel panel = hoerl_panel(10, 4, 0.3);
    for (double p : {1.0, 1.3, 1.7, 2.0}) {
      const LineDesign d = build_line_design(panel, 0, MeanStructure::hoerl);
      const GlmFit fit = fit_irls(d.X, d.y, p);
      Eigen::VectorXd r(d.y.size());
      double scale = 0.0;
      for (Eigen::Index k = 0; k < d.y.size(); ++k) {
        const double mu = fit.cells[static_cast<std::size_t>(k)].mu;
        r(k) = (d.y(k) - mu) * std::pow(mu, 1.0 - p);
        scale = std::max(scale, std::abs(r(k)));
      }
      const Eigen::VectorXd score = d.X.transpose() * r;
      CHECK(score.cwiseAbs().maxCoeff() < 1e-8 * std::max(1.0, scale));
    }
  }

  TEST_CASE("indicator covariates never increase the deviance") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const TrianglePanel panel = hoerl_panel(10, seed, 0.3);
      const GlmFit base = fit_line(panel, 0, MeanStructure::hoerl, 1.5);
      const GlmFit ext = fit_line(panel, 0, MeanStructure::hoerl_extended, 1.5);
      CHECK(ext.deviance <= base.deviance * (1.0 + 1e-10));
    }
  }

  TEST_CASE("fit does not depend on observation order") {
    const TrianglePanel panel = hoerl_panel(7, 8, 0.25);
    const LineDesign d = build_line_design(panel, 0, MeanStructure::hoerl);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(d.y.size()));
    std::iota(order.begin(), order.end(), 0);
    std::reverse(order.begin(), order.end());
    Eigen::MatrixXd X(d.X.rows(), d.X.cols());
    Eigen::VectorXd y(d.y.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
      X.row(static_cast<Eigen::Index>(k)) = d.X.row(order[k]);
      y(static_cast<Eigen::Index>(k)) = d.y(order[k]);
    }
    const GlmFit a = fit_irls(d.X, d.y, 1.5);
    const GlmFit b = fit_irls(X, y, 1.5);
    CHECK((a.coefficients - b.coefficients).cwiseAbs().maxCoeff() < 1e-9);
  }

  TEST_CASE("singular design is reported") {
    Eigen::MatrixXd X(3, 2);
    X << 1, 1, 1, 1, 1, 1;
    const Eigen::VectorXd y = Eigen::Vector3d(1.0, 2.0, 3.0);
    CHECK_THROWS_AS(fit_irls(X, y, 1.5), NumericalError);
  }

  TEST_CASE("too few observations are rejected") {
    const Eigen::MatrixXd X = Eigen::MatrixXd::Ones(1, 2);
    const Eigen::VectorXd y = Eigen::VectorXd::Ones(1);
    CHECK_THROWS_AS(fit_irls(X, y, 1.5), InputError);
  }

  TEST_CASE("Pearson residuals follow their definition") {
    const TrianglePanel panel = hoerl_panel(6, 3, 0.3);
    const GlmFit fit = fit_line(panel, 0, MeanStructure::hoerl, 1.4);
    for (const auto& c : fit.cells) {
      CHECK(c.pearson == doctest::Approx((c.y - c.mu) / std::sqrt(std::pow(c.mu, 1.4))).epsilon(1e-14));
    }
  }

  TEST_CASE("perfect fit has zero residuals") {
    const TrianglePanel panel = hoerl_panel(6, 3, 0.0);
    const GlmFit fit = fit_line(panel, 0, MeanStructure::hoerl, 1.5);
    const ResidualSummary r = pearson_residuals(fit, 6);
    for (const auto& c : r.cells) CHECK(std::abs(c.pearson) < 1e-6);
    for (double v : r.calendar) CHECK(std::abs(v) < 1e-8);
  }

  TEST_CASE("single-cell calendar year with y = 2 mu gives 1") {
    GlmFit fit;
    fit.cells = {{1, 1, 2.0, 1.0, 0.0}, {1, 2, 3.0, 3.0, 0.0}, {2, 1, 3.0, 3.0, 0.0}};
    const ResidualSummary r = pearson_residuals(fit, 2);
    CHECK(r.calendar[0] == 1.0);
    CHECK(r.calendar[1] == 0.0);
  }

  TEST_CASE("calendar residuals of a chain-ladder Gaussian fit match a recomputation") {
    const TrianglePanel panel = hoerl_panel(6, 21, 0.2);
    const GlmFit fit = fit_line(panel, 0, MeanStructure::chain_ladder, 0.0);
    const ResidualSummary r = pearson_residuals(fit, 6);
    for (int t = 1; t <= 6; ++t) {
      double y = 0.0;
      double mu = 0.0;
      for (const auto& c : fit.cells) {
        if (c.i + c.j - 1 != t) continue;
        y += c.y;
        mu += c.mu;
      }
      CHECK(r.calendar[static_cast<std::size_t>(t - 1)] == doctest::Approx((y - mu) / mu).epsilon(1e-13));
    }
  }

  TEST_CASE("power profile picks the generating power") {
    // Gamma-noise data: variance proportional to mu^2.
    RandomStream rng(31, {0});
    std::vector<LineTriangle> lines;
    for (int n = 0; n < 2; ++n) {
      LineTriangle t(12);
      for (int i = 1; i <= 12; ++i) {
        for (int j = 1; j <= 13 - i; ++j) {
          const double mu = std::exp(6.0 + 1.2 * std::log(j) - 0.7 * j);
          t.set(i, j, sample(mu, {1.9, 0.05}, rng));
        }
      }
      lines.push_back(t);
    }
    const TrianglePanel panel(lines, ClaimKind::incremental, ClaimScale::raw);
    const double p = profile_power(panel, MeanStructure::hoerl, {1.1, 1.3, 1.5, 1.7, 1.9});
    CHECK(p >= 1.7);
  }

  TEST_CASE("gamma prior hand-off") {
    const TrianglePanel panel = hoerl_panel(8, 5, 0.1);
    const GlmFit fit = fit_line(panel, 0, MeanStructure::hoerl, 1.5);
    const GammaPrior prior = gamma_prior_from_fit(fit, MeanStructure::hoerl, 0.5, 4.0);
    REQUIRE(prior.mean.size() == 3);
    CHECK(prior.mean(0) == doctest::Approx(fit.coefficient("a1") - 0.5));
    CHECK(prior.mean(1) == fit.coefficient("r"));
    CHECK(prior.mean(2) == fit.coefficient("s"));
    const auto r = static_cast<Eigen::Index>(std::find(fit.names.begin(), fit.names.end(), "r") - fit.names.begin());
    CHECK(prior.cov(1, 1) == doctest::Approx(4.0 * fit.covariance(r, r)));
    CHECK_THROWS_AS(gamma_prior_from_fit(fit, MeanStructure::chain_ladder, 0.0), InputError);
  }
}
