#include <cmath>
#include <numbers>
#include <limits>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "doctest.h"
#include "evoglm/error.hpp"
#include "evoglm/tweedie.hpp"
#include "oracle/tweedie_series.hpp"

using namespace evoglm;

TEST_SUITE("edf_models") {
  TEST_CASE("variance function") {
    CHECK(variance(2.0, {0.0, 3.0}) == 3.0);
    CHECK(variance(2.0, {2.0, 1.0}) == 4.0);
    CHECK(variance(5.0, {1.27, 0.4}) == doctest::Approx(0.4 * std::pow(5.0, 1.27)).epsilon(1e-15));
  }

  TEST_CASE("unsupported powers and dispersions are rejected") {
    CHECK_THROWS_AS(validate({0.5, 1.0}), InputError);
    CHECK_THROWS_AS(validate({2.5, 1.0}), InputError);
    CHECK_THROWS_AS(validate({1.5, 0.0}), InputError);
    CHECK_THROWS_AS(validate({1.5, -1.0}), InputError);
    CHECK_NOTHROW(validate({1.0, 1.0}));
  }

  TEST_CASE("standard normal at its mode") {
    CHECK(log_pdf(0.0, 0.0, {0.0, 1.0}) == doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-15));
    CHECK(log_pdf(0.0, 0.0, {0.0, 1.0}) == doctest::Approx(-0.91894).epsilon(1e-5));
  }

  TEST_CASE("unit exponential at one") {
    CHECK(log_pdf(1.0, 1.0, {2.0, 1.0}) == doctest::Approx(-1.0).epsilon(1e-15));
  }

  TEST_CASE("gamma member matches the closed form") {
    const double mu = 3.0;
    const double phi = 0.5;
    const double y = 2.2;
    const double shape = 1.0 / phi;
    const double scale = phi * mu;
    const double expected = (shape - 1.0) * std::log(y) - y / scale - std::lgamma(shape) - shape * std::log(scale);
    CHECK(log_pdf(y, mu, {2.0, phi}) == doctest::Approx(expected).epsilon(1e-14));
  }

  TEST_CASE("zero mass of the compound member") {
    CHECK(log_pdf(0.0, 1.0, {1.5, 1.0}) == -2.0);
    for (double p : {1.1, 1.27, 1.5, 1.9}) {
      for (double mu : {0.5, 5.0, 50.0}) {
        for (double phi : {0.4, 2.0}) {
          const double lambda = std::pow(mu, 2.0 - p) / (phi * (2.0 - p));
          CHECK(std::exp(log_pdf(0.0, mu, {p, phi})) == std::exp(-lambda));
        }
      }
    }
  }

  TEST_CASE("compound density against the extended-precision series") {
    const double expected = oracle::compound_log_density(3.0, 5.0, 1.27, 0.4);
    CHECK(std::abs(log_pdf(3.0, 5.0, {1.27, 0.4}) - expected) < 1e-10);
    for (double y : {0.05, 1.0, 12.0}) {
      const double e = oracle::compound_log_density(y, 2.0, 1.6, 1.3);
      CHECK(std::abs(log_pdf(y, 2.0, {1.6, 1.3}) - e) < 1e-10);
    }
  }

  TEST_CASE("phi-scaled Poisson on the lattice") {
    const double phi = 0.5;
    const double mu = 3.0;
    const double rate = mu / phi;
    CHECK(log_pdf(2.0, mu, {1.0, phi}) == doctest::Approx(4.0 * std::log(rate) - rate - std::lgamma(5.0)).epsilon(1e-14));
    CHECK_THROWS_AS(log_pdf(0.3, mu, {1.0, phi}), InputError);
  }

  TEST_CASE("densities integrate to one") {
    using boost::math::quadrature::tanh_sinh;
    struct Point {
      double p, mu, phi;
    };
    for (const Point g : {Point{1.5, 1.0, 1.0}, Point{1.27, 5.0, 0.4}, Point{1.9, 2.0, 2.0}, Point{1.1, 5.0, 0.4},
                          Point{1.7, 50.0, 2.0}}) {
      const TweedieDensity d({g.p, g.phi});
      auto f = [&](double y) { return std::exp(d.log_pdf(y, g.mu)); };
      // The series is capped at 5000 terms, so the far tail is cut at 60 sd
      // where the remaining mass is far below the tolerance.
      const double upper = g.mu + 60.0 * std::sqrt(variance(g.mu, {g.p, g.phi}));
      tanh_sinh<double> quad;
      const double body = quad.integrate(f, 0.0, g.mu, 1e-12);
      const double rest = quad.integrate(f, g.mu, upper, 1e-12);
      const double total = std::exp(d.log_pdf(0.0, g.mu)) + body + rest;
      INFO("p=" << g.p << " mu=" << g.mu << " phi=" << g.phi);
      CHECK(std::abs(total - 1.0) < 1e-6);
    }
  }

  TEST_CASE("log density is continuous in p") {
    for (double p = 1.05; p < 1.95; p += 0.1) {
      const double a = log_pdf(2.5, 3.0, {p, 0.7});
      const double b = log_pdf(2.5, 3.0, {p + 1e-4, 0.7});
      CHECK(std::abs(a - b) < 1e-2);
    }
  }

  TEST_CASE("near-degenerate normal draws sit on the mean") {
    RandomStream rng(1, {0});
    for (int k = 0; k < 1000; ++k) CHECK(std::abs(sample(7.0, {0.0, 1e-12}, rng) - 7.0) < 1e-5);
  }

  TEST_CASE("empirical zero mass matches exp(-lambda)") {
    RandomStream rng(2, {0});
    const int n = 1000000;
    int zeros = 0;
    for (int k = 0; k < n; ++k) zeros += sample(1.0, {1.5, 1.0}, rng) == 0.0 ? 1 : 0;
    const double p0 = std::exp(-2.0);
    const double se = std::sqrt(p0 * (1.0 - p0) / n);
    CHECK(std::abs(static_cast<double>(zeros) / n - p0) < 3.0 * se);
  }

  TEST_CASE("sample mean and variance") {
    const TweedieSpec spec{1.27, 0.4};
    const double mu = 5.0;
    RandomStream rng(3, {0});
    const int n = 1000000;
    double s = 0.0;
    double s2 = 0.0;
    for (int k = 0; k < n; ++k) {
      const double y = sample(mu, spec, rng);
      s += y;
      s2 += y * y;
    }
    const double mean = s / n;
    const double var = s2 / n - mean * mean;
    const double sd = std::sqrt(variance(mu, spec));
    CHECK(std::abs(mean - mu) < 3.0 * sd / 1000.0);
    CHECK(std::abs(var / variance(mu, spec) - 1.0) < 0.01);
  }
}
