#include "evoglm/tweedie.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "evoglm/error.hpp"

namespace evoglm {
namespace {

// glibc's lgamma writes the global signgam; lgamma_r does not.
double log_gamma(double x) {
  int sign = 0;
  return ::lgamma_r(x, &sign);
}

bool is_compound(double p) { return p > 1.0 && p < 2.0; }

}  // namespace

void validate(const TweedieSpec& spec) {
  const double p = spec.p;
  if (!(p == 0.0 || (p >= 1.0 && p <= 2.0))) {
    throw InputError("unsupported Tweedie power p=" + std::to_string(p));
  }
  if (!(spec.phi > 0.0) || !std::isfinite(spec.phi)) {
    throw InputError("Tweedie dispersion must be positive");
  }
}

double variance(double mu, const TweedieSpec& spec) {
  validate(spec);
  if (spec.p == 0.0) return spec.phi;
  if (!(mu > 0.0)) throw InputError("Tweedie mean must be positive for p > 0");
  return spec.phi * std::pow(mu, spec.p);
}

TweedieDensity::TweedieDensity(const TweedieSpec& spec, const SeriesOptions& options)
    : spec_(spec), options_(options) {
  validate(spec_);
  log_phi_ = std::log(spec_.phi);
  if (is_compound(spec_.p)) alpha_ = (2.0 - spec_.p) / (spec_.p - 1.0);
}

double TweedieDensity::log_pdf(double y, double mu) const {
  const double p = spec_.p;
  const double phi = spec_.phi;
  if (p == 0.0) {
    const double z = y - mu;
    return -0.5 * (std::log(2.0 * std::numbers::pi) + log_phi_) - 0.5 * z * z / phi;
  }
  if (!(mu > 0.0)) throw InputError("Tweedie mean must be positive for p > 0");
  if (p == 2.0) {
    if (!(y > 0.0)) throw InputError("gamma observation must be positive");
    const double shape = 1.0 / phi;
    const double scale = phi * mu;
    return (shape - 1.0) * std::log(y) - y / scale - log_gamma(shape) - shape * std::log(scale);
  }
  if (p == 1.0) {
    if (y < 0.0) throw InputError("Poisson-type observation must be nonnegative");
    const double k = y / phi;
    const double kr = std::round(k);
    if (std::abs(k - kr) > 1e-9 * std::max(1.0, k)) {
      throw InputError("observation off the phi-lattice for p=1");
    }
    const double rate = mu / phi;
    return kr * std::log(rate) - rate - log_gamma(kr + 1.0);
  }
  if (y < 0.0) throw InputError("compound Poisson-gamma observation must be nonnegative");
  return compound_log_pdf(y, mu);
}

double TweedieDensity::compound_log_pdf(double y, double mu) const {
  const double p = spec_.p;
  const double phi = spec_.phi;
  const double lambda = std::pow(mu, 2.0 - p) / (phi * (2.0 - p));
  if (y == 0.0) return -lambda;

  // Jump sizes are Gamma(alpha, scale) with scale = phi (p-1) mu^(p-1).
  const double alpha = alpha_;
  const double log_scale = log_phi_ + std::log(p - 1.0) + (p - 1.0) * std::log(mu);
  const double log_y = std::log(y);
  const double log_lambda = std::log(lambda);
  const double y_over_scale = y / std::exp(log_scale);

  auto term = [&](double k) {
    return -lambda + k * log_lambda - log_gamma(k + 1.0) + (k * alpha - 1.0) * log_y -
           y_over_scale - log_gamma(k * alpha) - k * alpha * log_scale;
  };

  // Start at the approximate mode of the Poisson-weighted terms and walk
  // outwards in both directions.
  const double mode = std::pow(y, 2.0 - p) / (phi * (2.0 - p));
  const double k0 = std::max(1.0, std::round(mode));
  double max_term = term(k0);
  double sum = 1.0;  // relative to max_term
  int terms = 1;

  auto accumulate = [&](double t) {
    if (t > max_term) {
      sum = sum * std::exp(max_term - t) + 1.0;
      max_term = t;
    } else {
      sum += std::exp(t - max_term);
    }
  };

  bool converged_up = false;
  for (double k = k0 + 1.0; terms < options_.max_terms; k += 1.0) {
    const double t = term(k);
    accumulate(t);
    ++terms;
    if (t < max_term - options_.log_cutoff) {
      converged_up = true;
      break;
    }
  }
  bool converged_down = k0 <= 1.0;
  for (double k = k0 - 1.0; k >= 1.0 && terms < options_.max_terms; k -= 1.0) {
    const double t = term(k);
    accumulate(t);
    ++terms;
    if (t < max_term - options_.log_cutoff || k == 1.0) {
      converged_down = true;
      break;
    }
  }
  if (!converged_up || !converged_down) {
    throw NumericalError("Tweedie series did not converge within " +
                         std::to_string(options_.max_terms) + " terms");
  }
  return max_term + std::log(sum);
}

double log_pdf(double y, double mu, const TweedieSpec& spec, const SeriesOptions& options) {
  return TweedieDensity(spec, options).log_pdf(y, mu);
}

double sample(double mu, const TweedieSpec& spec, RandomStream& rng) {
  validate(spec);
  const double p = spec.p;
  const double phi = spec.phi;
  if (p == 0.0) return rng.normal(mu, std::sqrt(phi));
  if (!(mu > 0.0)) throw InputError("Tweedie mean must be positive for p > 0");
  if (p == 2.0) {
    std::gamma_distribution<double> g(1.0 / phi, phi * mu);
    return g(rng);
  }
  if (p == 1.0) {
    std::poisson_distribution<long long> pois(mu / phi);
    return phi * static_cast<double>(pois(rng));
  }
  const double lambda = std::pow(mu, 2.0 - p) / (phi * (2.0 - p));
  const double alpha = (2.0 - p) / (p - 1.0);
  const double scale = phi * (p - 1.0) * std::pow(mu, p - 1.0);
  std::poisson_distribution<long long> pois(lambda);
  const long long jumps = pois(rng);
  if (jumps == 0) return 0.0;
  // Sum of `jumps` iid Gamma(alpha, scale) is Gamma(jumps * alpha, scale).
  std::gamma_distribution<double> g(static_cast<double>(jumps) * alpha, scale);
  return g(rng);
}

}  // namespace evoglm
