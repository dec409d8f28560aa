#pragma once

#include <algorithm>
#include <cmath>

#include <boost/multiprecision/cpp_bin_float.hpp>

namespace evoglm::oracle {

using Real = boost::multiprecision::cpp_bin_float_50;

// Compound Poisson-gamma density at y > 0 by plain summation of
// Pois(k; lambda) * Gamma(y; k alpha, scale) from k = 1 in 50-digit
// arithmetic. Summation stops once past the largest term and the terms have
// fallen below 1e-60 of the running total, with at least 1000 terms.
inline Real compound_density(double y_in, double mu_in, double p_in, double phi_in) {
  const Real y(y_in);
  const Real mu(mu_in);
  const Real p(p_in);
  const Real phi(phi_in);
  const Real lambda = pow(mu, 2 - p) / (phi * (2 - p));
  const Real alpha = (2 - p) / (p - 1);
  const Real scale = phi * (p - 1) * pow(mu, p - 1);
  const Real log_lambda = log(lambda);
  const Real log_y = log(y);
  const Real log_scale = log(scale);
  const Real y_over_scale = y / scale;

  Real total = 0;
  Real best = 0;
  bool past_peak = false;
  Real log_fact = 0;  // log k!
  for (int k = 1; k <= 200000; ++k) {
    log_fact += log(Real(k));
    const Real ka = alpha * k;
    const Real log_term = -lambda + log_lambda * k - log_fact + (ka - 1) * log_y - y_over_scale -
                          boost::multiprecision::lgamma(ka) - ka * log_scale;
    const Real term = exp(log_term);
    total += term;
    if (term > best) {
      best = term;
    } else {
      past_peak = true;
    }
    if (k >= 1000 && past_peak && term < total * Real("1e-60")) break;
  }
  return total;
}

inline double compound_log_density(double y, double mu, double p, double phi) {
  return static_cast<double>(log(compound_density(y, mu, p, phi)));
}

}  // namespace evoglm::oracle
