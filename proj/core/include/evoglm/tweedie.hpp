#pragma once

#include "evoglm/rng.hpp"

namespace evoglm {

/// Tweedie exponential-dispersion member with variance phi * mu^p.
/// Supported powers: p = 0 (normal), p = 1 (phi-scaled Poisson),
/// 1 < p < 2 (compound Poisson-gamma), p = 2 (gamma).
struct TweedieSpec {
  double p = 1.5;
  double phi = 1.0;
};

/// Throws InputError unless p is in {0} U [1, 2] and phi > 0.
void validate(const TweedieSpec& spec);

double variance(double mu, const TweedieSpec& spec);

/// Truncation controls for the compound Poisson-gamma series.
struct SeriesOptions {
  /// Terms more than this many log-units below the running maximum stop the
  /// walk in that direction.
  double log_cutoff = 37.0;
  int max_terms = 5000;
};

/// Log-density (log-probability on the lattice for p = 1, log-probability of
/// the atom at y = 0 for 1 < p < 2).
double log_pdf(double y, double mu, const TweedieSpec& spec, const SeriesOptions& options = {});

/// Draw from the Tweedie distribution. For 1 < p < 2 this is a Poisson number
/// of gamma jumps.
double sample(double mu, const TweedieSpec& spec, RandomStream& rng);

/// Log-density evaluator with the per-(p, phi) constants precomputed. The
/// particle filter builds one per particle and line at every step.
class TweedieDensity {
 public:
  explicit TweedieDensity(const TweedieSpec& spec, const SeriesOptions& options = {});

  double log_pdf(double y, double mu) const;
  const TweedieSpec& spec() const noexcept { return spec_; }

 private:
  double compound_log_pdf(double y, double mu) const;

  TweedieSpec spec_;
  SeriesOptions options_;
  double alpha_ = 0.0;         // gamma shape per jump, (2-p)/(p-1)
  double log_phi_ = 0.0;
};

}  // namespace evoglm
