#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "evoglm/rng.hpp"
#include "evoglm/state_space.hpp"
#include "evoglm/triangle.hpp"
#include "evoglm/tweedie.hpp"

namespace evoglm {

/// Prior law of one static parameter. Parameters are (value) for fixed,
/// (mean, sd) for normal, (meanlog, sdlog) for lognormal, (lo, hi) for
/// uniform.
struct ComponentPrior {
  enum class Dist { fixed, normal, lognormal, uniform };
  Dist dist = Dist::fixed;
  double a = 0.0;
  double b = 0.0;

  static ComponentPrior fixed(double value) { return {Dist::fixed, value, 0.0}; }
  static ComponentPrior normal(double mean, double sd) { return {Dist::normal, mean, sd}; }
  static ComponentPrior lognormal(double meanlog, double sdlog) {
    return {Dist::lognormal, meanlog, sdlog};
  }
  static ComponentPrior uniform(double lo, double hi) { return {Dist::uniform, lo, hi}; }

  bool is_fixed() const noexcept { return dist == Dist::fixed; }
  double draw(RandomStream& rng) const;
};

std::string to_string(ComponentPrior::Dist dist);
ComponentPrior::Dist parse_dist(const std::string& name);

struct LinePrior {
  ComponentPrior sigma2_a = ComponentPrior::fixed(0.0);
  ComponentPrior sigma2_r = ComponentPrior::fixed(0.0);
  ComponentPrior sigma2_s = ComponentPrior::fixed(0.0);
  ComponentPrior sigma2_b1 = ComponentPrior::fixed(0.0);
  ComponentPrior sigma2_b2 = ComponentPrior::fixed(0.0);
  ComponentPrior sigma2_h = ComponentPrior::fixed(0.0);
  ComponentPrior lambda = ComponentPrior::fixed(0.0);
  ComponentPrior phi = ComponentPrior::fixed(1.0);
  ComponentPrior p = ComponentPrior::fixed(1.5);

  /// Normal prior of the first accident-year block.
  Eigen::VectorXd gamma_mean;
  Eigen::MatrixXd gamma_cov;
  /// h_1 ~ Normal(h1_mean, h1_var), ignored when h_1 is anchored at zero.
  double h1_mean = 0.0;
  double h1_var = 0.0;
};

struct PriorSpec {
  std::vector<LinePrior> lines;
  ComponentPrior sigma2_h_tilde = ComponentPrior::fixed(0.0);
  bool extended = false;
  bool anchor_h1 = false;
  ObservationFamily family = ObservationFamily::tweedie;

  int line_count() const noexcept { return static_cast<int>(lines.size()); }
  void validate() const;
  /// Point prior at the given parameters and factor means (covariances zero).
  static PriorSpec point(const ModelParams& params, const FactorState& initial, bool extended,
                         ObservationFamily family);
};

/// Maps the free (non-fixed) parameters to an unconstrained vector:
/// log for variances and phi, logit onto (1, 2) for p, identity for lambda.
class ParameterCodec {
 public:
  enum class Field { sigma2_a, sigma2_r, sigma2_s, sigma2_b1, sigma2_b2, sigma2_h, lambda, phi, p,
                     sigma2_h_tilde };
  struct Slot {
    int line = -1;  // -1 for the shared common-shock variance
    Field field = Field::phi;
    std::string name;
  };

  ParameterCodec() = default;
  explicit ParameterCodec(const PriorSpec& prior);

  int size() const noexcept { return static_cast<int>(slots_.size()); }
  const std::vector<Slot>& slots() const noexcept { return slots_; }
  /// Parameters with every fixed component at its prior value.
  const ModelParams& base() const noexcept { return base_; }

  Eigen::VectorXd encode(const ModelParams& params) const;
  ModelParams decode(const Eigen::Ref<const Eigen::VectorXd>& theta) const;
  /// Natural-scale value of one slot.
  double natural(int slot, double transformed) const;

  static std::string field_name(Field field);
  static double get(const ModelParams& params, const Slot& slot);
  static void set(ModelParams& params, const Slot& slot, double value);

 private:
  std::vector<Slot> slots_;
  ModelParams base_;
};

/// M weighted samples stored column-wise.
struct ParticleCloud {
  Eigen::MatrixXd theta;   // codec.size() x M, transformed scale
  Eigen::MatrixXd psi;     // N*I x M, line-major
  Eigen::MatrixXd gamma;   // N*K x M, current accident-year blocks
  Eigen::VectorXd log_weight;  // raw log omega
  Eigen::VectorXd weight;      // normalized W
  int step = 0;

  int size() const noexcept { return static_cast<int>(log_weight.size()); }
};

struct PfConfig {
  int particles = 1000;
  double xi = 0.98;
  std::uint64_t seed = 1;
  unsigned workers = 0;
  /// Diagonal jitter added to the cloud covariances.
  double jitter = 1e-10;
  /// Keep per-step gamma draws and resampling ancestors (needed to forecast
  /// from particle paths).
  bool keep_paths = true;
  /// ESS below this fraction of M raises a degeneracy warning.
  double degeneracy_fraction = 0.1;
  SeriesOptions series;
};

/// Context shared by the filter operations.
struct PfModel {
  const TrianglePanel* panel = nullptr;
  ParameterCodec codec;
  bool extended = false;
  bool anchor_h1 = false;
  ObservationFamily family = ObservationFamily::tweedie;
  SeriesOptions series;
};

PfModel make_model(const TrianglePanel& panel, const PriorSpec& prior, const SeriesOptions& series = {});

/// Log-likelihood of accident row i given one particle. Unobserved cells
/// contribute zero.
double row_log_likelihood(const PfModel& model, int i, const Eigen::Ref<const Eigen::VectorXd>& gamma,
                          const Eigen::Ref<const Eigen::VectorXd>& psi, const ModelParams& params);

/// Draws parameters, calendar paths and first-row blocks from the prior and
/// weights each particle by the row-1 likelihood.
ParticleCloud initialize(const PfModel& model, const PriorSpec& prior, const PfConfig& config);

struct Lookahead {
  Eigen::MatrixXd theta;
  Eigen::MatrixXd psi;
  Eigen::MatrixXd gamma;
  Eigen::VectorXd log_likelihood;  // f(Y_i | look-ahead), filled by lookahead_weights
};

/// theta~ = xi theta + (1 - xi) mean, same for psi; gamma~ = gamma.
/// Means are weighted by the cloud's normalized weights.
Lookahead shrink_lookahead(const ParticleCloud& cloud, double xi);

/// log omega~ = log omega_{i-1} + log f(Y_i | look-ahead). Stores the
/// likelihood term in `ahead`.
Eigen::VectorXd lookahead_weights(const PfModel& model, const ParticleCloud& cloud, Lookahead& ahead,
                                  int i, unsigned workers = 1);

/// Log-sum-exp normalization. Throws NumericalError if no weight is finite.
Eigen::VectorXd normalize(const Eigen::VectorXd& log_weights);

double ess(const Eigen::VectorXd& weights);

/// Systematic resampling with the single uniform u in (0, 1).
std::vector<int> systematic_resample(const Eigen::VectorXd& weights, double u);
std::vector<int> resample(const Eigen::VectorXd& weights, RandomStream& rng);

/// Moves a resampled cloud: theta and psi jitter around their look-ahead
/// with covariance (1 - xi^2) times the previous cloud covariance, gamma
/// takes one random-walk step.
struct Rejuvenation {
  Eigen::MatrixXd theta_cov;
  Eigen::MatrixXd psi_cov;
};

Rejuvenation cloud_covariances(const ParticleCloud& cloud, double jitter);

ParticleCloud rejuvenate(const PfModel& model, const Lookahead& ahead, const std::vector<int>& ancestors,
                         const Rejuvenation& cov, double xi, std::uint64_t seed, int step,
                         unsigned workers = 1);

/// log omega_i = log f(Y_i | filtered) - log f(Y_i | look-ahead of the
/// ancestor). Returns the number of zero look-ahead likelihoods.
int correction_weights(const PfModel& model, ParticleCloud& cloud, const Lookahead& ahead,
                       const std::vector<int>& ancestors, int i, unsigned workers = 1);

/// Weighted mean, sd and 5%/95% quantiles per row of x.
struct CloudSummary {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
  Eigen::VectorXd q05;
  Eigen::VectorXd q95;
};

CloudSummary summarize_rows(const Eigen::MatrixXd& x, const Eigen::VectorXd& w);

struct PfStep {
  int step = 0;
  double ess = 0.0;
  double ess_lookahead = 0.0;
  int zero_lookahead = 0;
  CloudSummary gamma;
  CloudSummary psi;
  CloudSummary params;  // natural scale, codec slot order
};

struct PfResult {
  std::vector<PfStep> steps;
  ParticleCloud cloud;
  PfModel model;
  /// gamma_history[i-1] is the N*K x M matrix of step-i filtered blocks;
  /// ancestors[i-1] maps step-i particles to step-(i-1) particles (empty
  /// for step 1).
  std::vector<Eigen::MatrixXd> gamma_history;
  std::vector<std::vector<int>> ancestors;
  std::vector<std::string> warnings;

  /// Accident-year blocks of particle m traced back through its ancestors:
  /// N*K x I, column i-1 is the row-i block.
  Eigen::MatrixXd gamma_path(int m) const;
  std::vector<std::string> param_names() const;
};

PfResult run(const TrianglePanel& panel, const PriorSpec& prior, const PfConfig& config);

/// Names of the stacked gamma and psi entries, e.g. "a[1]", "h[3][2]"
/// (line, calendar index).
std::vector<std::string> gamma_entry_names(int lines, bool extended);
std::vector<std::string> psi_entry_names(int lines, int dim);

}  // namespace evoglm
