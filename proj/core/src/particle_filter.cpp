#include "evoglm/particle_filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "evoglm/error.hpp"
#include "evoglm/linalg.hpp"
#include "evoglm/parallel.hpp"

namespace evoglm {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool is_variance(ParameterCodec::Field f) {
  using F = ParameterCodec::Field;
  return f != F::lambda && f != F::p;
}

const char* field_name(ParameterCodec::Field f) {
  using F = ParameterCodec::Field;
  switch (f) {
    case F::sigma2_a: return "sigma2_a";
    case F::sigma2_r: return "sigma2_r";
    case F::sigma2_s: return "sigma2_s";
    case F::sigma2_b1: return "sigma2_b1";
    case F::sigma2_b2: return "sigma2_b2";
    case F::sigma2_h: return "sigma2_h";
    case F::lambda: return "lambda";
    case F::phi: return "phi";
    case F::p: return "p";
    case F::sigma2_h_tilde: return "sigma2_h_tilde";
  }
  return "?";
}

const ComponentPrior& component(const LinePrior& lp, ParameterCodec::Field f) {
  using F = ParameterCodec::Field;
  switch (f) {
    case F::sigma2_a: return lp.sigma2_a;
    case F::sigma2_r: return lp.sigma2_r;
    case F::sigma2_s: return lp.sigma2_s;
    case F::sigma2_b1: return lp.sigma2_b1;
    case F::sigma2_b2: return lp.sigma2_b2;
    case F::sigma2_h: return lp.sigma2_h;
    case F::lambda: return lp.lambda;
    case F::phi: return lp.phi;
    case F::p: return lp.p;
    case F::sigma2_h_tilde: break;
  }
  throw InputError("not a per-line field");
}

std::vector<ParameterCodec::Field> line_fields(bool extended) {
  using F = ParameterCodec::Field;
  std::vector<F> f = {F::sigma2_a, F::sigma2_r, F::sigma2_s};
  if (extended) f.insert(f.end(), {F::sigma2_b1, F::sigma2_b2});
  f.insert(f.end(), {F::sigma2_h, F::lambda, F::phi, F::p});
  return f;
}

bool valid_natural(ParameterCodec::Field f, double v) {
  if (!std::isfinite(v)) return false;
  if (f == ParameterCodec::Field::p) return v > 1.0 && v < 2.0;
  if (f == ParameterCodec::Field::phi) return v > 0.0;
  if (is_variance(f)) return v > 0.0;
  return true;
}

// A valid interior value of a free component, used where a parameter vector
// is needed before any draw.
double centre(const ComponentPrior& c) {
  switch (c.dist) {
    case ComponentPrior::Dist::uniform:
      return 0.5 * (c.a + c.b);
    case ComponentPrior::Dist::lognormal:
      return std::exp(c.a);
    default:
      return c.a;
  }
}

double safe_row_loglik(const PfModel& model, int i, const Eigen::Ref<const Eigen::VectorXd>& gamma,
                       const Eigen::Ref<const Eigen::VectorXd>& psi, const ModelParams& params) {
  try {
    const double ll = row_log_likelihood(model, i, gamma, psi, params);
    return std::isnan(ll) ? kNegInf : ll;
  } catch (const NumericalError&) {
    return kNegInf;
  } catch (const InputError&) {
    return kNegInf;
  }
}

double weighted_quantile(std::vector<std::pair<double, double>>& vw, double level) {
  std::sort(vw.begin(), vw.end());
  double cum = 0.0;
  for (const auto& [v, w] : vw) {
    cum += w;
    if (cum >= level) return v;
  }
  return vw.back().first;
}

}  // namespace

std::string to_string(ComponentPrior::Dist dist) {
  switch (dist) {
    case ComponentPrior::Dist::fixed: return "fixed";
    case ComponentPrior::Dist::normal: return "normal";
    case ComponentPrior::Dist::lognormal: return "lognormal";
    case ComponentPrior::Dist::uniform: return "uniform";
  }
  return "fixed";
}

ComponentPrior::Dist parse_dist(const std::string& name) {
  if (name == "fixed") return ComponentPrior::Dist::fixed;
  if (name == "normal") return ComponentPrior::Dist::normal;
  if (name == "lognormal") return ComponentPrior::Dist::lognormal;
  if (name == "uniform") return ComponentPrior::Dist::uniform;
  throw InputError("unknown prior distribution '" + name + "'");
}

double ComponentPrior::draw(RandomStream& rng) const {
  switch (dist) {
    case Dist::fixed: return a;
    case Dist::normal: return rng.normal(a, b);
    case Dist::lognormal: return std::exp(rng.normal(a, b));
    case Dist::uniform: return a + (b - a) * rng.uniform();
  }
  return a;
}

void PriorSpec::validate() const {
  if (lines.empty()) throw InputError("prior has no lines");
  const int k = gamma_block_size(extended);
  auto check = [](const ComponentPrior& c, const std::string& what) {
    if (c.dist == ComponentPrior::Dist::uniform && !(c.b > c.a)) {
      throw InputError(what + ": uniform prior needs lo < hi");
    }
    if ((c.dist == ComponentPrior::Dist::normal || c.dist == ComponentPrior::Dist::lognormal) &&
        !(c.b > 0.0)) {
      throw InputError(what + ": prior sd must be positive");
    }
  };
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const auto& lp = lines[n];
    const std::string tag = "line " + std::to_string(n + 1);
    if (lp.gamma_mean.size() != k || lp.gamma_cov.rows() != k || lp.gamma_cov.cols() != k) {
      throw InputError(tag + ": gamma prior must have length " + std::to_string(k));
    }
    if (min_eigenvalue(lp.gamma_cov) < -1e-10 * std::max(1.0, lp.gamma_cov.diagonal().maxCoeff())) {
      throw InputError(tag + ": gamma prior covariance is not PSD");
    }
    if (!(lp.h1_var >= 0.0)) throw InputError(tag + ": h1 variance must be >= 0");
    for (auto f : line_fields(true)) check(component(lp, f), tag + " " + field_name(f));
    if (family == ObservationFamily::gaussian && !(lp.p.is_fixed())) {
      throw InputError(tag + ": p must be fixed for the gaussian family");
    }
    if (lp.phi.is_fixed() && !(lp.phi.a > 0.0)) throw InputError(tag + ": phi must be > 0");
  }
  check(sigma2_h_tilde, "sigma2_h_tilde");
}

PriorSpec PriorSpec::point(const ModelParams& params, const FactorState& initial, bool extended,
                           ObservationFamily family) {
  PriorSpec prior;
  prior.extended = extended;
  prior.family = family;
  prior.sigma2_h_tilde = ComponentPrior::fixed(params.sigma2_h_tilde);
  const int k = gamma_block_size(extended);
  for (int n = 0; n < params.line_count(); ++n) {
    const auto& l = params.lines[static_cast<std::size_t>(n)];
    LinePrior lp;
    lp.sigma2_a = ComponentPrior::fixed(l.sigma2_a);
    lp.sigma2_r = ComponentPrior::fixed(l.sigma2_r);
    lp.sigma2_s = ComponentPrior::fixed(l.sigma2_s);
    lp.sigma2_b1 = ComponentPrior::fixed(l.sigma2_b1);
    lp.sigma2_b2 = ComponentPrior::fixed(l.sigma2_b2);
    lp.sigma2_h = ComponentPrior::fixed(l.sigma2_h);
    lp.lambda = ComponentPrior::fixed(l.lambda);
    lp.phi = ComponentPrior::fixed(l.phi);
    lp.p = ComponentPrior::fixed(family == ObservationFamily::gaussian ? 0.0 : l.p);
    lp.gamma_mean = initial.gamma.at(static_cast<std::size_t>(n));
    lp.gamma_cov = Eigen::MatrixXd::Zero(k, k);
    lp.h1_mean = initial.psi.at(static_cast<std::size_t>(n))(0);
    lp.h1_var = 0.0;
    prior.lines.push_back(lp);
  }
  return prior;
}

ParameterCodec::ParameterCodec(const PriorSpec& prior) {
  prior.validate();
  base_.lines.resize(prior.lines.size());
  for (std::size_t n = 0; n < prior.lines.size(); ++n) {
    const auto& lp = prior.lines[n];
    for (auto f : line_fields(prior.extended)) {
      const auto& c = component(lp, f);
      Slot slot{static_cast<int>(n), f, std::string(field_name(f)) + "[" + std::to_string(n + 1) + "]"};
      if (c.is_fixed()) {
        set(base_, slot, c.a);
      } else {
        if (f == Field::p && prior.family == ObservationFamily::gaussian) {
          throw InputError("p must be fixed for the gaussian family");
        }
        set(base_, slot, centre(c));
        slots_.push_back(slot);
      }
    }
    if (prior.family == ObservationFamily::gaussian) base_.lines[n].p = 0.0;
  }
  Slot shared{-1, Field::sigma2_h_tilde, "sigma2_h_tilde"};
  if (prior.sigma2_h_tilde.is_fixed()) {
    base_.sigma2_h_tilde = prior.sigma2_h_tilde.a;
  } else {
    base_.sigma2_h_tilde = centre(prior.sigma2_h_tilde);
    slots_.push_back(shared);
  }
}

std::string ParameterCodec::field_name(Field field) { return evoglm::field_name(field); }

double ParameterCodec::get(const ModelParams& params, const Slot& slot) {
  if (slot.field == Field::sigma2_h_tilde) return params.sigma2_h_tilde;
  const auto& l = params.lines.at(static_cast<std::size_t>(slot.line));
  switch (slot.field) {
    case Field::sigma2_a: return l.sigma2_a;
    case Field::sigma2_r: return l.sigma2_r;
    case Field::sigma2_s: return l.sigma2_s;
    case Field::sigma2_b1: return l.sigma2_b1;
    case Field::sigma2_b2: return l.sigma2_b2;
    case Field::sigma2_h: return l.sigma2_h;
    case Field::lambda: return l.lambda;
    case Field::phi: return l.phi;
    case Field::p: return l.p;
    case Field::sigma2_h_tilde: break;
  }
  return params.sigma2_h_tilde;
}

void ParameterCodec::set(ModelParams& params, const Slot& slot, double value) {
  if (slot.field == Field::sigma2_h_tilde) {
    params.sigma2_h_tilde = value;
    return;
  }
  auto& l = params.lines.at(static_cast<std::size_t>(slot.line));
  switch (slot.field) {
    case Field::sigma2_a: l.sigma2_a = value; break;
    case Field::sigma2_r: l.sigma2_r = value; break;
    case Field::sigma2_s: l.sigma2_s = value; break;
    case Field::sigma2_b1: l.sigma2_b1 = value; break;
    case Field::sigma2_b2: l.sigma2_b2 = value; break;
    case Field::sigma2_h: l.sigma2_h = value; break;
    case Field::lambda: l.lambda = value; break;
    case Field::phi: l.phi = value; break;
    case Field::p: l.p = value; break;
    case Field::sigma2_h_tilde: break;
  }
}

double ParameterCodec::natural(int slot, double x) const {
  const Field f = slots_.at(static_cast<std::size_t>(slot)).field;
  if (f == Field::lambda) return x;
  if (f == Field::p) return 1.0 + 1.0 / (1.0 + std::exp(-x));
  return std::exp(x);
}

Eigen::VectorXd ParameterCodec::encode(const ModelParams& params) const {
  Eigen::VectorXd theta(size());
  for (int k = 0; k < size(); ++k) {
    const auto& slot = slots_[static_cast<std::size_t>(k)];
    const double v = get(params, slot);
    if (!valid_natural(slot.field, v)) {
      throw InputError("parameter " + slot.name + " outside its transform domain");
    }
    if (slot.field == Field::lambda) {
      theta(k) = v;
    } else if (slot.field == Field::p) {
      theta(k) = std::log((v - 1.0) / (2.0 - v));
    } else {
      theta(k) = std::log(v);
    }
  }
  return theta;
}

ModelParams ParameterCodec::decode(const Eigen::Ref<const Eigen::VectorXd>& theta) const {
  ModelParams params = base_;
  for (int k = 0; k < size(); ++k) set(params, slots_[static_cast<std::size_t>(k)], natural(k, theta(k)));
  return params;
}

PfModel make_model(const TrianglePanel& panel, const PriorSpec& prior, const SeriesOptions& series) {
  panel.validate();
  if (panel.lines() != prior.line_count()) {
    throw InputError("prior has " + std::to_string(prior.line_count()) + " lines, panel has " +
                     std::to_string(panel.lines()));
  }
  PfModel model;
  model.panel = &panel;
  model.codec = ParameterCodec(prior);
  model.extended = prior.extended;
  model.anchor_h1 = prior.anchor_h1;
  model.family = prior.family;
  model.series = series;
  return model;
}

double row_log_likelihood(const PfModel& model, int i, const Eigen::Ref<const Eigen::VectorXd>& gamma,
                          const Eigen::Ref<const Eigen::VectorXd>& psi, const ModelParams& params) {
  const TrianglePanel& panel = *model.panel;
  const int dim = panel.dim();
  const int k = gamma_block_size(model.extended);
  double ll = 0.0;
  for (int n = 0; n < panel.lines(); ++n) {
    const auto& tri = panel.line(n);
    if (tri.observed_in_row(i) == 0) continue;
    const auto& lp = params.lines[static_cast<std::size_t>(n)];
    const TweedieSpec spec{model.family == ObservationFamily::gaussian ? 0.0 : lp.p, lp.phi};
    const TweedieDensity density(spec, model.series);
    const auto g = gamma.segment(n * k, k);
    const auto h = psi.segment(n * dim, dim);
    for (int j = 1; j <= dim - i + 1; ++j) {
      if (!tri.observed(i, j)) continue;
      const double eta = cell_predictor(g, h, i, j);
      const double mu = model.family == ObservationFamily::gaussian ? eta : std::exp(eta);
      if (!std::isfinite(mu) || (model.family == ObservationFamily::tweedie && !(mu > 0.0))) {
        return kNegInf;
      }
      ll += density.log_pdf(tri.value(i, j), mu);
    }
  }
  return ll;
}

ParticleCloud initialize(const PfModel& model, const PriorSpec& prior, const PfConfig& config) {
  if (config.particles < 1) throw InputError("need at least one particle");
  const TrianglePanel& panel = *model.panel;
  const int m_count = config.particles;
  const int lines = panel.lines();
  const int dim = panel.dim();
  const int k = gamma_block_size(model.extended);
  const auto& codec = model.codec;

  std::vector<Eigen::MatrixXd> gamma_factor;
  for (const auto& lp : prior.lines) gamma_factor.push_back(psd_factor(lp.gamma_cov));

  ParticleCloud cloud;
  cloud.step = 1;
  cloud.theta.resize(codec.size(), m_count);
  cloud.psi.resize(lines * dim, m_count);
  cloud.gamma.resize(lines * k, m_count);
  cloud.log_weight.resize(m_count);

  parallel_for(static_cast<std::size_t>(m_count), config.workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t mm = b; mm < e; ++mm) {
      const auto m = static_cast<Eigen::Index>(mm);
      RandomStream theta_rng(config.seed, {label_hash("prior-theta"), mm});
      ModelParams params = codec.base();
      for (int s = 0; s < codec.size(); ++s) {
        const auto& slot = codec.slots()[static_cast<std::size_t>(s)];
        const ComponentPrior& c = slot.line < 0 ? prior.sigma2_h_tilde
                                                : component(prior.lines[static_cast<std::size_t>(slot.line)], slot.field);
        double v = c.draw(theta_rng);
        int tries = 0;
        while (!valid_natural(slot.field, v)) {
          if (++tries > 1000) throw InputError("prior for " + slot.name + " rarely yields valid values");
          v = c.draw(theta_rng);
        }
        ParameterCodec::set(params, slot, v);
      }
      cloud.theta.col(m) = codec.encode(params);

      RandomStream psi_rng(config.seed, {label_hash("prior-psi"), mm});
      std::vector<double> h(static_cast<std::size_t>(lines));
      for (int n = 0; n < lines; ++n) {
        const auto& lp = prior.lines[static_cast<std::size_t>(n)];
        double h1 = 0.0;
        if (!model.anchor_h1) h1 = lp.h1_mean + std::sqrt(lp.h1_var) * psi_rng.normal();
        h[static_cast<std::size_t>(n)] = h1;
        cloud.psi(n * dim, m) = h1;
      }
      for (int t = 2; t <= dim; ++t) {
        const CalendarStep step = evolve_calendar(h, params, psi_rng);
        h = step.h;
        for (int n = 0; n < lines; ++n) cloud.psi(n * dim + t - 1, m) = h[static_cast<std::size_t>(n)];
      }

      RandomStream gamma_rng(config.seed, {label_hash("prior-gamma"), mm});
      for (int n = 0; n < lines; ++n) {
        const auto& lp = prior.lines[static_cast<std::size_t>(n)];
        Eigen::VectorXd z(k);
        for (int c = 0; c < k; ++c) z(c) = gamma_rng.normal();
        cloud.gamma.col(m).segment(n * k, k) = lp.gamma_mean + gamma_factor[static_cast<std::size_t>(n)] * z;
      }
      cloud.log_weight(m) = safe_row_loglik(model, 1, cloud.gamma.col(m), cloud.psi.col(m), params);
    }
  });
  cloud.weight = normalize(cloud.log_weight);
  return cloud;
}

Lookahead shrink_lookahead(const ParticleCloud& cloud, double xi) {
  if (!(xi > 0.0 && xi <= 1.0)) throw InputError("shrinkage xi must lie in (0, 1]");
  Lookahead ahead;
  if (xi == 1.0) {
    ahead.theta = cloud.theta;
    ahead.psi = cloud.psi;
  } else {
    const Eigen::VectorXd theta_bar = weighted_mean(cloud.theta, cloud.weight);
    const Eigen::VectorXd psi_bar = weighted_mean(cloud.psi, cloud.weight);
    ahead.theta = (xi * cloud.theta).colwise() + (1.0 - xi) * theta_bar;
    ahead.psi = (xi * cloud.psi).colwise() + (1.0 - xi) * psi_bar;
  }
  ahead.gamma = cloud.gamma;
  ahead.log_likelihood = Eigen::VectorXd::Zero(cloud.size());
  return ahead;
}

Eigen::VectorXd lookahead_weights(const PfModel& model, const ParticleCloud& cloud, Lookahead& ahead,
                                  int i, unsigned workers) {
  const int m_count = cloud.size();
  Eigen::VectorXd out(m_count);
  parallel_for(static_cast<std::size_t>(m_count), workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t mm = b; mm < e; ++mm) {
      const auto m = static_cast<Eigen::Index>(mm);
      const ModelParams params = model.codec.decode(ahead.theta.col(m));
      const double ll = safe_row_loglik(model, i, ahead.gamma.col(m), ahead.psi.col(m), params);
      ahead.log_likelihood(m) = ll;
      out(m) = cloud.log_weight(m) + ll;
    }
  });
  return out;
}

Eigen::VectorXd normalize(const Eigen::VectorXd& log_weights) {
  if (log_weights.size() == 0) throw InputError("no weights to normalize");
  double top = kNegInf;
  for (double v : log_weights) {
    if (!std::isnan(v)) top = std::max(top, v);
  }
  if (!std::isfinite(top)) throw NumericalError("total weight collapse: no finite log-weight");
  Eigen::VectorXd w(log_weights.size());
  double sum = 0.0;
  for (Eigen::Index m = 0; m < w.size(); ++m) {
    const double v = log_weights(m);
    w(m) = std::isnan(v) ? 0.0 : std::exp(v - top);
    sum += w(m);
  }
  return w / sum;
}

double ess(const Eigen::VectorXd& weights) { return 1.0 / weights.squaredNorm(); }

std::vector<int> systematic_resample(const Eigen::VectorXd& weights, double u) {
  const auto m_count = weights.size();
  std::vector<int> idx(static_cast<std::size_t>(m_count));
  double cum = weights(0);
  Eigen::Index k = 0;
  for (Eigen::Index m = 0; m < m_count; ++m) {
    const double target = (static_cast<double>(m) + u) / static_cast<double>(m_count);
    while (target > cum && k < m_count - 1) cum += weights(++k);
    idx[static_cast<std::size_t>(m)] = static_cast<int>(k);
  }
  return idx;
}

std::vector<int> resample(const Eigen::VectorXd& weights, RandomStream& rng) {
  return systematic_resample(weights, rng.uniform());
}

Rejuvenation cloud_covariances(const ParticleCloud& cloud, double jitter) {
  Rejuvenation cov;
  const Eigen::VectorXd theta_bar = weighted_mean(cloud.theta, cloud.weight);
  const Eigen::VectorXd psi_bar = weighted_mean(cloud.psi, cloud.weight);
  cov.theta_cov = symmetrize(weighted_covariance(cloud.theta, cloud.weight, theta_bar));
  cov.psi_cov = symmetrize(weighted_covariance(cloud.psi, cloud.weight, psi_bar));
  cov.theta_cov.diagonal().array() += jitter;
  cov.psi_cov.diagonal().array() += jitter;
  return cov;
}

ParticleCloud rejuvenate(const PfModel& model, const Lookahead& ahead, const std::vector<int>& ancestors,
                         const Rejuvenation& cov, double xi, std::uint64_t seed, int step,
                         unsigned workers) {
  const auto m_count = static_cast<Eigen::Index>(ancestors.size());
  const int lines = model.panel->lines();
  const int dim = model.panel->dim();
  const int k = gamma_block_size(model.extended);
  const double spread = 1.0 - xi * xi;
  const bool move = spread > 0.0;
  const Eigen::MatrixXd l_theta = move ? psd_factor(spread * cov.theta_cov) : Eigen::MatrixXd();
  const Eigen::MatrixXd l_psi = move ? psd_factor(spread * cov.psi_cov) : Eigen::MatrixXd();

  ParticleCloud next;
  next.step = step;
  next.theta.resize(ahead.theta.rows(), m_count);
  next.psi.resize(ahead.psi.rows(), m_count);
  next.gamma.resize(ahead.gamma.rows(), m_count);
  next.log_weight = Eigen::VectorXd::Zero(m_count);
  parallel_for(static_cast<std::size_t>(m_count), workers, [&](std::size_t b, std::size_t e) {
    Eigen::VectorXd z_theta(ahead.theta.rows());
    Eigen::VectorXd z_psi(ahead.psi.rows());
    for (std::size_t mm = b; mm < e; ++mm) {
      const auto m = static_cast<Eigen::Index>(mm);
      const int a = ancestors[mm];
      RandomStream rng(seed, {label_hash("rejuvenate"), static_cast<std::uint64_t>(step), mm});
      next.theta.col(m) = ahead.theta.col(a);
      next.psi.col(m) = ahead.psi.col(a);
      if (move) {
        for (Eigen::Index c = 0; c < z_theta.size(); ++c) z_theta(c) = rng.normal();
        for (Eigen::Index c = 0; c < z_psi.size(); ++c) z_psi(c) = rng.normal();
        next.theta.col(m) += l_theta * z_theta;
        next.psi.col(m) += l_psi * z_psi;
        if (model.anchor_h1) {
          for (int n = 0; n < lines; ++n) next.psi(n * dim, m) = 0.0;
        }
      }
      const ModelParams params = model.codec.decode(next.theta.col(m));
      RandomStream gamma_rng(seed, {label_hash("evolve-gamma"), static_cast<std::uint64_t>(step), mm});
      for (int n = 0; n < lines; ++n) {
        const Eigen::VectorXd prev = ahead.gamma.col(a).segment(n * k, k);
        next.gamma.col(m).segment(n * k, k) =
            evolve_gamma(prev, params.lines[static_cast<std::size_t>(n)], gamma_rng);
      }
    }
  });
  return next;
}

int correction_weights(const PfModel& model, ParticleCloud& cloud, const Lookahead& ahead,
                       const std::vector<int>& ancestors, int i, unsigned workers) {
  const int m_count = cloud.size();
  std::vector<std::uint8_t> zero(static_cast<std::size_t>(m_count), 0);
  parallel_for(static_cast<std::size_t>(m_count), workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t mm = b; mm < e; ++mm) {
      const auto m = static_cast<Eigen::Index>(mm);
      const double denom = ahead.log_likelihood(ancestors[mm]);
      if (!std::isfinite(denom)) {
        cloud.log_weight(m) = kNegInf;
        zero[mm] = 1;
        continue;
      }
      const ModelParams params = model.codec.decode(cloud.theta.col(m));
      const double num = safe_row_loglik(model, i, cloud.gamma.col(m), cloud.psi.col(m), params);
      cloud.log_weight(m) = num - denom;
    }
  });
  return static_cast<int>(std::count(zero.begin(), zero.end(), 1));
}

CloudSummary summarize_rows(const Eigen::MatrixXd& x, const Eigen::VectorXd& w) {
  CloudSummary s;
  const auto rows = x.rows();
  s.mean = weighted_mean(x, w);
  s.sd.resize(rows);
  s.q05.resize(rows);
  s.q95.resize(rows);
  std::vector<std::pair<double, double>> vw(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index r = 0; r < rows; ++r) {
    double var = 0.0;
    for (Eigen::Index m = 0; m < x.cols(); ++m) {
      const double d = x(r, m) - s.mean(r);
      var += w(m) * d * d;
      vw[static_cast<std::size_t>(m)] = {x(r, m), w(m)};
    }
    s.sd(r) = std::sqrt(var);
    s.q05(r) = weighted_quantile(vw, 0.05);
    s.q95(r) = weighted_quantile(vw, 0.95);
  }
  return s;
}

namespace {

PfStep summarize_step(const PfModel& model, const ParticleCloud& cloud) {
  PfStep s;
  s.step = cloud.step;
  s.ess = ess(cloud.weight);
  s.gamma = summarize_rows(cloud.gamma, cloud.weight);
  s.psi = summarize_rows(cloud.psi, cloud.weight);
  Eigen::MatrixXd natural(cloud.theta.rows(), cloud.theta.cols());
  for (Eigen::Index r = 0; r < natural.rows(); ++r) {
    for (Eigen::Index m = 0; m < natural.cols(); ++m) {
      natural(r, m) = model.codec.natural(static_cast<int>(r), cloud.theta(r, m));
    }
  }
  s.params = summarize_rows(natural, cloud.weight);
  return s;
}

}  // namespace

std::vector<std::string> gamma_entry_names(int lines, bool extended) {
  std::vector<std::string> names;
  for (int n = 1; n <= lines; ++n) {
    for (const auto& f : gamma_factor_names(extended)) names.push_back(f + "[" + std::to_string(n) + "]");
  }
  return names;
}

std::vector<std::string> psi_entry_names(int lines, int dim) {
  std::vector<std::string> names;
  for (int n = 1; n <= lines; ++n) {
    for (int t = 1; t <= dim; ++t) {
      names.push_back("h" + std::to_string(t) + "[" + std::to_string(n) + "]");
    }
  }
  return names;
}

Eigen::MatrixXd PfResult::gamma_path(int m) const {
  if (gamma_history.empty()) throw InputError("particle paths were not kept");
  const int steps = static_cast<int>(gamma_history.size());
  Eigen::MatrixXd path(gamma_history.front().rows(), steps);
  int idx = m;
  for (int i = steps; i >= 1; --i) {
    path.col(i - 1) = gamma_history[static_cast<std::size_t>(i - 1)].col(idx);
    if (i > 1) idx = ancestors[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(idx)];
  }
  return path;
}

std::vector<std::string> PfResult::param_names() const {
  std::vector<std::string> names;
  for (const auto& s : model.codec.slots()) names.push_back(s.name);
  return names;
}

PfResult run(const TrianglePanel& panel, const PriorSpec& prior, const PfConfig& config) {
  if (!(config.xi > 0.0 && config.xi <= 1.0)) throw InputError("shrinkage xi must lie in (0, 1]");
  PfResult result;
  result.model = make_model(panel, prior, config.series);
  const PfModel& model = result.model;
  const int dim = panel.dim();
  const double m_count = static_cast<double>(config.particles);

  auto check_degeneracy = [&](const PfStep& s) {
    if (s.ess < config.degeneracy_fraction * m_count || config.particles == 1) {
      result.warnings.push_back("step " + std::to_string(s.step) + ": ESS " + std::to_string(s.ess) +
                                " below " + std::to_string(config.degeneracy_fraction) + " M");
    }
  };

  ParticleCloud cloud = initialize(model, prior, config);
  {
    PfStep s = summarize_step(model, cloud);
    s.ess_lookahead = s.ess;
    check_degeneracy(s);
    result.steps.push_back(std::move(s));
  }
  if (config.keep_paths) {
    result.gamma_history.push_back(cloud.gamma);
    result.ancestors.emplace_back();
  }

  for (int i = 2; i <= dim; ++i) {
    const Rejuvenation cov = cloud_covariances(cloud, config.jitter);
    Lookahead ahead = shrink_lookahead(cloud, config.xi);
    const Eigen::VectorXd log_ahead = lookahead_weights(model, cloud, ahead, i, config.workers);
    const Eigen::VectorXd w_ahead = normalize(log_ahead);
    RandomStream resample_rng(config.seed, {label_hash("resample"), static_cast<std::uint64_t>(i)});
    std::vector<int> anc = resample(w_ahead, resample_rng);
    ParticleCloud next = rejuvenate(model, ahead, anc, cov, config.xi, config.seed, i, config.workers);
    const int zero = correction_weights(model, next, ahead, anc, i, config.workers);
    next.weight = normalize(next.log_weight);

    PfStep s = summarize_step(model, next);
    s.ess_lookahead = ess(w_ahead);
    s.zero_lookahead = zero;
    if (zero > 0) {
      result.warnings.push_back("step " + std::to_string(i) + ": " + std::to_string(zero) +
                                " particles with zero look-ahead likelihood");
    }
    check_degeneracy(s);
    result.steps.push_back(std::move(s));
    if (config.keep_paths) {
      result.gamma_history.push_back(next.gamma);
      result.ancestors.push_back(std::move(anc));
    }
    cloud = std::move(next);
  }
  result.cloud = std::move(cloud);
  return result;
}

}  // namespace evoglm
