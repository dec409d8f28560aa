#include "evoglm/dual_kalman.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include "evoglm/error.hpp"
#include "evoglm/linalg.hpp"
#include "evoglm/particle_filter.hpp"
#include "evoglm/rng.hpp"

namespace evoglm {

Coupling parse_coupling(const std::string& name) {
  if (name == "exact") return Coupling::exact;
  if (name == "literal") return Coupling::literal;
  throw InputError("unknown coupling '" + name + "'");
}

std::string to_string(Coupling coupling) {
  return coupling == Coupling::literal ? "literal" : "exact";
}

void KalmanConfig::validate(int lines) const {
  const int k = gamma_block_size(extended);
  if (static_cast<int>(gamma_mean.size()) != lines || static_cast<int>(gamma_cov.size()) != lines) {
    throw InputError("gamma prior must be given for every line");
  }
  for (int n = 0; n < lines; ++n) {
    const auto& m = gamma_mean[static_cast<std::size_t>(n)];
    const auto& c = gamma_cov[static_cast<std::size_t>(n)];
    if (m.size() != k || c.rows() != k || c.cols() != k) {
      throw InputError("gamma prior of line " + std::to_string(n + 1) + " must have length " +
                       std::to_string(k));
    }
    if (min_eigenvalue(c) < -1e-10 * std::max(1.0, c.diagonal().maxCoeff())) {
      throw InputError("gamma prior covariance of line " + std::to_string(n + 1) + " is not PSD");
    }
  }
  if (h1_mean.size() != lines || h1_var.size() != lines) {
    throw InputError("h1 law must be given for every line");
  }
  if ((h1_var.array() < 0.0).any()) throw InputError("h1 variance must be >= 0");
  if (init == Init::simulation && simulation_paths < 2) {
    throw InputError("simulation init needs at least two paths");
  }
}

RowObservation observe_row(const TrianglePanel& panel, int i, const ModelParams& params, bool extended) {
  const int dim = panel.dim();
  const int lines = panel.lines();
  const int k = gamma_block_size(extended);
  const int d = panel.observed_in_row(i);
  RowObservation obs;
  obs.y.resize(d);
  obs.A = Eigen::MatrixXd::Zero(d, lines * k);
  obs.E = Eigen::MatrixXd::Zero(d, lines * dim);
  obs.H = Eigen::MatrixXd::Zero(d, d);
  int row = 0;
  for (int n = 0; n < lines; ++n) {
    for (int j = 1; j <= dim - i + 1; ++j) {
      if (!panel.observed(n, i, j)) continue;
      obs.y(row) = panel.value(n, i, j);
      obs.A.block(row, n * k, 1, k) = design_row(j, extended).transpose();
      obs.E(row, n * dim + i + j - 2) = 1.0;
      obs.H(row, row) = params.lines[static_cast<std::size_t>(n)].phi;
      obs.cells.emplace_back(n, j);
      ++row;
    }
  }
  return obs;
}

KalmanState init(int dim, const ModelParams& params, const KalmanConfig& config) {
  params.validate();
  const int lines = params.line_count();
  config.validate(lines);
  const int k = gamma_block_size(config.extended);
  KalmanState s;
  s.step = 1;
  s.gamma_mean.resize(lines * k);
  s.gamma_cov = Eigen::MatrixXd::Zero(lines * k, lines * k);
  for (int n = 0; n < lines; ++n) {
    s.gamma_mean.segment(n * k, k) = config.gamma_mean[static_cast<std::size_t>(n)];
    s.gamma_cov.block(n * k, n * k, k, k) = config.gamma_cov[static_cast<std::size_t>(n)];
  }
  if (config.init == KalmanConfig::Init::closed_form) {
    const GaussianMoments m = calendar_prior_moments(dim, params, config.h1_mean, config.h1_var);
    s.psi_mean = m.mean;
    s.psi_cov = m.cov;
  } else {
    const int paths = config.simulation_paths;
    Eigen::MatrixXd draws(lines * dim, paths);
    for (int p = 0; p < paths; ++p) {
      RandomStream rng(config.seed, {label_hash("kalman-init"), static_cast<std::uint64_t>(p)});
      std::vector<double> h(static_cast<std::size_t>(lines));
      for (int n = 0; n < lines; ++n) {
        h[static_cast<std::size_t>(n)] = config.h1_mean(n) + std::sqrt(config.h1_var(n)) * rng.normal();
        draws(n * dim, p) = h[static_cast<std::size_t>(n)];
      }
      for (int t = 2; t <= dim; ++t) {
        h = evolve_calendar(h, params, rng).h;
        for (int n = 0; n < lines; ++n) draws(n * dim + t - 1, p) = h[static_cast<std::size_t>(n)];
      }
    }
    s.psi_mean = draws.rowwise().mean();
    const Eigen::MatrixXd centered = draws.colwise() - s.psi_mean;
    s.psi_cov = symmetrize(centered * centered.transpose() / static_cast<double>(paths - 1));
  }
  s.cross_cov = Eigen::MatrixXd::Zero(lines * k, lines * dim);
  s.artificial_noise = config.artificial_noise >= 0.0
                           ? config.artificial_noise
                           : 1e-6 * (s.psi_cov.size() > 0 ? s.psi_cov.diagonal().mean() : 0.0);
  return s;
}

KalmanState update_calendar(const KalmanState& prior, const RowObservation& obs) {
  KalmanState post = prior;
  if (obs.y.size() == 0) return post;
  const Eigen::VectorXd nu = obs.y - obs.A * prior.gamma_mean - obs.E * prior.psi_mean;
  const Eigen::MatrixXd pe = prior.psi_cov * obs.E.transpose();
  const SpdSolver f(obs.E * pe + obs.H);
  const Eigen::MatrixXd gain = f.solve(Eigen::MatrixXd(pe.transpose())).transpose();
  post.psi_mean = prior.psi_mean + gain * nu;
  post.psi_cov = symmetrize(prior.psi_cov - gain * obs.E * prior.psi_cov);
  return post;
}

KalmanState update_gamma(const KalmanState& state, const RowObservation& obs) {
  KalmanState post = state;
  if (obs.y.size() == 0) return post;
  const Eigen::VectorXd nu = obs.y - obs.A * state.gamma_mean - obs.E * state.psi_mean;
  const Eigen::MatrixXd pa = state.gamma_cov * obs.A.transpose();
  const SpdSolver f(obs.A * pa + obs.H);
  const Eigen::MatrixXd gain = f.solve(Eigen::MatrixXd(pa.transpose())).transpose();
  post.gamma_mean = state.gamma_mean + gain * nu;
  post.gamma_cov = symmetrize(state.gamma_cov - gain * obs.A * state.gamma_cov);
  return post;
}

namespace {

Eigen::MatrixXd joint_cov(const KalmanState& s) {
  const auto kg = s.gamma_cov.rows();
  const auto kp = s.psi_cov.rows();
  Eigen::MatrixXd p(kg + kp, kg + kp);
  p.topLeftCorner(kg, kg) = s.gamma_cov;
  p.topRightCorner(kg, kp) = s.cross_cov;
  p.bottomLeftCorner(kp, kg) = s.cross_cov.transpose();
  p.bottomRightCorner(kp, kp) = s.psi_cov;
  return p;
}

Eigen::MatrixXd joint_design(const RowObservation& obs) {
  Eigen::MatrixXd z(obs.y.size(), obs.A.cols() + obs.E.cols());
  z << obs.A, obs.E;
  return z;
}

}  // namespace

KalmanState update_joint(const KalmanState& prior, const RowObservation& obs, CovarianceForm form) {
  KalmanState post = prior;
  if (obs.y.size() == 0) return post;
  const auto kg = prior.gamma_mean.size();
  const auto kp = prior.psi_mean.size();
  const Eigen::MatrixXd p = joint_cov(prior);
  const Eigen::MatrixXd z = joint_design(obs);
  Eigen::VectorXd x(kg + kp);
  x << prior.gamma_mean, prior.psi_mean;
  const Eigen::VectorXd nu = obs.y - z * x;
  const Eigen::MatrixXd pz = p * z.transpose();
  const SpdSolver f(z * pz + obs.H);
  const Eigen::MatrixXd gain = f.solve(Eigen::MatrixXd(pz.transpose())).transpose();
  x += gain * nu;
  Eigen::MatrixXd updated;
  if (form == CovarianceForm::joseph) {
    const Eigen::MatrixXd ikz = Eigen::MatrixXd::Identity(kg + kp, kg + kp) - gain * z;
    updated = ikz * p * ikz.transpose() + gain * obs.H * gain.transpose();
  } else {
    updated = p - gain * pz.transpose();
  }
  updated = symmetrize(updated);
  post.gamma_mean = x.head(kg);
  post.psi_mean = x.tail(kp);
  post.gamma_cov = updated.topLeftCorner(kg, kg);
  post.cross_cov = updated.topRightCorner(kg, kp);
  post.psi_cov = updated.bottomRightCorner(kp, kp);
  return post;
}

KalmanState predict(const KalmanState& posterior, const ModelParams& params, bool extended) {
  KalmanState prior = posterior;
  prior.step = posterior.step + 1;
  const int k = gamma_block_size(extended);
  for (int n = 0; n < params.line_count(); ++n) {
    prior.gamma_cov.block(n * k, n * k, k, k).diagonal() +=
        gamma_step_variances(params.lines[static_cast<std::size_t>(n)], extended);
  }
  prior.psi_cov.diagonal().array() += posterior.artificial_noise;
  return prior;
}

KalmanResult run(const TrianglePanel& panel, const ModelParams& params, const KalmanConfig& config) {
  panel.validate();
  params.validate();
  if (panel.lines() != params.line_count()) throw InputError("panel and parameters disagree on lines");
  const int dim = panel.dim();
  KalmanResult result;
  KalmanState prior = init(dim, params, config);
  result.artificial_noise = prior.artificial_noise;
  for (int i = 1; i <= dim; ++i) {
    prior.step = i;
    const RowObservation obs = observe_row(panel, i, params, config.extended);
    KalmanStep step;
    step.step = i;
    step.prior = prior;
    const auto d = obs.y.size();
    if (d > 0) {
      Eigen::VectorXd x(prior.gamma_mean.size() + prior.psi_mean.size());
      x << prior.gamma_mean, prior.psi_mean;
      const Eigen::MatrixXd z = joint_design(obs);
      step.innovation = obs.y - z * x;
      if (config.coupling == Coupling::exact) {
        step.innovation_cov = symmetrize(z * joint_cov(prior) * z.transpose() + obs.H);
      } else {
        step.innovation_cov = symmetrize(obs.A * prior.gamma_cov * obs.A.transpose() +
                                         obs.E * prior.psi_cov * obs.E.transpose() + obs.H);
      }
      const SpdSolver f(step.innovation_cov);
      step.log_likelihood = -0.5 * (static_cast<double>(d) * std::log(2.0 * std::numbers::pi) +
                                    f.log_determinant() + step.innovation.dot(f.solve(step.innovation)));
    }
    if (config.coupling == Coupling::exact) {
      step.posterior = update_joint(prior, obs, config.form);
    } else {
      step.posterior = update_gamma(update_calendar(prior, obs), obs);
    }
    step.min_eigenvalue = std::min(min_eigenvalue(step.posterior.gamma_cov),
                                   min_eigenvalue(step.posterior.psi_cov));
    result.log_likelihood += step.log_likelihood;
    result.steps.push_back(step);
    if (i < dim) prior = predict(step.posterior, params, config.extended);
  }
  return result;
}

double log_likelihood(const TrianglePanel& panel, const ModelParams& params, const KalmanConfig& config) {
  return run(panel, params, config).log_likelihood;
}

namespace {

struct MleProblem {
  const TrianglePanel* panel;
  const KalmanConfig* config;
  const MleOptions* options;
  ModelParams base;
  std::vector<ParameterCodec::Slot> slots;

  ModelParams decode(const gsl_vector* x) const {
    ModelParams p = base;
    for (std::size_t k = 0; k < slots.size(); ++k) {
      const double v = gsl_vector_get(x, k);
      ParameterCodec::set(p, slots[k], slots[k].field == ParameterCodec::Field::lambda ? v : std::exp(v));
    }
    return p;
  }

  double objective(const gsl_vector* x) const {
    for (std::size_t k = 0; k < slots.size(); ++k) {
      if (!std::isfinite(gsl_vector_get(x, k))) return 1e300;
    }
    const ModelParams p = decode(x);
    for (const auto& slot : slots) {
      auto it = options->bounds.find(slot.name);
      if (it == options->bounds.end()) continue;
      const double v = ParameterCodec::get(p, slot);
      if (v < it->second.first || v > it->second.second) return 1e300;
    }
    try {
      const double ll = log_likelihood(*panel, p, *config);
      return std::isfinite(ll) ? -ll : 1e300;
    } catch (const std::exception&) {
      return 1e300;
    }
  }
};

double mle_objective(const gsl_vector* x, void* data) {
  return static_cast<const MleProblem*>(data)->objective(x);
}

}  // namespace

MleResult fit_mle(const TrianglePanel& panel, const ModelParams& start, const KalmanConfig& config,
                  const MleOptions& options) {
  start.validate();
  using F = ParameterCodec::Field;
  MleProblem problem{&panel, &config, &options, start, {}};
  for (int n = 0; n < start.line_count(); ++n) {
    std::vector<F> fields = {F::sigma2_a, F::sigma2_r, F::sigma2_s};
    if (config.extended) fields.insert(fields.end(), {F::sigma2_b1, F::sigma2_b2});
    fields.insert(fields.end(), {F::sigma2_h, F::lambda, F::phi});
    for (F f : fields) {
      ParameterCodec::Slot slot{n, f, ""};
      const double v = ParameterCodec::get(start, slot);
      if (f == F::lambda) {
        if (!(start.sigma2_h_tilde > 0.0)) continue;
      } else if (!(v > 0.0)) {
        continue;
      }
      slot.name = ParameterCodec::field_name(f) + "[" + std::to_string(n + 1) + "]";
      problem.slots.push_back(slot);
    }
  }
  if (start.sigma2_h_tilde > 0.0) problem.slots.push_back({-1, F::sigma2_h_tilde, "sigma2_h_tilde"});
  const std::size_t dim = problem.slots.size();

  MleResult result;
  result.start_log_likelihood = log_likelihood(panel, start, config);
  for (const auto& s : problem.slots) result.names.push_back(s.name);
  if (dim == 0) {
    result.params = start;
    result.log_likelihood = result.start_log_likelihood;
    result.estimate = Eigen::VectorXd();
    result.converged = true;
    return result;
  }

  gsl_set_error_handler_off();
  gsl_vector* x = gsl_vector_alloc(dim);
  gsl_vector* step = gsl_vector_alloc(dim);
  for (std::size_t k = 0; k < dim; ++k) {
    const double v = ParameterCodec::get(start, problem.slots[k]);
    gsl_vector_set(x, k, problem.slots[k].field == F::lambda ? v : std::log(v));
    gsl_vector_set(step, k, options.initial_step);
  }
  gsl_multimin_function fn{&mle_objective, dim, &problem};
  gsl_multimin_fminimizer* solver = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, dim);
  gsl_multimin_fminimizer_set(solver, &fn, x, step);
  int iter = 0;
  int status = GSL_CONTINUE;
  while (status == GSL_CONTINUE && iter < options.max_iterations) {
    ++iter;
    if (gsl_multimin_fminimizer_iterate(solver) != GSL_SUCCESS) break;
    status = gsl_multimin_test_size(gsl_multimin_fminimizer_size(solver), options.tolerance);
  }
  const gsl_vector* best = gsl_multimin_fminimizer_x(solver);
  result.params = problem.decode(best);
  result.iterations = iter;
  result.converged = status == GSL_SUCCESS;
  result.log_likelihood = -gsl_multimin_fminimizer_minimum(solver);
  if (result.log_likelihood < result.start_log_likelihood) {
    result.params = start;
    result.log_likelihood = result.start_log_likelihood;
  }

  gsl_vector* probe = gsl_vector_alloc(dim);
  double g2 = 0.0;
  const double h = 1e-5;
  for (std::size_t k = 0; k < dim; ++k) {
    gsl_vector_memcpy(probe, best);
    gsl_vector_set(probe, k, gsl_vector_get(best, k) + h);
    const double up = problem.objective(probe);
    gsl_vector_set(probe, k, gsl_vector_get(best, k) - h);
    const double down = problem.objective(probe);
    const double g = (up - down) / (2.0 * h);
    g2 += g * g;
  }
  result.gradient_norm = std::sqrt(g2);
  result.estimate.resize(static_cast<Eigen::Index>(dim));
  for (std::size_t k = 0; k < dim; ++k) {
    result.estimate(static_cast<Eigen::Index>(k)) = ParameterCodec::get(result.params, problem.slots[k]);
  }
  gsl_vector_free(probe);
  gsl_multimin_fminimizer_free(solver);
  gsl_vector_free(step);
  gsl_vector_free(x);
  return result;
}

TrianglePanel log_claims(const TrianglePanel& panel) {
  std::vector<LineTriangle> lines;
  for (const auto& src : panel.all_lines()) {
    LineTriangle l(src.dim(), src.name());
    if (src.has_exposure()) l.set_exposures(src.exposures());
    for (int i = 1; i <= src.dim(); ++i) {
      for (int j = 1; j <= src.dim() - i + 1; ++j) {
        if (!src.observed(i, j)) continue;
        const double v = src.value(i, j);
        if (!(v > 0.0)) {
          throw InputError("log transform needs positive cells; (" + std::to_string(i) + "," +
                           std::to_string(j) + ") is " + std::to_string(v));
        }
        l.set(i, j, std::log(v));
      }
    }
    lines.push_back(std::move(l));
  }
  return TrianglePanel(std::move(lines), panel.kind(), panel.scale());
}

}  // namespace evoglm
