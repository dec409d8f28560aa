#include "evoglm/state_space.hpp"

#include <cmath>

#include "evoglm/error.hpp"

namespace evoglm {

ObservationFamily parse_family(const std::string& name) {
  if (name == "tweedie") return ObservationFamily::tweedie;
  if (name == "gaussian") return ObservationFamily::gaussian;
  throw InputError("unknown observation family '" + name + "'");
}

std::string to_string(ObservationFamily family) {
  return family == ObservationFamily::gaussian ? "gaussian" : "tweedie";
}

void ModelParams::validate() const {
  if (lines.empty()) throw InputError("model has no lines");
  auto check = [](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw InputError(std::string("variance ") + name + " must be >= 0");
    }
  };
  for (const auto& l : lines) {
    check(l.sigma2_a, "sigma2_a");
    check(l.sigma2_r, "sigma2_r");
    check(l.sigma2_s, "sigma2_s");
    check(l.sigma2_b1, "sigma2_b1");
    check(l.sigma2_b2, "sigma2_b2");
    check(l.sigma2_h, "sigma2_h");
    if (!(l.phi > 0.0)) throw InputError("phi must be > 0");
    if (!std::isfinite(l.lambda)) throw InputError("lambda must be finite");
  }
  check(sigma2_h_tilde, "sigma2_h_tilde");
}

std::vector<std::string> gamma_factor_names(bool extended) {
  if (extended) return {"a", "r", "s", "b1", "b2"};
  return {"a", "r", "s"};
}

void FactorState::validate(int dim) const {
  if (gamma.size() != psi.size()) throw InputError("gamma/psi line count mismatch");
  const int k = gamma_block_size(extended);
  for (const auto& g : gamma) {
    if (g.size() != k) throw InputError("gamma block length does not match the Hoerl form");
  }
  for (const auto& h : psi) {
    if (h.size() != dim) throw InputError("psi length must equal the triangle dimension");
  }
}

Eigen::VectorXd design_row(int j, bool extended) {
  Eigen::VectorXd row(gamma_block_size(extended));
  row(0) = 1.0;
  row(1) = std::log(static_cast<double>(j));
  row(2) = static_cast<double>(j);
  if (extended) {
    row(3) = j == 1 ? 1.0 : 0.0;
    row(4) = j == 2 ? 1.0 : 0.0;
  }
  return row;
}

Eigen::MatrixXd design_matrix_A(int i, int dim, bool extended) {
  if (i < 1 || i > dim) throw InputError("accident index out of range");
  const int rows = dim - i + 1;
  Eigen::MatrixXd a(rows, gamma_block_size(extended));
  for (int j = 1; j <= rows; ++j) a.row(j - 1) = design_row(j, extended).transpose();
  return a;
}

Eigen::MatrixXd selector_matrix_E(int i, int dim) {
  if (i < 1 || i > dim) throw InputError("accident index out of range");
  const int rows = dim - i + 1;
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(rows, dim);
  for (int j = 1; j <= rows; ++j) e(j - 1, i + j - 2) = 1.0;
  return e;
}

double cell_predictor(const Eigen::Ref<const Eigen::VectorXd>& g,
                      const Eigen::Ref<const Eigen::VectorXd>& psi_line, int i, int j) {
  double eta = g(0) + g(1) * std::log(static_cast<double>(j)) + g(2) * j;
  if (g.size() == 5) {
    if (j == 1) eta += g(3);
    if (j == 2) eta += g(4);
  }
  return eta + psi_line(i + j - 2);
}

Eigen::VectorXd linear_predictor(const FactorState& state, int i, int line) {
  const int dim = static_cast<int>(state.psi.at(static_cast<std::size_t>(line)).size());
  if (i < 1 || i > dim) throw InputError("accident index out of range");
  const auto& g = state.gamma.at(static_cast<std::size_t>(line));
  const auto& h = state.psi.at(static_cast<std::size_t>(line));
  Eigen::VectorXd eta(dim - i + 1);
  for (int j = 1; j <= dim - i + 1; ++j) eta(j - 1) = cell_predictor(g, h, i, j);
  return eta;
}

Eigen::VectorXd gamma_step_variances(const LineParams& p, bool extended) {
  Eigen::VectorXd v(gamma_block_size(extended));
  v(0) = p.sigma2_a;
  v(1) = p.sigma2_r;
  v(2) = p.sigma2_s;
  if (extended) {
    v(3) = p.sigma2_b1;
    v(4) = p.sigma2_b2;
  }
  return v;
}

Eigen::VectorXd evolve_gamma(const Eigen::VectorXd& previous, const LineParams& params,
                             RandomStream& rng) {
  const bool extended = previous.size() == 5;
  const Eigen::VectorXd var = gamma_step_variances(params, extended);
  Eigen::VectorXd next = previous;
  for (Eigen::Index k = 0; k < next.size(); ++k) {
    if (var(k) > 0.0) next(k) += std::sqrt(var(k)) * rng.normal();
  }
  return next;
}

CalendarStep evolve_calendar(std::span<const double> previous, const ModelParams& params,
                             std::span<RandomStream> line_streams, RandomStream& common) {
  const auto n = previous.size();
  if (n != params.lines.size() || line_streams.size() != n) {
    throw InputError("calendar evolution: line count mismatch");
  }
  CalendarStep step;
  step.common_shock =
      params.sigma2_h_tilde > 0.0 ? std::sqrt(params.sigma2_h_tilde) * common.normal() : 0.0;
  step.h.resize(n);
  step.line_shocks.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& lp = params.lines[k];
    const double eps = lp.sigma2_h > 0.0 ? std::sqrt(lp.sigma2_h) * line_streams[k].normal() : 0.0;
    step.line_shocks[k] = eps;
    step.h[k] = previous[k] + eps + lp.lambda * step.common_shock;
  }
  return step;
}

CalendarStep evolve_calendar(std::span<const double> previous, const ModelParams& params,
                             RandomStream& rng) {
  const auto n = previous.size();
  if (n != params.lines.size()) throw InputError("calendar evolution: line count mismatch");
  CalendarStep step;
  step.common_shock =
      params.sigma2_h_tilde > 0.0 ? std::sqrt(params.sigma2_h_tilde) * rng.normal() : 0.0;
  step.h.resize(n);
  step.line_shocks.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& lp = params.lines[k];
    const double eps = lp.sigma2_h > 0.0 ? std::sqrt(lp.sigma2_h) * rng.normal() : 0.0;
    step.line_shocks[k] = eps;
    step.h[k] = previous[k] + eps + lp.lambda * step.common_shock;
  }
  return step;
}

GaussianSystem build_gaussian_system(int i, int dim, const ModelParams& params, bool extended) {
  params.validate();
  if (i < 1 || i > dim) throw InputError("accident index out of range");
  const int n = params.line_count();
  const int k = gamma_block_size(extended);
  const int rows = dim - i + 1;
  GaussianSystem sys;
  sys.A = Eigen::MatrixXd::Zero(n * rows, n * k);
  sys.E = Eigen::MatrixXd::Zero(n * rows, n * dim);
  sys.H = Eigen::MatrixXd::Zero(n * rows, n * rows);
  sys.Q_gamma = Eigen::MatrixXd::Zero(n * k, n * k);
  sys.Q_h = Eigen::MatrixXd::Zero(n + 1, n + 1);
  const Eigen::MatrixXd a = design_matrix_A(i, dim, extended);
  const Eigen::MatrixXd e = selector_matrix_E(i, dim);
  for (int line = 0; line < n; ++line) {
    const auto& lp = params.lines[static_cast<std::size_t>(line)];
    sys.A.block(line * rows, line * k, rows, k) = a;
    sys.E.block(line * rows, line * dim, rows, dim) = e;
    sys.H.block(line * rows, line * rows, rows, rows).diagonal().setConstant(lp.phi);
    sys.Q_gamma.block(line * k, line * k, k, k).diagonal() = gamma_step_variances(lp, extended);
    sys.Q_h(line, line) = lp.sigma2_h;
  }
  sys.Q_h(n, n) = params.sigma2_h_tilde;
  return sys;
}

CalendarTransition calendar_transition(int t, const ModelParams& params) {
  if (t < 2) throw InputError("calendar transition defined for t >= 2");
  const int n = params.line_count();
  CalendarTransition tr;
  tr.R = Eigen::MatrixXd::Zero(n * t, n * (t - 1));
  tr.S = Eigen::MatrixXd::Zero(n * t, n + 1);
  for (int line = 0; line < n; ++line) {
    auto r = tr.R.block(line * t, line * (t - 1), t, t - 1);
    r.topRows(t - 1).setIdentity();
    r(t - 1, t - 2) = 1.0;
    tr.S(line * t + t - 1, line) = 1.0;
    tr.S(line * t + t - 1, n) = params.lines[static_cast<std::size_t>(line)].lambda;
  }
  return tr;
}

GaussianMoments calendar_prior_moments(int dim, const ModelParams& params,
                                       const Eigen::VectorXd& h1_mean,
                                       const Eigen::VectorXd& h1_var) {
  const int n = params.line_count();
  if (h1_mean.size() != n || h1_var.size() != n) throw InputError("h1 moments: line count mismatch");
  GaussianMoments m;
  m.mean.resize(n * dim);
  m.cov = Eigen::MatrixXd::Zero(n * dim, n * dim);
  for (int a = 0; a < n; ++a) {
    const auto& la = params.lines[static_cast<std::size_t>(a)];
    m.mean.segment(a * dim, dim).setConstant(h1_mean(a));
    for (int b = 0; b < n; ++b) {
      const auto& lb = params.lines[static_cast<std::size_t>(b)];
      const double step = (a == b ? la.sigma2_h : 0.0) + la.lambda * lb.lambda * params.sigma2_h_tilde;
      for (int s = 1; s <= dim; ++s) {
        for (int t = 1; t <= dim; ++t) {
          double c = (std::min(s, t) - 1) * step;
          if (a == b) c += h1_var(a);
          m.cov(a * dim + s - 1, b * dim + t - 1) = c;
        }
      }
    }
  }
  return m;
}

double calendar_increment_correlation(const ModelParams& params, int line_a, int line_b) {
  const auto& a = params.lines.at(static_cast<std::size_t>(line_a));
  const auto& b = params.lines.at(static_cast<std::size_t>(line_b));
  const double s = params.sigma2_h_tilde;
  const double cov = line_a == line_b ? a.sigma2_h + a.lambda * a.lambda * s : a.lambda * b.lambda * s;
  const double va = a.sigma2_h + a.lambda * a.lambda * s;
  const double vb = b.sigma2_h + b.lambda * b.lambda * s;
  if (!(va > 0.0) || !(vb > 0.0)) return 0.0;
  return cov / std::sqrt(va * vb);
}

}  // namespace evoglm
