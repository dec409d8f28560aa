#include "evoglm/static_glm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "evoglm/error.hpp"
#include "evoglm/state_space.hpp"
#include "evoglm/tweedie.hpp"

namespace evoglm {

MeanStructure parse_mean_structure(const std::string& name) {
  if (name == "hoerl") return MeanStructure::hoerl;
  if (name == "hoerl_extended" || name == "hoerl-extended") return MeanStructure::hoerl_extended;
  if (name == "chain_ladder" || name == "chain-ladder") return MeanStructure::chain_ladder;
  throw InputError("unknown mean structure '" + name + "'");
}

std::string to_string(MeanStructure structure) {
  switch (structure) {
    case MeanStructure::hoerl: return "hoerl";
    case MeanStructure::hoerl_extended: return "hoerl_extended";
    case MeanStructure::chain_ladder: return "chain_ladder";
  }
  return "unknown";
}

double GlmFit::coefficient(const std::string& name) const {
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (names[k] == name) return coefficients(static_cast<Eigen::Index>(k));
  }
  throw InputError("no coefficient named " + name);
}

double tweedie_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& mu, double p) {
  double dev = 0.0;
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    const double yk = y(k);
    const double m = mu(k);
    if (p == 0.0) {
      dev += (yk - m) * (yk - m);
    } else if (p == 1.0) {
      dev += 2.0 * ((yk > 0.0 ? yk * std::log(yk / m) : 0.0) - (yk - m));
    } else if (p == 2.0) {
      if (!(yk > 0.0)) throw InputError("gamma deviance needs positive observations");
      dev += 2.0 * (-std::log(yk / m) + (yk - m) / m);
    } else {
      const double a = yk > 0.0 ? std::pow(yk, 2.0 - p) / ((1.0 - p) * (2.0 - p)) : 0.0;
      const double b = yk * std::pow(m, 1.0 - p) / (1.0 - p);
      const double c = std::pow(m, 2.0 - p) / (2.0 - p);
      dev += 2.0 * (a - b + c);
    }
  }
  return dev;
}

namespace {

struct WeightedSolve {
  Eigen::VectorXd beta;
  Eigen::MatrixXd information;
};

WeightedSolve weighted_least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& z,
                                     const Eigen::VectorXd& w) {
  const Eigen::VectorXd sw = w.cwiseSqrt();
  const Eigen::MatrixXd Xw = sw.asDiagonal() * X;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xw);
  qr.setThreshold(1e-12);
  if (qr.rank() < X.cols()) throw NumericalError("singular information matrix");
  WeightedSolve out;
  out.beta = qr.solve(Eigen::VectorXd(sw.asDiagonal() * z));
  out.information = Xw.transpose() * Xw;
  return out;
}

Eigen::VectorXd clamp_eta(Eigen::VectorXd eta) {
  return eta.cwiseMin(700.0).cwiseMax(-700.0);
}

}  // namespace

GlmFit fit_irls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double p,
                const IrlsOptions& options) {
  if (X.rows() != y.size()) throw InputError("design/response length mismatch");
  if (X.rows() < X.cols()) throw InputError("fewer observations than coefficients");
  if (!(p == 0.0 || (p >= 1.0 && p <= 2.0))) throw InputError("unsupported variance power");
  if (p > 0.0 && (y.array() < 0.0).any()) throw InputError("negative observation with p > 0");

  const Eigen::Index n = y.size();
  double positive_mean = 0.0;
  int positives = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (y(k) > 0.0) {
      positive_mean += y(k);
      ++positives;
    }
  }
  positive_mean = positives > 0 ? positive_mean / positives : 1.0;
  const double guard = 0.1 * positive_mean;

  Eigen::VectorXd mu(n);
  for (Eigen::Index k = 0; k < n; ++k) mu(k) = y(k) > 0.0 ? y(k) : guard;
  Eigen::VectorXd eta = mu.array().log();

  auto weights = [p](const Eigen::VectorXd& m) -> Eigen::VectorXd {
    return m.array().pow(2.0 - p);
  };
  auto score_of = [&](const Eigen::VectorXd& m, double& scale) -> Eigen::VectorXd {
    const Eigen::VectorXd r = (y - m).array() * m.array().pow(1.0 - p);
    scale = (X.cwiseAbs().transpose() * r.cwiseAbs()).maxCoeff();
    return X.transpose() * r;
  };

  Eigen::VectorXd beta = weighted_least_squares(X, eta, weights(mu)).beta;
  mu = clamp_eta(X * beta).array().exp();
  double deviance = tweedie_deviance(y, mu, p);

  GlmFit fit;
  fit.power = p;
  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    double scale = 0.0;
    const Eigen::VectorXd score = score_of(mu, scale);
    if (score.cwiseAbs().maxCoeff() <= options.score_tolerance * std::max(1.0, scale)) {
      fit.converged = true;
      break;
    }
    eta = X * beta;
    const Eigen::VectorXd z = eta.array() + (y - mu).array() / mu.array();
    Eigen::VectorXd candidate = weighted_least_squares(X, z, weights(mu)).beta;
    Eigen::VectorXd cand_mu = clamp_eta(X * candidate).array().exp();
    double cand_dev = tweedie_deviance(y, cand_mu, p);
    int halvings = 0;
    while (!(cand_dev <= deviance * (1.0 + 1e-14) + 1e-300) && halvings < options.max_halvings) {
      candidate = 0.5 * (candidate + beta);
      cand_mu = clamp_eta(X * candidate).array().exp();
      cand_dev = tweedie_deviance(y, cand_mu, p);
      ++halvings;
    }
    if (halvings == options.max_halvings) {
      // No descent direction left at working precision.
      double s2 = 0.0;
      const Eigen::VectorXd sc = score_of(mu, s2);
      fit.converged = sc.cwiseAbs().maxCoeff() <= 1e-6 * std::max(1.0, s2);
      break;
    }
    beta = candidate;
    mu = cand_mu;
    deviance = cand_dev;
  }
  if (!fit.converged) {
    throw NumericalError("IRLS did not converge in " + std::to_string(options.max_iterations) +
                         " iterations");
  }

  double scale = 0.0;
  fit.coefficients = beta;
  fit.score = score_of(mu, scale);
  fit.deviance = deviance;
  fit.iterations = iter;
  fit.cells.resize(static_cast<std::size_t>(n));
  double pearson_ss = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    auto& c = fit.cells[static_cast<std::size_t>(k)];
    c.y = y(k);
    c.mu = mu(k);
    c.pearson = (y(k) - mu(k)) / std::sqrt(std::pow(mu(k), p));
    pearson_ss += c.pearson * c.pearson;
  }
  const auto dof = n - X.cols();
  fit.dispersion = dof > 0 ? pearson_ss / static_cast<double>(dof) : 1.0;
  const Eigen::MatrixXd info = weighted_least_squares(X, eta, weights(mu)).information;
  fit.covariance = fit.dispersion * info.ldlt().solve(Eigen::MatrixXd::Identity(X.cols(), X.cols()));
  return fit;
}

LineDesign build_line_design(const TrianglePanel& panel, int line, MeanStructure structure) {
  const auto& tri = panel.line(line);
  const int dim = tri.dim();
  LineDesign d;
  for (int i = 1; i <= dim; ++i) d.names.push_back("a" + std::to_string(i));
  int extra = 0;
  switch (structure) {
    case MeanStructure::hoerl:
      d.names.insert(d.names.end(), {"r", "s"});
      extra = 2;
      break;
    case MeanStructure::hoerl_extended:
      d.names.insert(d.names.end(), {"r", "s", "b1", "b2"});
      extra = 4;
      break;
    case MeanStructure::chain_ladder:
      for (int j = 2; j <= dim; ++j) d.names.push_back("d" + std::to_string(j));
      extra = dim - 1;
      break;
  }
  const int cols = dim + extra;
  const int n = tri.observed_count();
  d.X = Eigen::MatrixXd::Zero(n, cols);
  d.y.resize(n);
  int row = 0;
  for (int i = 1; i <= dim; ++i) {
    for (int j = 1; j <= dim - i + 1; ++j) {
      if (!tri.observed(i, j)) continue;
      d.X(row, i - 1) = 1.0;
      if (structure == MeanStructure::chain_ladder) {
        if (j >= 2) d.X(row, dim + j - 2) = 1.0;
      } else {
        d.X(row, dim) = std::log(static_cast<double>(j));
        d.X(row, dim + 1) = static_cast<double>(j);
        if (structure == MeanStructure::hoerl_extended) {
          d.X(row, dim + 2) = j == 1 ? 1.0 : 0.0;
          d.X(row, dim + 3) = j == 2 ? 1.0 : 0.0;
        }
      }
      d.y(row) = tri.value(i, j);
      d.cells.emplace_back(i, j);
      ++row;
    }
  }
  return d;
}

GlmFit fit_line(const TrianglePanel& panel, int line, MeanStructure structure, double p,
                const IrlsOptions& options) {
  const LineDesign d = build_line_design(panel, line, structure);
  GlmFit fit = fit_irls(d.X, d.y, p, options);
  fit.names = d.names;
  for (std::size_t k = 0; k < d.cells.size(); ++k) {
    fit.cells[k].i = d.cells[k].first;
    fit.cells[k].j = d.cells[k].second;
  }
  return fit;
}

double profile_power(const TrianglePanel& panel, MeanStructure structure,
                     const std::vector<double>& grid) {
  if (grid.empty()) throw InputError("empty power grid");
  double best_p = grid.front();
  double best_ll = -std::numeric_limits<double>::infinity();
  for (double p : grid) {
    double ll = 0.0;
    for (int n = 0; n < panel.lines(); ++n) {
      const GlmFit fit = fit_line(panel, n, structure, p);
      const TweedieDensity density({p, fit.dispersion});
      for (const auto& c : fit.cells) ll += density.log_pdf(c.y, c.mu);
    }
    if (ll > best_ll) {
      best_ll = ll;
      best_p = p;
    }
  }
  return best_p;
}

ResidualSummary pearson_residuals(const GlmFit& fit, int dim) {
  ResidualSummary out;
  out.cells = fit.cells;
  std::vector<double> obs(static_cast<std::size_t>(dim), 0.0);
  std::vector<double> fitted(static_cast<std::size_t>(dim), 0.0);
  std::vector<int> count(static_cast<std::size_t>(dim), 0);
  for (const auto& c : fit.cells) {
    const int t = calendar_index(c.i, c.j);
    if (t < 1 || t > dim) continue;
    obs[static_cast<std::size_t>(t - 1)] += c.y;
    fitted[static_cast<std::size_t>(t - 1)] += c.mu;
    count[static_cast<std::size_t>(t - 1)] += 1;
  }
  out.calendar.resize(static_cast<std::size_t>(dim));
  for (int t = 0; t < dim; ++t) {
    const auto k = static_cast<std::size_t>(t);
    out.calendar[k] = count[k] > 0 ? (obs[k] - fitted[k]) / fitted[k]
                                   : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

GammaPrior gamma_prior_from_fit(const GlmFit& fit, MeanStructure structure, double h1_mean,
                                double scale) {
  if (structure == MeanStructure::chain_ladder) {
    throw InputError("gamma prior needs a Hoerl mean structure");
  }
  std::vector<std::string> wanted = {"a1", "r", "s"};
  if (structure == MeanStructure::hoerl_extended) wanted.insert(wanted.end(), {"b1", "b2"});
  std::vector<Eigen::Index> idx;
  for (const auto& w : wanted) {
    auto it = std::find(fit.names.begin(), fit.names.end(), w);
    if (it == fit.names.end()) throw InputError("fit lacks coefficient " + w);
    idx.push_back(static_cast<Eigen::Index>(it - fit.names.begin()));
  }
  GammaPrior prior;
  const auto k = static_cast<Eigen::Index>(idx.size());
  prior.mean.resize(k);
  prior.cov.resize(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    prior.mean(a) = fit.coefficients(idx[static_cast<std::size_t>(a)]);
    for (Eigen::Index b = 0; b < k; ++b) {
      prior.cov(a, b) = scale * fit.covariance(idx[static_cast<std::size_t>(a)],
                                               idx[static_cast<std::size_t>(b)]);
    }
  }
  prior.mean(0) -= h1_mean;
  return prior;
}

GlmFit fit_log_ols(const TrianglePanel& panel, int line, MeanStructure structure) {
  LineDesign d = build_line_design(panel, line, structure);
  if ((d.y.array() <= 0.0).any()) throw InputError("log-claims model needs positive cells");
  const Eigen::VectorXd z = d.y.array().log();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(d.X);
  if (qr.rank() < d.X.cols()) throw NumericalError("singular information matrix");
  GlmFit fit;
  fit.names = d.names;
  fit.power = 0.0;
  fit.coefficients = qr.solve(z);
  const Eigen::VectorXd fitted = d.X * fit.coefficients;
  const Eigen::VectorXd resid = z - fitted;
  const auto dof = d.X.rows() - d.X.cols();
  fit.dispersion = dof > 0 ? resid.squaredNorm() / static_cast<double>(dof) : 1.0;
  fit.deviance = resid.squaredNorm();
  const Eigen::MatrixXd xtx = d.X.transpose() * d.X;
  fit.covariance = fit.dispersion * xtx.ldlt().solve(Eigen::MatrixXd::Identity(d.X.cols(), d.X.cols()));
  fit.score = d.X.transpose() * resid;
  fit.converged = true;
  for (std::size_t k = 0; k < d.cells.size(); ++k) {
    GlmCell c;
    c.i = d.cells[k].first;
    c.j = d.cells[k].second;
    c.y = z(static_cast<Eigen::Index>(k));
    c.mu = fitted(static_cast<Eigen::Index>(k));
    c.pearson = resid(static_cast<Eigen::Index>(k));
    fit.cells.push_back(c);
  }
  return fit;
}

}  // namespace evoglm
