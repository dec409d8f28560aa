#include "evoglm/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <gsl/gsl_cdf.h>

#include "evoglm/error.hpp"
#include "evoglm/state_space.hpp"

namespace evoglm {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double pearson_of(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  const Eigen::ArrayXd dx = x.array() - x.mean();
  const Eigen::ArrayXd dy = y.array() - y.mean();
  const double sxx = (dx * dx).sum();
  const double syy = (dy * dy).sum();
  if (!(sxx > 0.0) || !(syy > 0.0)) throw InputError("association: zero-variance input");
  return (dx * dy).sum() / std::sqrt(sxx * syy);
}

Eigen::VectorXd average_ranks(const Eigen::VectorXd& x) {
  const auto n = static_cast<std::size_t>(x.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x(static_cast<Eigen::Index>(a)) < x(static_cast<Eigen::Index>(b));
  });
  Eigen::VectorXd ranks(x.size());
  std::size_t k = 0;
  while (k < n) {
    std::size_t e = k + 1;
    while (e < n && x(static_cast<Eigen::Index>(order[e])) == x(static_cast<Eigen::Index>(order[k]))) ++e;
    const double rank = 0.5 * static_cast<double>(k + e - 1) + 1.0;
    for (std::size_t q = k; q < e; ++q) ranks(static_cast<Eigen::Index>(order[q])) = rank;
    k = e;
  }
  return ranks;
}

double t_test_p(double r, int n) {
  if (std::abs(r) >= 1.0) return 0.0;
  const double t = r * std::sqrt((n - 2.0) / (1.0 - r * r));
  return 2.0 * gsl_cdf_tdist_Q(std::abs(t), n - 2.0);
}

int line_count_of(const Eigen::VectorXd& stacked, int block) {
  return block > 0 ? static_cast<int>(stacked.size()) / block : 0;
}

double mean_of(double eta, ObservationFamily family) {
  return family == ObservationFamily::gaussian ? eta : std::exp(eta);
}

}  // namespace

HoerlSummary hoerl_summary(double r, double s) {
  if (s == 0.0) throw InputError("Hoerl summary undefined for s = 0");
  HoerlSummary h;
  h.mean = (r - 1.0) / (-s);
  h.variance = (r - 1.0) / (s * s);
  h.finite = s < 0.0;
  return h;
}

int FilteredPath::lines() const {
  if (gamma.empty()) return 0;
  return line_count_of(gamma.front(), gamma_block_size(extended));
}

FilteredPath filtered_path(const PfResult& fit) {
  FilteredPath p;
  p.extended = fit.model.extended;
  p.family = fit.model.family;
  for (const auto& s : fit.steps) {
    p.gamma.push_back(s.gamma.mean);
    p.psi.push_back(s.psi.mean);
  }
  return p;
}

FilteredPath filtered_path(const KalmanResult& fit, bool extended) {
  FilteredPath p;
  p.extended = extended;
  p.family = ObservationFamily::gaussian;
  for (const auto& s : fit.steps) {
    p.gamma.push_back(s.posterior.gamma_mean);
    p.psi.push_back(s.posterior.psi_mean);
  }
  return p;
}

std::vector<FitRatio> fitting_ratios(const FilteredPath& path, const TruthRecord& truth) {
  const int k = gamma_block_size(path.extended);
  const int lines = path.lines();
  const int dim = static_cast<int>(path.gamma.size());
  if (static_cast<int>(truth.gamma.size()) != lines) throw InputError("truth and fit disagree on lines");
  const auto names = gamma_factor_names(path.extended);
  std::vector<FitRatio> out;
  auto push = [&](int line, int step, const std::string& factor, double filtered, double true_value) {
    FitRatio r{line + 1, step, factor, filtered, true_value, kNaN};
    if (true_value != 0.0) r.ratio = filtered / true_value;
    out.push_back(r);
  };
  for (int n = 0; n < lines; ++n) {
    const auto idx = static_cast<std::size_t>(n);
    for (int i = 1; i <= dim; ++i) {
      const Eigen::VectorXd g = path.gamma[static_cast<std::size_t>(i - 1)].segment(n * k, k);
      const Eigen::VectorXd t = truth.gamma[idx].at(static_cast<std::size_t>(i - 1));
      for (int c = 0; c < k; ++c) push(n, i, names[static_cast<std::size_t>(c)], g(c), t(c));
      if (g(2) != 0.0 && t(2) != 0.0) {
        const HoerlSummary hf = hoerl_summary(g(1), g(2));
        const HoerlSummary ht = hoerl_summary(t(1), t(2));
        push(n, i, "mean", hf.mean, ht.mean);
        push(n, i, "variance", hf.variance, ht.variance);
      }
    }
    const Eigen::VectorXd& psi = path.psi.back();
    for (int t = 1; t <= dim; ++t) push(n, t, "h", psi(n * dim + t - 1), truth.h[idx](t - 1));
  }
  return out;
}

std::vector<Eigen::MatrixXd> fitted_cells(const TrianglePanel& panel, const FilteredPath& path) {
  const int dim = panel.dim();
  const int k = gamma_block_size(path.extended);
  if (static_cast<int>(path.gamma.size()) != dim || path.lines() != panel.lines()) {
    throw InputError("filtered path does not match the panel");
  }
  const Eigen::VectorXd& psi = path.psi.back();
  std::vector<Eigen::MatrixXd> out;
  for (int n = 0; n < panel.lines(); ++n) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(dim, dim, kNaN);
    const Eigen::VectorXd h = psi.segment(n * dim, dim);
    for (int i = 1; i <= dim; ++i) {
      const Eigen::VectorXd g = path.gamma[static_cast<std::size_t>(i - 1)].segment(n * k, k);
      for (int j = 1; j <= dim - i + 1; ++j) {
        if (panel.observed(n, i, j)) m(i - 1, j - 1) = mean_of(cell_predictor(g, h, i, j), path.family);
      }
    }
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<Eigen::MatrixXd> fitted_cells(const TrianglePanel& panel, const std::vector<GlmFit>& fits) {
  if (static_cast<int>(fits.size()) != panel.lines()) throw InputError("one GLM fit per line required");
  const int dim = panel.dim();
  std::vector<Eigen::MatrixXd> out;
  for (const auto& fit : fits) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(dim, dim, kNaN);
    for (const auto& c : fit.cells) m(c.i - 1, c.j - 1) = c.mu;
    out.push_back(std::move(m));
  }
  return out;
}

ResidualTables residuals_by_dimension(const LineTriangle& line, const Eigen::MatrixXd& fitted) {
  const int dim = line.dim();
  Eigen::VectorXd oy[3] = {Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Zero(dim)};
  Eigen::VectorXd om[3] = {Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Zero(dim)};
  Eigen::VectorXi count[3] = {Eigen::VectorXi::Zero(dim), Eigen::VectorXi::Zero(dim), Eigen::VectorXi::Zero(dim)};
  for (int i = 1; i <= dim; ++i) {
    for (int j = 1; j <= dim - i + 1; ++j) {
      if (!line.observed(i, j)) continue;
      const double mu = fitted(i - 1, j - 1);
      if (std::isnan(mu)) throw InputError("fitted mean missing for an observed cell");
      const int idx[3] = {i - 1, j - 1, calendar_index(i, j) - 1};
      for (int d = 0; d < 3; ++d) {
        oy[d](idx[d]) += line.value(i, j);
        om[d](idx[d]) += mu;
        count[d](idx[d]) += 1;
      }
    }
  }
  Eigen::VectorXd out[3];
  for (int d = 0; d < 3; ++d) {
    out[d] = Eigen::VectorXd::Constant(dim, kNaN);
    for (int t = 0; t < dim; ++t) {
      if (count[d](t) == 0) continue;
      if (om[d](t) == 0.0) throw InputError("zero fitted sum in a residual table");
      out[d](t) = (oy[d](t) - om[d](t)) / om[d](t);
    }
  }
  return {out[0], out[1], out[2]};
}

Association association(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != y.size()) throw InputError("association: length mismatch");
  const int n = static_cast<int>(x.size());
  if (n < 3) throw InputError("association needs at least three pairs");
  Association a;
  a.n = n;
  a.pearson = pearson_of(x, y);
  a.pearson_p = t_test_p(a.pearson, n);
  a.spearman = pearson_of(average_ranks(x), average_ranks(y));
  a.spearman_p = t_test_p(a.spearman, n);

  double concordant = 0.0;
  double discordant = 0.0;
  double tie_x = 0.0;
  double tie_y = 0.0;
  for (int p = 0; p < n; ++p) {
    for (int q = p + 1; q < n; ++q) {
      const double dx = x(q) - x(p);
      const double dy = y(q) - y(p);
      if (dx == 0.0 && dy == 0.0) continue;
      if (dx == 0.0) {
        tie_x += 1.0;
      } else if (dy == 0.0) {
        tie_y += 1.0;
      } else if ((dx > 0.0) == (dy > 0.0)) {
        concordant += 1.0;
      } else {
        discordant += 1.0;
      }
    }
  }
  const double denom = std::sqrt((concordant + discordant + tie_x) * (concordant + discordant + tie_y));
  if (!(denom > 0.0)) throw InputError("association: zero-variance input");
  a.kendall = (concordant - discordant) / denom;
  const double nn = static_cast<double>(n);
  const double z = 3.0 * a.kendall * std::sqrt(nn * (nn - 1.0)) / std::sqrt(2.0 * (2.0 * nn + 5.0));
  a.kendall_p = 2.0 * gsl_cdf_ugaussian_Q(std::abs(z));
  return a;
}

std::vector<TrackingRow> tracking_table(const TrianglePanel& panel, const FilteredPath& path) {
  const int dim = panel.dim();
  const int k = gamma_block_size(path.extended);
  if (static_cast<int>(path.gamma.size()) != dim || path.lines() != panel.lines()) {
    throw InputError("filtered path does not match the panel");
  }
  std::vector<TrackingRow> rows;
  for (int n = 0; n < panel.lines(); ++n) {
    for (int i = 1; i <= dim; ++i) {
      const auto si = static_cast<std::size_t>(i - 1);
      const Eigen::VectorXd g = path.gamma[si].segment(n * k, k);
      const Eigen::VectorXd h = path.psi[si].segment(n * dim, dim);
      for (int j = 1; j <= dim - i + 1; ++j) {
        TrackingRow r;
        r.line = n + 1;
        r.i = i;
        r.j = j;
        r.observed = panel.observed(n, i, j) ? panel.value(n, i, j) : kNaN;
        r.fitted = mean_of(cell_predictor(g, h, i, j), path.family);
        r.fitted_prev = kNaN;
        if (i > 1) {
          const Eigen::VectorXd gp = path.gamma[si - 1].segment(n * k, k);
          const Eigen::VectorXd hp = path.psi[si - 1].segment(n * dim, dim);
          r.fitted_prev = mean_of(cell_predictor(gp, hp, i - 1, j), path.family);
        }
        rows.push_back(r);
      }
    }
  }
  return rows;
}

TrackingScore tracking_score(const std::vector<TrackingRow>& rows, int line) {
  TrackingScore score;
  int current = -1;
  double sse_now = 0.0;
  double sse_prev = 0.0;
  int cells = 0;
  auto flush = [&] {
    if (current > 1 && cells > 0) {
      ++score.transitions;
      if (sse_now < sse_prev) ++score.closer;
    }
    sse_now = sse_prev = 0.0;
    cells = 0;
  };
  for (const auto& r : rows) {
    if (r.line != line) continue;
    if (r.i != current) {
      flush();
      current = r.i;
    }
    if (std::isnan(r.observed) || std::isnan(r.fitted_prev)) continue;
    sse_now += (r.observed - r.fitted) * (r.observed - r.fitted);
    sse_prev += (r.observed - r.fitted_prev) * (r.observed - r.fitted_prev);
    ++cells;
  }
  flush();
  return score;
}

Eigen::MatrixXd heatmap_table(const LineTriangle& line, const Eigen::MatrixXd& fitted) {
  const int dim = line.dim();
  Eigen::MatrixXd out = Eigen::MatrixXd::Constant(dim, dim, kNaN);
  for (int i = 1; i <= dim; ++i) {
    for (int j = 1; j <= dim - i + 1; ++j) {
      if (line.observed(i, j)) out(i - 1, j - 1) = line.value(i, j) / fitted(i - 1, j - 1);
    }
  }
  return out;
}

double sample_increment_correlation(const Eigen::VectorXd& psi, int dim, int line_a, int line_b) {
  if (dim < 4) throw InputError("need at least three increments");
  const Eigen::VectorXd a = psi.segment(line_a * dim + 1, dim - 1) - psi.segment(line_a * dim, dim - 1);
  const Eigen::VectorXd b = psi.segment(line_b * dim + 1, dim - 1) - psi.segment(line_b * dim, dim - 1);
  return pearson_of(a, b);
}

}  // namespace evoglm
