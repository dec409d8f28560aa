#include "evoglm/forecaster.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "evoglm/error.hpp"
#include "evoglm/linalg.hpp"
#include "evoglm/parallel.hpp"
#include "evoglm/tweedie.hpp"

namespace evoglm {

PosteriorSampler particle_sampler(const PfResult& fit) {
  if (fit.gamma_history.empty()) throw InputError("particle fit has no stored paths");
  const TrianglePanel& panel = *fit.model.panel;
  PosteriorSampler s;
  s.lines = panel.lines();
  s.dim = panel.dim();
  s.extended = fit.model.extended;
  s.family = fit.model.family;

  const PfResult* source = &fit;
  std::vector<double> cumulative(static_cast<std::size_t>(fit.cloud.size()));
  double acc = 0.0;
  for (int m = 0; m < fit.cloud.size(); ++m) {
    acc += fit.cloud.weight(m);
    cumulative[static_cast<std::size_t>(m)] = acc;
  }
  const int lines = s.lines;
  const int dim = s.dim;
  const int k = gamma_block_size(s.extended);
  s.draw = [source, cumulative, lines, dim, k](RandomStream& rng) {
    const PfResult& f = *source;
    const double u = rng.uniform() * cumulative.back();
    auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u);
    const int m = static_cast<int>(std::min<std::ptrdiff_t>(it - cumulative.begin(),
                                                            static_cast<std::ptrdiff_t>(cumulative.size()) - 1));
    PosteriorDraw d;
    d.params = f.model.codec.decode(f.cloud.theta.col(m));
    const Eigen::MatrixXd path = f.gamma_path(m);
    for (int n = 0; n < lines; ++n) {
      d.gamma_rows.push_back(path.block(n * k, 0, k, dim));
      d.psi.push_back(f.cloud.psi.col(m).segment(n * dim, dim));
    }
    return d;
  };
  return s;
}

PosteriorSampler kalman_sampler(const KalmanResult& fit, const ModelParams& params, bool extended) {
  if (fit.steps.empty()) throw InputError("Kalman fit has no steps");
  PosteriorSampler s;
  s.lines = params.line_count();
  s.dim = static_cast<int>(fit.steps.size());
  s.extended = extended;
  s.family = ObservationFamily::gaussian;
  const int k = gamma_block_size(extended);
  std::vector<Eigen::VectorXd> gamma_mean;
  std::vector<Eigen::MatrixXd> gamma_factor;
  for (const auto& st : fit.steps) {
    gamma_mean.push_back(st.posterior.gamma_mean);
    gamma_factor.push_back(psd_factor(st.posterior.gamma_cov));
  }
  const Eigen::VectorXd psi_mean = fit.steps.back().posterior.psi_mean;
  const Eigen::MatrixXd psi_factor = psd_factor(fit.steps.back().posterior.psi_cov);
  const int lines = s.lines;
  const int dim = s.dim;
  s.draw = [=](RandomStream& rng) {
    PosteriorDraw d;
    d.params = params;
    std::vector<Eigen::VectorXd> rows;
    for (int i = 0; i < dim; ++i) {
      Eigen::VectorXd z(gamma_mean[static_cast<std::size_t>(i)].size());
      for (Eigen::Index c = 0; c < z.size(); ++c) z(c) = rng.normal();
      rows.push_back(gamma_mean[static_cast<std::size_t>(i)] + gamma_factor[static_cast<std::size_t>(i)] * z);
    }
    Eigen::VectorXd z(psi_mean.size());
    for (Eigen::Index c = 0; c < z.size(); ++c) z(c) = rng.normal();
    const Eigen::VectorXd psi = psi_mean + psi_factor * z;
    for (int n = 0; n < lines; ++n) {
      Eigen::MatrixXd g(k, dim);
      for (int i = 0; i < dim; ++i) g.col(i) = rows[static_cast<std::size_t>(i)].segment(n * k, k);
      d.gamma_rows.push_back(std::move(g));
      d.psi.push_back(psi.segment(n * dim, dim));
    }
    return d;
  };
  return s;
}

PosteriorSampler point_sampler(const PosteriorDraw& draw, bool extended, ObservationFamily family) {
  PosteriorSampler s;
  s.lines = static_cast<int>(draw.psi.size());
  s.dim = s.lines > 0 ? static_cast<int>(draw.psi.front().size()) : 0;
  s.extended = extended;
  s.family = family;
  s.draw = [draw](RandomStream&) { return draw; };
  return s;
}

ReserveDistribution forecast(const PosteriorSampler& sampler, const TrianglePanel& panel,
                             const ForecastConfig& config) {
  if (config.draws < 1) throw InputError("need at least one forecast draw");
  if (!sampler.draw) throw InputError("invalid filter output: empty sampler");
  if (sampler.lines != panel.lines() || sampler.dim != panel.dim()) {
    throw InputError("invalid filter output: shape does not match the panel");
  }
  const int lines = panel.lines();
  const int dim = panel.dim();
  const int k = gamma_block_size(sampler.extended);
  const bool ratios = panel.scale() == ClaimScale::loss_ratio;

  ReserveDistribution dist;
  for (const auto& l : panel.all_lines()) dist.line_names.push_back(l.name());
  dist.dim = dim;
  dist.draws = config.draws;
  dist.seed = config.seed;
  dist.line_totals = Eigen::MatrixXd::Zero(config.draws, lines);
  dist.aggregate = Eigen::VectorXd::Zero(config.draws);
  dist.by_ay.assign(static_cast<std::size_t>(lines), Eigen::MatrixXd::Zero(config.draws, dim));

  parallel_for(static_cast<std::size_t>(config.draws), config.workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t dd = b; dd < e; ++dd) {
      const auto d = static_cast<Eigen::Index>(dd);
      RandomStream post_rng(config.seed, {label_hash("forecast-posterior"), dd});
      const PosteriorDraw draw = sampler.draw(post_rng);
      RandomStream h_rng(config.seed, {label_hash("forecast-calendar"), dd});
      RandomStream cell_rng(config.seed, {label_hash("forecast-cells"), dd});
      std::vector<Eigen::VectorXd> h(static_cast<std::size_t>(lines), Eigen::VectorXd(2 * dim - 1));
      std::vector<double> last(static_cast<std::size_t>(lines));
      for (int n = 0; n < lines; ++n) {
        const auto idx = static_cast<std::size_t>(n);
        h[idx].head(dim) = draw.psi[idx];
        last[idx] = draw.psi[idx](dim - 1);
      }
      for (int t = dim + 1; t <= 2 * dim - 1; ++t) {
        last = evolve_calendar(last, draw.params, h_rng).h;
        for (int n = 0; n < lines; ++n) h[static_cast<std::size_t>(n)](t - 1) = last[static_cast<std::size_t>(n)];
      }
      double total = 0.0;
      for (int n = 0; n < lines; ++n) {
        const auto idx = static_cast<std::size_t>(n);
        const auto& lp = draw.params.lines[idx];
        const auto& tri = panel.line(n);
        double line_total = 0.0;
        for (int i = 2; i <= dim; ++i) {
          const Eigen::VectorXd g = draw.gamma_rows[idx].col(i - 1);
          if (g.size() != k) throw InputError("invalid filter output: gamma block length");
          double row = 0.0;
          for (int j = dim - i + 2; j <= dim; ++j) {
            const double eta = cell_predictor(g, h[idx], i, j);
            double y = 0.0;
            if (sampler.family == ObservationFamily::gaussian) {
              y = config.observation_noise ? cell_rng.normal(eta, std::sqrt(lp.phi)) : eta;
              if (config.log_scale) y = std::exp(y);
            } else {
              const double mu = std::exp(eta);
              y = config.observation_noise ? sample(mu, TweedieSpec{lp.p, lp.phi}, cell_rng) : mu;
            }
            if (ratios) y *= tri.exposure(i);
            row += y;
          }
          dist.by_ay[idx](d, i - 1) = row;
          line_total += row;
        }
        dist.line_totals(d, n) = line_total;
        total += line_total;
      }
      dist.aggregate(d) = total;
    }
  });
  return dist;
}

double var_quantile(const Eigen::VectorXd& samples, double chi) {
  if (samples.size() == 0) throw InputError("empty sample");
  if (!(chi > 0.0 && chi < 1.0)) throw InputError("VaR level must lie in (0, 1)");
  std::vector<double> v(samples.data(), samples.data() + samples.size());
  const auto s = static_cast<double>(v.size());
  // The small offset keeps levels such as 0.95 * 100 on their integer.
  auto k = static_cast<std::size_t>(std::ceil(chi * s - 1e-9));
  k = std::clamp<std::size_t>(k, 1, v.size());
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k - 1), v.end());
  return v[k - 1];
}

double risk_margin(double mean, double sd, double var) { return std::max(var - mean, 0.5 * sd); }

double risk_margin(const Eigen::VectorXd& samples, double chi) {
  const SampleStats st = sample_stats(samples, {chi});
  return st.margin.front();
}

double diversification_benefit(const std::vector<double>& line_margins, double aggregate_margin) {
  double sum = 0.0;
  for (double m : line_margins) sum += m;
  if (sum == 0.0) throw InputError("diversification benefit: zero sum of line margins");
  return (sum - aggregate_margin) / sum * 100.0;
}

SampleStats sample_stats(const Eigen::VectorXd& samples, const std::vector<double>& levels) {
  if (samples.size() == 0) throw InputError("empty sample");
  SampleStats st;
  const auto n = static_cast<double>(samples.size());
  st.mean = samples.mean();
  st.sd = samples.size() > 1 ? std::sqrt((samples.array() - st.mean).square().sum() / (n - 1.0)) : 0.0;
  st.levels = levels;
  for (double chi : levels) {
    const double v = var_quantile(samples, chi);
    st.var.push_back(v);
    st.margin.push_back(risk_margin(st.mean, st.sd, v));
  }
  return st;
}

std::vector<DensityPoint> kernel_density(const Eigen::VectorXd& samples, int grid_points) {
  std::vector<DensityPoint> out;
  const auto n = samples.size();
  if (n < 2 || grid_points < 2) return out;
  std::vector<double> v(samples.data(), samples.data() + n);
  std::sort(v.begin(), v.end());
  const double mean = samples.mean();
  const double sd = std::sqrt((samples.array() - mean).square().sum() / static_cast<double>(n - 1));
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  const double iqr = quantile(0.75) - quantile(0.25);
  double spread = sd;
  if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
  const double h = 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
  if (!(h > 0.0)) return out;
  const double lo = v.front() - 5.0 * h;
  const double hi = v.back() + 5.0 * h;
  const double step = (hi - lo) / (grid_points - 1);
  const double norm = 1.0 / (static_cast<double>(n) * h * std::sqrt(2.0 * std::numbers::pi));
  out.resize(static_cast<std::size_t>(grid_points));
  for (int g = 0; g < grid_points; ++g) {
    const double x = lo + step * g;
    // Samples farther than 8h contribute below 1e-14 relative; skip them.
    auto first = std::lower_bound(v.begin(), v.end(), x - 8.0 * h);
    auto last = std::upper_bound(v.begin(), v.end(), x + 8.0 * h);
    double acc = 0.0;
    for (auto it = first; it != last; ++it) {
      const double z = (x - *it) / h;
      acc += std::exp(-0.5 * z * z);
    }
    out[static_cast<std::size_t>(g)] = {x, acc * norm};
  }
  return out;
}

ForecastSummary summarize(const ReserveDistribution& dist, const std::vector<double>& levels) {
  ForecastSummary s;
  const int lines = static_cast<int>(dist.line_totals.cols());
  auto ay_stats = [&](const Eigen::MatrixXd& m) {
    Eigen::VectorXd mean = m.colwise().mean();
    Eigen::VectorXd sd(m.cols());
    const double denom = std::max<Eigen::Index>(m.rows() - 1, 1);
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      sd(c) = std::sqrt((m.col(c).array() - mean(c)).square().sum() / denom);
    }
    return std::make_pair(mean, sd);
  };
  Eigen::MatrixXd total_ay = Eigen::MatrixXd::Zero(dist.draws, dist.dim);
  for (int n = 0; n < lines; ++n) {
    s.columns.push_back(dist.line_names[static_cast<std::size_t>(n)]);
    s.totals.push_back(sample_stats(dist.line_totals.col(n), levels));
    const auto [mean, sd] = ay_stats(dist.by_ay[static_cast<std::size_t>(n)]);
    s.ay_mean.push_back(mean);
    s.ay_sd.push_back(sd);
    total_ay += dist.by_ay[static_cast<std::size_t>(n)];
  }
  s.columns.push_back("total");
  s.totals.push_back(sample_stats(dist.aggregate, levels));
  const auto [mean, sd] = ay_stats(total_ay);
  s.ay_mean.push_back(mean);
  s.ay_sd.push_back(sd);
  for (std::size_t l = 0; l < levels.size(); ++l) {
    std::vector<double> margins;
    for (int n = 0; n < lines; ++n) margins.push_back(s.totals[static_cast<std::size_t>(n)].margin[l]);
    double sum = 0.0;
    for (double m : margins) sum += m;
    s.diversification.push_back(sum > 0.0 ? diversification_benefit(margins, s.totals.back().margin[l])
                                          : 0.0);
  }
  return s;
}

}  // namespace evoglm
