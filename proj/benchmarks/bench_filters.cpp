#include <benchmark/benchmark.h>

#include "evoglm/dual_kalman.hpp"
#include "evoglm/particle_filter.hpp"
#include "evoglm/simulator.hpp"

namespace {

using namespace evoglm;

PriorSpec paper_prior(const SimConfig& c) {
  PriorSpec prior;
  for (int n = 0; n < c.line_count(); ++n) {
    const auto idx = static_cast<std::size_t>(n);
    const LineParams& lp = c.params.lines[idx];
    LinePrior l;
    l.sigma2_a = ComponentPrior::lognormal(std::log(lp.sigma2_a), 0.5);
    l.sigma2_r = ComponentPrior::lognormal(std::log(lp.sigma2_r), 0.5);
    l.sigma2_s = ComponentPrior::lognormal(std::log(lp.sigma2_s), 0.5);
    l.sigma2_h = ComponentPrior::lognormal(std::log(lp.sigma2_h), 0.5);
    l.lambda = ComponentPrior::normal(lp.lambda, 0.2);
    l.phi = ComponentPrior::lognormal(std::log(lp.phi), 0.3);
    l.p = ComponentPrior::fixed(lp.p);
    l.gamma_mean = c.gamma1[idx];
    l.gamma_cov = 0.01 * Eigen::MatrixXd::Identity(3, 3);
    l.h1_mean = 0.5;
    l.h1_var = 0.01;
    prior.lines.push_back(l);
  }
  prior.sigma2_h_tilde = ComponentPrior::lognormal(std::log(c.params.sigma2_h_tilde), 0.5);
  return prior;
}

void BM_ParticleFilterRun(benchmark::State& state) {
  const SimConfig c = SimConfig::paper_default();
  const SimResult sim = simulate_panel(c);
  const PriorSpec prior = paper_prior(c);
  PfConfig cfg;
  cfg.particles = static_cast<int>(state.range(0));
  cfg.workers = 1;
  for (auto _ : state) benchmark::DoNotOptimize(run(sim.panel, prior, cfg));
  state.SetItemsProcessed(state.iterations() * cfg.particles * c.dim);
}
BENCHMARK(BM_ParticleFilterRun)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

void BM_LookaheadWeights(benchmark::State& state) {
  const SimConfig c = SimConfig::paper_default();
  const SimResult sim = simulate_panel(c);
  const PriorSpec prior = paper_prior(c);
  const PfModel model = make_model(sim.panel, prior);
  PfConfig cfg;
  cfg.particles = 5000;
  const ParticleCloud cloud = initialize(model, prior, cfg);
  for (auto _ : state) {
    Lookahead ahead = shrink_lookahead(cloud, 0.98);
    benchmark::DoNotOptimize(lookahead_weights(model, cloud, ahead, 2, 1));
  }
}
BENCHMARK(BM_LookaheadWeights)->Unit(benchmark::kMillisecond);

void BM_KalmanRun(benchmark::State& state) {
  SimConfig c = SimConfig::paper_default();
  c.dim = static_cast<int>(state.range(0));
  c.family = ObservationFamily::gaussian;
  for (auto& l : c.params.lines) {
    l.p = 0.0;
    l.phi = 0.05;
  }
  const SimResult sim = simulate_panel(c);
  KalmanConfig k;
  for (int n = 0; n < 2; ++n) {
    k.gamma_mean.push_back(c.gamma1[static_cast<std::size_t>(n)]);
    k.gamma_cov.push_back(0.01 * Eigen::MatrixXd::Identity(3, 3));
  }
  k.h1_mean = Eigen::VectorXd::Constant(2, 0.5);
  k.h1_var = Eigen::VectorXd::Constant(2, 0.01);
  for (auto _ : state) benchmark::DoNotOptimize(log_likelihood(sim.panel, c.params, k));
}
BENCHMARK(BM_KalmanRun)->Arg(10)->Arg(15)->Arg(25)->Unit(benchmark::kMicrosecond);

}  // namespace
