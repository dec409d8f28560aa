#include <benchmark/benchmark.h>

#include "evoglm/rng.hpp"
#include "evoglm/tweedie.hpp"

namespace {

void BM_TweedieLogPdf(benchmark::State& state) {
  const double p = static_cast<double>(state.range(0)) / 100.0;
  const evoglm::TweedieSpec spec{p, 0.4};
  double y = 0.5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(evoglm::log_pdf(y, 5.0, spec));
    y = y < 20.0 ? y + 0.37 : 0.5;
  }
}
BENCHMARK(BM_TweedieLogPdf)->Arg(110)->Arg(127)->Arg(150)->Arg(190);

void BM_TweedieSample(benchmark::State& state) {
  const evoglm::TweedieSpec spec{1.27, 0.4};
  evoglm::RandomStream rng(1, {0});
  for (auto _ : state) benchmark::DoNotOptimize(evoglm::sample(50.0, spec, rng));
}
BENCHMARK(BM_TweedieSample);

}  // namespace
