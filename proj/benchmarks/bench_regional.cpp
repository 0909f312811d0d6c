#include <benchmark/benchmark.h>

#include "regflood/eval.hpp"
#include "regflood/regional.hpp"

namespace {

regflood::Region region() {
  regflood::SynthSpec spec;
  spec.seed = 42;
  return regflood::synth_region(spec).region;
}

void BM_Discordancy(benchmark::State& state) {
  const auto r = region();
  for (auto _ : state) benchmark::DoNotOptimize(regflood::discordancy(r));
}
BENCHMARK(BM_Discordancy);

void BM_Heterogeneity(benchmark::State& state) {
  const auto r = region();
  for (auto _ : state) {
    benchmark::DoNotOptimize(regflood::heterogeneity(r, static_cast<int>(state.range(0)), 7, 1));
  }
}
BENCHMARK(BM_Heterogeneity)->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_GrowthCurve(benchmark::State& state) {
  const auto r = region();
  for (auto _ : state) benchmark::DoNotOptimize(regflood::growth_curve(r));
}
BENCHMARK(BM_GrowthCurve);

void BM_ElicitPrior(benchmark::State& state) {
  const auto r = region();
  for (auto _ : state) benchmark::DoNotOptimize(regflood::elicit_prior(r, r.target));
}
BENCHMARK(BM_ElicitPrior)->Unit(benchmark::kMillisecond);

void BM_SynthRegion(benchmark::State& state) {
  regflood::SynthSpec spec;
  for (auto _ : state) {
    ++spec.seed;
    benchmark::DoNotOptimize(regflood::synth_region(spec));
  }
}
BENCHMARK(BM_SynthRegion);

}  // namespace
