#include <benchmark/benchmark.h>

#include <algorithm>
#include <vector>

#include "regflood/bayes.hpp"
#include "regflood/distributions.hpp"
#include "regflood/fit.hpp"
#include "regflood/lmoments.hpp"

namespace {

const regflood::GpParams kTruth{10.0, 5.0, 0.1};

void BM_SampleLmoments(benchmark::State& state) {
  const auto x = regflood::gp_sample(kTruth, static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(regflood::sample_lmoments(x));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SampleLmoments)->RangeMultiplier(4)->Range(16, 4096)->Complexity();

void BM_KappaFit(benchmark::State& state) {
  const regflood::LmomentSet lm{1.0, 0.25, 0.25, 0.3, 0.18};
  for (auto _ : state) benchmark::DoNotOptimize(regflood::kappa_fit_lmom(lm));
}
BENCHMARK(BM_KappaFit);

void BM_MleFixedLocation(benchmark::State& state) {
  const auto x = regflood::gp_sample(kTruth, static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(regflood::gp_fit_mle(x, kTruth.location));
}
BENCHMARK(BM_MleFixedLocation)->Arg(10)->Arg(64)->Arg(1000);

void BM_MleFreeLocation(benchmark::State& state) {
  const auto x = regflood::gp_sample(kTruth, 64, 3);
  for (auto _ : state) benchmark::DoNotOptimize(regflood::gp_fit_mle(x, std::nullopt));
}
BENCHMARK(BM_MleFreeLocation);

void BM_ProfileCi(benchmark::State& state) {
  const auto x = regflood::gp_sample(kTruth, 64, 4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(regflood::profile_ci(x, kTruth.location, 2.0, 10.0, 0.9));
  }
}
BENCHMARK(BM_ProfileCi);

void BM_Mcmc(benchmark::State& state) {
  const auto x = regflood::gp_sample(kTruth, static_cast<std::size_t>(state.range(0)), 5);
  regflood::PriorSpec prior;
  prior.gamma = {2.3, 1.6, 0.1};
  prior.d = {0.05, 0.1, 0.02};
  regflood::McmcConfig cfg;
  cfg.chains = 1;
  cfg.iterations = 5000;
  cfg.burn_in = 1000;
  for (auto _ : state) benchmark::DoNotOptimize(regflood::mcmc_sample(prior, x, cfg, 6));
}
BENCHMARK(BM_Mcmc)->Arg(10)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace
