#include <benchmark/benchmark.h>

#include <vector>

#include "ebselect/estimation.hpp"
#include "ebselect/prior.hpp"
#include "ebselect/rng.hpp"
#include "ebselect/selection.hpp"
#include "ebselect/simulation.hpp"

namespace {

using namespace ebselect;

Prior test_mixture() {
  return Prior{ScaleMixturePrior{{0.01, 0.09, 0.49, 2.25},
                                 {0.4, 0.3, 0.2, 0.1}}};
}

std::vector<Observation> draw_observations(std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  const Prior g0 = test_mixture();
  std::vector<Observation> obs;
  obs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double sigma = 0.4 + rng.next_double();
    obs.push_back(
        {sample_prior_once(g0, rng) + sigma * rng.next_normal(), sigma});
  }
  return obs;
}

void BM_PosteriorMeanMixture(benchmark::State& state) {
  const Prior g0 = test_mixture();
  SplitMix64 rng(1);
  for (auto _ : state) {
    const double x = 4.0 * rng.next_normal();
    benchmark::DoNotOptimize(posterior_mean(g0, 0.8, x));
  }
}
BENCHMARK(BM_PosteriorMeanMixture);

void BM_FitScaleMixture(benchmark::State& state) {
  const auto obs = draw_observations(static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) {
    auto fit = fit_scale_mixture(obs, default_scale_grid(obs));
    benchmark::DoNotOptimize(fit.first.weights.data());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_FitScaleMixture)->Range(256, 4096)->Complexity();

void BM_FitNpmle(benchmark::State& state) {
  const auto obs = draw_observations(static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) {
    auto fit = fit_npmle(obs, default_atom_grid(obs));
    benchmark::DoNotOptimize(fit.first.weights.data());
  }
}
BENCHMARK(BM_FitNpmle)->Range(256, 2048);

void BM_Wasserstein1(benchmark::State& state) {
  const Prior a = test_mixture();
  const Prior b{ScaleMixturePrior{{0.02, 0.2, 1.0, 3.0}, {0.3, 0.3, 0.3, 0.1}}};
  for (auto _ : state) benchmark::DoNotOptimize(wasserstein1(a, b));
}
BENCHMARK(BM_Wasserstein1);

void BM_SelectTopM(benchmark::State& state) {
  SplitMix64 rng(4);
  std::vector<double> scores(static_cast<std::size_t>(state.range(0)));
  for (double& s : scores) s = rng.next_normal();
  for (auto _ : state) {
    SplitMix64 tie(7);
    benchmark::DoNotOptimize(
        select_top_m(scores, scores.size() / 10, tie).selected.data());
  }
}
BENCHMARK(BM_SelectTopM)->Range(1024, 16384);

void BM_RunIteration(benchmark::State& state) {
  StudyConfig cfg;
  cfg.n_grid = {static_cast<int>(state.range(0))};
  cfg.alpha = 0.1;
  cfg.iterations = 1;
  cfg.methods = {Method::EbScaleMixture};
  cfg.g0 = test_mixture();
  cfg.h0 = DiscretePrior{{0.4, 0.7, 1.1}, {0.4, 0.4, 0.2}};
  cfg.master_seed = 5;
  std::uint64_t iter = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        run_iteration(cfg, cfg.n_grid[0], 1.0, iter++).data());
  }
}
BENCHMARK(BM_RunIteration)->Arg(250)->Arg(1000)->Arg(4000);

}  // namespace

BENCHMARK_MAIN();
