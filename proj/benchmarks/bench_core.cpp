#include <benchmark/benchmark.h>

#include <vector>

#include "depfdr/cond_likelihood.hpp"
#include "depfdr/hmm_signal.hpp"
#include "depfdr/matrix_ensembles.hpp"
#include "depfdr/procedures.hpp"
#include "depfdr/sim_harness.hpp"

using namespace depfdr;

namespace {

ParentChainSpec bench_chain() {
  auto rng = Rng::derive(1, StreamTag::structure);
  const NullStates f(5, std::vector<std::size_t>{0, 1});
  const auto pi = sample_stationary_vector(f, 0.1, rng);
  auto sample = sample_constrained_transition(pi, 0.5, 0.0, rng);
  return ParentChainSpec(f, pi, std::move(sample.matrix));
}

void BM_Sinkhorn(benchmark::State& state) {
  auto rng = Rng::derive(2, StreamTag::auxiliary);
  const NullStates f(5, std::vector<std::size_t>{0, 1});
  const auto pi = sample_stationary_vector(f, 0.1, rng);
  const Matrix a = sample_dirichlet_transition(5, rng).entries();
  for (auto _ : state) benchmark::DoNotOptimize(sinkhorn_balance(a, pi));
}
BENCHMARK(BM_Sinkhorn);

void BM_EstimateMoments(benchmark::State& state) {
  const auto spec = bench_chain();
  auto rng = Rng::derive(3, StreamTag::training);
  const auto theta = simulate_signal(spec, 100000, rng);
  for (auto _ : state) benchmark::DoNotOptimize(estimate_moments(theta, 3));
}
BENCHMARK(BM_EstimateMoments)->Unit(benchmark::kMillisecond);

void BM_ApproximateLogits(benchmark::State& state) {
  const auto spec = bench_chain();
  auto rng = Rng::derive(3, StreamTag::training);
  const auto moments = estimate_moments(simulate_signal(spec, 100000, rng), 3);
  const auto eta = simulate_signal(spec, 100000, rng);
  std::vector<double> x(eta.size());
  for (std::size_t t = 0; t < x.size(); ++t) x[t] = eta[t] + rng.normal();
  const Observations obs(x, 1.0);
  const auto noise = gaussian_noise();
  for (auto _ : state) benchmark::DoNotOptimize(approximate_logits(obs, noise, moments));
}
BENCHMARK(BM_ApproximateLogits)->Unit(benchmark::kMillisecond);

void BM_Replication(benchmark::State& state) {
  SimulationConfig cfg;
  cfg.m = 100000;
  cfg.w = 3;
  cfg.lambda = 0.5;
  cfg.n_reps = 1;
  cfg.seed = 4;
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment(cfg));
}
BENCHMARK(BM_Replication)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
