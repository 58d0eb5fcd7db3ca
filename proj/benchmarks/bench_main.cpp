#include <benchmark/benchmark.h>

#include "gbc/envelope_opt.hpp"
#include "gbc/lab.hpp"
#include "gbc/linalg.hpp"
#include "gbc/rates.hpp"
#include "gbc/rng.hpp"

namespace {

using namespace gbc;

void BM_SymEigen(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const SymMatrix a(random_psd(rng, n, 1.0));
  for (auto _ : state) benchmark::DoNotOptimize(sym_eigen(a));
}
BENCHMARK(BM_SymEigen)->Arg(2)->Arg(4)->Arg(8)->Arg(16);

void BM_GaussMi(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  const Matrix g = random_gain(rng, n);
  const PsdMatrix k(random_psd(rng, n, 1.0));
  for (auto _ : state) benchmark::DoNotOptimize(gauss_mi(g, k));
}
BENCHMARK(BM_GaussMi)->Arg(2)->Arg(4)->Arg(8);

void BM_VLambda(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  const ChannelPair ch(random_gain(rng, n), random_gain(rng, n));
  const PsdMatrix k(random_psd(rng, n, 2.0));
  OptConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(v_lambda(ch, k, 2.0, cfg));
}
BENCHMARK(BM_VLambda)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_MinimaxScalar(benchmark::State& state) {
  const ChannelPair ch(Matrix{{1}}, Matrix{{0.5}});
  OptConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(minimax_alpha(ch, PsdMatrix{{1}}, 3.0, 1.0, 1.0, cfg));
}
BENCHMARK(BM_MinimaxScalar)->Unit(benchmark::kMillisecond);

void BM_OutputEntropy(benchmark::State& state) {
  const GridDistribution p = GridDistribution::uniform(1.7);
  for (auto _ : state) benchmark::DoNotOptimize(output_entropy(p, 1.0));
}
BENCHMARK(BM_OutputEntropy)->Unit(benchmark::kMicrosecond);

void BM_DoublingStep(benchmark::State& state) {
  const GridDistribution p = GridDistribution::uniform(1.7);
  for (auto _ : state) benchmark::DoNotOptimize(doubling_step(p));
}
BENCHMARK(BM_DoublingStep)->Unit(benchmark::kMicrosecond);

void BM_SumDiffMi(benchmark::State& state) {
  const GridDistribution p = GridDistribution::discretized_gaussian(1.0);
  for (auto _ : state) benchmark::DoNotOptimize(sum_diff_mi(p));
}
BENCHMARK(BM_SumDiffMi)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
