#include <benchmark/benchmark.h>

#include "sibucket/basis.hpp"
#include "sibucket/metrics.hpp"
#include "sibucket/patterns.hpp"
#include "sibucket/recon.hpp"
#include "sibucket/sim.hpp"

using namespace sibucket;

// Pseudo-random sets are the dense, non-orthogonal case; L^2 masks on L^2 cells.
static void BM_Gram(benchmark::State& state) {
  const auto L = static_cast<std::size_t>(state.range(0));
  const PatternSet p = pseudo_random_masks(L, 0.5, 2.0, 1);
  for (auto _ : state) benchmark::DoNotOptimize(gram(p));
  state.SetComplexityN(static_cast<long>(p.size()));
}
BENCHMARK(BM_Gram)->Arg(4)->Arg(8)->Arg(16)->Complexity();

static void BM_Biorthogonal(benchmark::State& state) {
  const auto L = static_cast<std::size_t>(state.range(0));
  const PatternSet p = pseudo_random_masks(L, 0.5, 2.0, 1);
  for (auto _ : state) benchmark::DoNotOptimize(biorthogonal(p));
  state.SetComplexityN(static_cast<long>(p.size()));
}
BENCHMARK(BM_Biorthogonal)->Arg(4)->Arg(8)->Arg(16)->Complexity();

static void BM_HarmonicBasis(benchmark::State& state) {
  const PatternSet p = harmonic_masks(static_cast<std::size_t>(state.range(0)), 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(biorthogonal(p));
}
BENCHMARK(BM_HarmonicBasis)->Arg(3)->Arg(5)->Arg(7);

static void BM_PoissonSampling(benchmark::State& state) {
  const PatternSet p = pixel_masks(8, 1.0, 1, static_cast<double>(state.range(0)));
  const MeasurementRecord means = bucket_means(ObjectSpec::flat(p.grid()), p);
  std::uint64_t trial = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sample_buckets(means, 42, trial++));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(p.size()));
}
BENCHMARK(BM_PoissonSampling)->Arg(10)->Arg(1000)->Arg(1000000);

static void BM_Reconstruct(benchmark::State& state) {
  const PatternSet p = pseudo_random_masks(8, 0.5, 2.0, 3, 0, 1.0, 1e4);
  const BasisBundle b = biorthogonal(p);
  const MeasurementRecord r = sample_buckets(bucket_means(ObjectSpec::step(p.grid()), p), 5);
  for (auto _ : state) benchmark::DoNotOptimize(reconstruct(r, b));
}
BENCHMARK(BM_Reconstruct);

static void BM_MonteCarloSnr(benchmark::State& state) {
  const PatternSet p = harmonic_masks(3, 1.0, 12, 1e6);
  const BasisBundle b = biorthogonal(p);
  const ObjectSpec flat = ObjectSpec::flat(p.grid());
  const auto trials = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(snr_monte_carlo(flat, p, b, 1e6, trials, 7));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(trials));
}
BENCHMARK(BM_MonteCarloSnr)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
