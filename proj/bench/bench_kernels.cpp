// Serial reference vs OpenMP kernels on synthetic batches. Run with
// --benchmark_filter=crps or =reliability to narrow down.
#include <benchmark/benchmark.h>

#include <vector>

#include "powcal/rng.hpp"
#include "powcal/scoring.hpp"

namespace {

using namespace powcal;

struct Batch {
  std::vector<std::vector<double>> ensembles;
  std::vector<double> ys;
};

Batch make_batch(std::size_t n, std::size_t k) {
  CounterRng rng(0xBE7C);
  Batch b;
  b.ensembles.resize(n);
  b.ys.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    b.ensembles[t].resize(k);
    for (double& m : b.ensembles[t]) m = 50.0 + 15.0 * rng.normal();
    b.ys[t] = 50.0 + 18.0 * rng.normal();
  }
  return b;
}

void bm_crps_average(benchmark::State& state, Exec exec) {
  const Batch b = make_batch(static_cast<std::size_t>(state.range(0)), 51);
  for (auto _ : state) {
    benchmark::DoNotOptimize(crps_average(b.ensembles, b.ys, exec));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void bm_reliability(benchmark::State& state, Exec exec) {
  const Batch b = make_batch(static_cast<std::size_t>(state.range(0)), 51);
  const std::vector<double> levels = reliability_levels();
  for (auto _ : state) {
    benchmark::DoNotOptimize(reliability_curve(b.ensembles, b.ys, levels, exec));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void crps_average_serial(benchmark::State& s) { bm_crps_average(s, Exec::Serial); }
void crps_average_parallel(benchmark::State& s) { bm_crps_average(s, Exec::Parallel); }
void reliability_serial(benchmark::State& s) { bm_reliability(s, Exec::Serial); }
void reliability_parallel(benchmark::State& s) { bm_reliability(s, Exec::Parallel); }

BENCHMARK(crps_average_serial)->Arg(1000)->Arg(20000);
BENCHMARK(crps_average_parallel)->Arg(1000)->Arg(20000);
BENCHMARK(reliability_serial)->Arg(1000)->Arg(20000);
BENCHMARK(reliability_parallel)->Arg(1000)->Arg(20000);

}  // namespace

BENCHMARK_MAIN();
