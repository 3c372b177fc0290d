#include <benchmark/benchmark.h>

#include <limits>
#include <random>
#include <vector>

#include "rankone/convexify1d.hpp"
#include "rankone/engine.hpp"
#include "rankone/forest.hpp"

using namespace rankone;

namespace {

MaterialSpec nh() { return MaterialSpec{Model::NeoHooke, 0.5, 1.0, 0.3, 0.9, Jacobian::InvariantRoot}; }

void BM_Convexify(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> x(n), w(n), y(n), c(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = static_cast<double>(i);
    w[i] = u(rng);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(convexify_into(x.data(), w.data(), n, y.data(), c.data()));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Convexify)->RangeMultiplier(4)->Range(16, 4096);

// One lamination sweep with the 16 reduced directions.
void BM_EngineSweep(benchmark::State& state) {
  const GridSpec g = GridSpec::box(2, 1.0, 3.4, -0.15 * static_cast<double>(state.range(0)),
                                   0.15 * static_cast<double>(state.range(0)), 0.15);
  const ScalarField w = sample_potential(g, nh(), HistoryState::with_beta(2, 0.06));
  RelaxationConfig cfg;
  cfg.directions = reduced_set(1, 2);
  cfg.k_max = 1;
  cfg.tol = std::numeric_limits<double>::min();
  for (auto _ : state) benchmark::DoNotOptimize(relax(w, cfg).max_decrease);
  state.counters["nodes"] = static_cast<double>(g.node_count());
  state.SetItemsProcessed(state.iterations() * g.node_count());
}
BENCHMARK(BM_EngineSweep)->Arg(1)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_TreeStress(benchmark::State& state) {
  const GridSpec g = GridSpec::box(2, 1.0, 3.4, -0.15, 0.15, 0.15);
  const HistoryState h = HistoryState::with_beta(2, 0.06);
  RelaxationConfig cfg;
  cfg.directions = reduced_set(1, 2);
  cfg.track_forest = true;
  const RelaxationResult r = relax(sample_potential(g, nh(), h), cfg);
  Matrix f(2, 2);
  f << 1.83, 0.04, -0.02, 1.61;
  for (auto _ : state) benchmark::DoNotOptimize(eval_envelope(f, *r.forest, r.iterations, nh(), h).stress);
}
BENCHMARK(BM_TreeStress);

}  // namespace

BENCHMARK_MAIN();
