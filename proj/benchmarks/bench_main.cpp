#include "svaro/explore.hpp"
#include "svaro/ising.hpp"
#include "svaro/lattice.hpp"
#include "svaro/sampler.hpp"
#include "svaro/simulate.hpp"

#include <benchmark/benchmark.h>

#include <cstdint>

namespace {

// One full sweep on a simulated dataset; state.range(0) is the lattice side.
void BM_Sweep(benchmark::State& state) {
  svaro::SimConfig sc = svaro::sim1_preset();
  sc.dims = {static_cast<int>(state.range(0)), static_cast<int>(state.range(0))};
  sc.T = 200;
  sc.P = 4;
  const svaro::Simulation sim = svaro::simulate(sc, 1);
  const svaro::Hyperparams h = svaro::default_hyperparams(4, 2);
  svaro::SamplerConfig cfg;
  cfg.seed = 7;
  svaro::Sampler sampler(sim.dataset, h, cfg);
  svaro::ModelState s = sampler.initial_state();
  std::uint64_t it = 0;
  for (auto _ : state) {
    sampler.sweep(s, it++);
    benchmark::DoNotOptimize(s.W.data());
  }
  state.SetItemsProcessed(state.iterations() * sim.dataset.N());
}
BENCHMARK(BM_Sweep)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_Coloring(benchmark::State& state) {
  const int v = static_cast<int>(state.range(0));
  const svaro::LatticeGraph g = svaro::build_full_lattice({v, v, v});
  for (auto _ : state) benchmark::DoNotOptimize(svaro::color_for_sweep(g));
}
BENCHMARK(BM_Coloring)->Arg(16)->Arg(32);

void BM_LevinsonDurbin(benchmark::State& state) {
  svaro::Rng rng(3);
  const Eigen::VectorXd x = svaro::simulate_ar_noise(Eigen::Vector3d(0.5, -0.2, 0.1), 1.0, 352, rng);
  const Eigen::VectorXd acov = svaro::autocovariance(x, 12);
  for (auto _ : state) benchmark::DoNotOptimize(svaro::levinson_durbin(acov, 12));
}
BENCHMARK(BM_LevinsonDurbin);

void BM_ExactIsing(benchmark::State& state) {
  const svaro::LatticeGraph g = svaro::build_full_lattice({4, 4});
  for (auto _ : state) benchmark::DoNotOptimize(svaro::exact_ising(g, -0.2, 0.3));
}
BENCHMARK(BM_ExactIsing);

}  // namespace
BENCHMARK_MAIN();
