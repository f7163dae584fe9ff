// Serial vs OpenMP leapfrog step on an H-CBG map at the default grid.

#include <benchmark/benchmark.h>

#include "cbg/fdtd.hpp"
#include "cbg/geometry.hpp"
#include "cbg/kernels.hpp"

namespace {

void step(benchmark::State& state, cbg::KernelBackend backend) {
  cbg::GridSpec grid;
  grid.resolution_nm = static_cast<double>(state.range(0));
  const auto map = cbg::build_structure(cbg::HCbgSpec{}, grid);
  cbg::SimulationConfig cfg;
  cfg.backend = backend;
  cbg::BorSimulation sim(map, cbg::DipoleSource{}, {}, cfg);
  for (auto _ : state) sim.step();
  const double cells = static_cast<double>(map.nr()) * map.nz();
  state.counters["cells"] = cells;
  state.counters["cell_updates/s"] = benchmark::Counter(cells, benchmark::Counter::kIsIterationInvariantRate);
  state.counters["threads"] = backend == cbg::KernelBackend::openmp ? cbg::kernels::omp_threads() : 1;
}

void serial(benchmark::State& s) { step(s, cbg::KernelBackend::serial); }
void openmp(benchmark::State& s) { step(s, cbg::KernelBackend::openmp); }

}  // namespace

BENCHMARK(serial)->Arg(30)->Arg(15)->Unit(benchmark::kMillisecond);
BENCHMARK(openmp)->Arg(30)->Arg(15)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
