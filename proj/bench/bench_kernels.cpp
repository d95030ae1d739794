// Serial vs OpenMP timings of the main per-step kernels on a 2D grid.

#include "mixflow/coupled.hpp"

#include <benchmark/benchmark.h>

#include <cmath>

namespace {

using namespace mixflow;

CoupledProblem make_bench_problem(std::size_t n, Exec exec) {
    MixtureModel m;
    m.species.molecular_masses = {1.0, 1.0};
    m.pressure = PressureLaw::power_law(1.0, 2.0);
    m.extension = VolumeExtension::linear_combination({1.0, 1.0});
    CoupledProblem p(StructuredGrid::box(n, n, {0.0, 0.0}, {1.0, 1.0}), m);
    p.options.exec = exec;
    p.sync_options();
    return p;
}

SpeciesField bump(const StructuredGrid& g) {
    SpeciesField rho(g, 2);
    for (std::size_t c = 0; c < g.num_cells(); ++c) {
        const Point x = g.center(c);
        const double r2 = (x[0] - 0.5) * (x[0] - 0.5) + (x[1] - 0.5) * (x[1] - 0.5);
        const double w = 1.0 + 0.5 * std::exp(-r2 / 0.02);
        rho.at(c, 0) = x[0] < 0.5 ? w : 0.0;
        rho.at(c, 1) = x[0] < 0.5 ? 0.0 : w;
    }
    return rho;
}

void BM_DecomposedStep(benchmark::State& state) {
    const Exec exec = state.range(1) ? Exec::Parallel : Exec::Serial;
    CoupledProblem p = make_bench_problem(static_cast<std::size_t>(state.range(0)), exec);
    const MixtureState s0 = init_decomposition(bump(p.grid()), p);
    for (auto _ : state) {
        MixtureState s1 = step_decomposed(s0, 1e-3, p);
        benchmark::DoNotOptimize(s1.w.values().data());
    }
}

void BM_SemiLagrangian(benchmark::State& state) {
    const Exec exec = state.range(1) ? Exec::Parallel : Exec::Serial;
    CoupledProblem p = make_bench_problem(static_cast<std::size_t>(state.range(0)), exec);
    p.options.transport = TransportScheme::SemiLagrangian;
    const MixtureState s0 = init_decomposition(bump(p.grid()), p);
    for (auto _ : state) {
        MixtureState s1 = step_decomposed(s0, 1e-3, p);
        benchmark::DoNotOptimize(s1.u.values().data());
    }
}

void BM_DirectStep(benchmark::State& state) {
    const Exec exec = state.range(1) ? Exec::Parallel : Exec::Serial;
    CoupledProblem p = make_bench_problem(static_cast<std::size_t>(state.range(0)), exec);
    const SpeciesField rho = bump(p.grid());
    const double dt = direct_stable_dt(rho, p);
    for (auto _ : state) {
        SpeciesField r = step_direct(rho, dt, p);
        benchmark::DoNotOptimize(r.values().data());
    }
}

}  // namespace

BENCHMARK(BM_DecomposedStep)->ArgsProduct({{64, 128}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SemiLagrangian)->ArgsProduct({{64, 128}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DirectStep)->ArgsProduct({{64, 128}, {0, 1}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
