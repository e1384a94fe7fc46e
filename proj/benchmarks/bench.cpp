#include <benchmark/benchmark.h>

#include "densfilt/consensus.hpp"
#include "densfilt/filter.hpp"
#include "densfilt/grid.hpp"
#include "densfilt/kde.hpp"
#include "densfilt/swarm.hpp"

using namespace densfilt;

namespace {

Grid default_grid() { return make_grid(30, 30); }

void bm_assemble_operator(benchmark::State& state) {
    Grid grid = default_grid();
    DriftField drift = mixture_drift(spinning_mixture(), 0.03);
    double t = 0.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(assemble_fp_operator(grid, drift, t));
        t += 0.1;
    }
}
BENCHMARK(bm_assemble_operator);

void bm_density_advance(benchmark::State& state) {
    Grid grid = default_grid();
    DriftField drift = mixture_drift(spinning_mixture(), 0.03);
    DensityField p = uniform_density(grid);
    double t = 0.0;
    for (auto _ : state) {
        p = advance_density(p, drift, t, 0.1);
        t += 0.1;
    }
}
BENCHMARK(bm_density_advance);

void bm_kde_estimate(benchmark::State& state) {
    Grid grid = default_grid();
    AgentEnsemble ens = uniform_ensemble(100, grid.bounds, 1);
    KernelSpec spec;
    spec.bandwidth = default_bandwidth(100);
    for (auto _ : state) benchmark::DoNotOptimize(kde_estimate(ens.positions, spec, grid));
}
BENCHMARK(bm_kde_estimate);

void bm_filter_advance(benchmark::State& state) {
    Grid grid = default_grid();
    DriftField drift = mixture_drift(spinning_mixture(), 0.03);
    SparseOperator op = assemble_fp_operator(grid, drift, 0.0);
    AgentEnsemble ens = uniform_ensemble(100, grid.bounds, 1);
    KernelSpec spec;
    spec.bandwidth = default_bandwidth(100);
    Measurement y = kde_estimate(ens.positions, spec, grid);
    FilterState s = init_filter(y, grid, "bench");
    for (auto _ : state) filter_advance(s, op, y, 0.1);
}
BENCHMARK(bm_filter_advance);

void bm_pi_advance(benchmark::State& state) {
    Grid grid = default_grid();
    AgentEnsemble ens = uniform_ensemble(100, grid.bounds, 1);
    KernelSpec spec;
    spec.bandwidth = default_bandwidth(100);
    Eigen::MatrixXd signals(100, grid.size());
    for (int i = 0; i < 100; ++i)
        signals.row(i) = kernel_signal(ens.positions.row(i).transpose(), spec, grid);
    CommGraph g = build_graph(ens.positions, 0.25);
    ConsensusState s = init_consensus(signals, 0.2, 0.4, 0.04);
    for (auto _ : state) pi_advance(s, g, signals, 0.1);
}
BENCHMARK(bm_pi_advance);

}  // namespace

BENCHMARK_MAIN();
