#include <benchmark/benchmark.h>

#include "panelcp/panelcp.hpp"

using namespace panelcp;

namespace {

PanelData panel(int n, int t, int p = 1) {
    DGPConfig cfg = DGPConfig::two_breaks(n, t);
    cfg.n_regressors = p;
    cfg.beta = DGPConfig::alternating_beta(3, p);
    return generate_panel(cfg, 0).panel;
}

void BM_GramTable(benchmark::State& state) {
    const PanelData p = panel(static_cast<int>(state.range(0)), 20, static_cast<int>(state.range(1)));
    for (auto _ : state) benchmark::DoNotOptimize(build_gram_table(p));
    state.SetItemsProcessed(state.iterations() * p.n_individuals() * p.n_periods());
}
BENCHMARK(BM_GramTable)->Args({500, 1})->Args({500, 15})->Args({5000, 1});

void BM_SegmentTable(benchmark::State& state) {
    const GramTable gram = build_gram_table(panel(500, static_cast<int>(state.range(0)), 2));
    for (auto _ : state) benchmark::DoNotOptimize(SegmentSSETable(gram));
}
BENCHMARK(BM_SegmentTable)->Arg(20)->Arg(60)->Arg(120);

void BM_PartitionSolver(benchmark::State& state) {
    const int t = static_cast<int>(state.range(0));
    const SegmentSSETable table(build_gram_table(panel(200, t)));
    for (auto _ : state) {
        const PartitionSolver solver(table, t - 1);
        benchmark::DoNotOptimize(solver.solve(t / 2));
    }
}
BENCHMARK(BM_PartitionSolver)->Arg(20)->Arg(60)->Arg(120);

void BM_DetectAndSelect(benchmark::State& state) {
    const PanelData p = panel(static_cast<int>(state.range(0)), 20);
    for (auto _ : state) {
        DetectionResult det = detect_breaks(p);
        benchmark::DoNotOptimize(select_m(det, 1));
    }
}
BENCHMARK(BM_DetectAndSelect)->Arg(50)->Arg(500);

void BM_MonteCarloReplication(benchmark::State& state) {
    DGPConfig cfg = DGPConfig::single_break(500, 20, 6);
    cfg.replications = 1;
    ExperimentOptions opt;
    opt.kind = Experiment::Slopes;
    opt.threads = 1;
    for (auto _ : state) benchmark::DoNotOptimize(run_monte_carlo(cfg, opt));
}
BENCHMARK(BM_MonteCarloReplication);

}  // namespace
BENCHMARK_MAIN();
