// Serial reference vs OpenMP sweep of the reduced residuals on a vacuum metric.
#include "forge/expression.hpp"
#include "forge/generators.hpp"
#include "forge/sweep.hpp"

#include <benchmark/benchmark.h>

using namespace forge;

namespace {

struct Setup {
    GridSpec grid;
    AnsatzMetric metric;
    Setup() {
        grid.x2 = {1.5, 2, 9};
        grid.x3 = {0, 0.5, 9};
        grid.v = {0.5, 1.5, 9};
        metric = vacuum_solitonic_metric(parse_field("x2^2 - x3^2"), SolitonChoice{}, PpWaveChoice{}, 2,
                                         parse_field("x2*x3"), parse_field("x2^2/2"), grid);
    }
};

void run(benchmark::State& state, SweepMode mode) {
    static const Setup s;
    ResidualEngine eng(s.metric, FdConfig::from_grid(s.grid, DerivPolicy::fd_only));
    const auto pts = s.grid.points();
    for (auto _ : state) {
        auto r = sweep<real>(pts, [&](const ChartPoint& p, EvalCache& c) { return eng.reduced(p, c).max_abs(); },
                             mode);
        benchmark::DoNotOptimize(r.data());
    }
    state.counters["points"] = double(pts.size());
    state.counters["threads"] = mode == SweepMode::serial ? 1 : sweep_threads();
}

void BM_serial(benchmark::State& st) { run(st, SweepMode::serial); }
void BM_parallel(benchmark::State& st) { run(st, SweepMode::parallel); }

}  // namespace

BENCHMARK(BM_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
