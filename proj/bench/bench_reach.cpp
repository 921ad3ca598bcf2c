#include <benchmark/benchmark.h>
#include <omp.h>

#include "rch/reach.hpp"

using namespace rch;

namespace {

struct Setup {
    VectorField f = builtin("saddle_node_rot");
    GridSpec g = GridSpec::make(Box{{-1, -1}, {1, 1}}, 0.004);
    CellSet seed = CellSet::from_point(g, {0.0, 0.0});
    ReachConfig c;
    Setup() {
        c.r = 0.15;
        c.H = 0.5;
        c.seed_invariant = true;
    }
};

void BM_over_serial(benchmark::State& st) {
    Setup s;
    long cells = 0;
    for (auto _ : st) {
        OverResult o = reach_over_serial(s.f, s.seed, s.c);
        cells = o.set.count();
        benchmark::DoNotOptimize(cells);
    }
    st.counters["cells"] = static_cast<double>(cells);
}

void BM_over_omp(benchmark::State& st) {
    Setup s;
    int before = omp_get_max_threads();
    omp_set_num_threads(static_cast<int>(st.range(0)));
    long cells = 0;
    for (auto _ : st) {
        OverResult o = reach_over(s.f, s.seed, s.c);
        cells = o.set.count();
        benchmark::DoNotOptimize(cells);
    }
    omp_set_num_threads(before);
    st.counters["cells"] = static_cast<double>(cells);
}

void BM_under(benchmark::State& st) {
    Setup s;
    for (auto _ : st) {
        UnderResult u = reach_under(s.f, s.seed, s.c);
        benchmark::DoNotOptimize(u.set.count());
    }
}

}  // namespace

BENCHMARK(BM_over_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_over_omp)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_under)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
