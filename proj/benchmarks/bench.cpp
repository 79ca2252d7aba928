#include <benchmark/benchmark.h>

#include "qsynth/gallery.hpp"
#include "qsynth/synthesis.hpp"

using namespace qsynth;

namespace {

void BM_ComposeProdCons(benchmark::State& state) {
    auto gi = gen_producer_consumer(1, 1, (int)state.range(0), Rat(1), Rat(100));
    for (auto _ : state) {
        Composer c(gi.program, gi.sched, gi.perf, gi.conds);
        benchmark::DoNotOptimize(c.game().states.size());
    }
}
BENCHMARK(BM_ComposeProdCons)->Arg(1)->Arg(2)->Arg(3);

void BM_ResolveProdCons(benchmark::State& state) {
    auto gi = gen_producer_consumer(1, 1, (int)state.range(0), Rat(1), Rat(100));
    for (auto _ : state) {
        auto r = resolve(gi.program, gi.sched, gi.perf, gi.conds);
        benchmark::DoNotOptimize(r.value);
    }
}
BENCHMARK(BM_ResolveProdCons)->Arg(1)->Arg(2);

void BM_ChainValue(benchmark::State& state) {
    // lazy ring chain: stresses the exact stationary-distribution solver
    int n = (int)state.range(0);
    MDP m;
    m.states.resize(n);
    for (int i = 0; i < n; ++i) {
        MDP::Action a;
        a.edges.push_back({(i + 1) % n, Rat(1) / Rat(2), Rat(i % 5)});
        a.edges.push_back({(i * 7 + 3) % n != i ? (i * 7 + 3) % n : (i + 2) % n, Rat(1) / Rat(2),
                           Rat(0)});
        if (a.edges[0].target == a.edges[1].target) {
            a.edges.pop_back();
            a.edges[0].prob = Rat(1);
        }
        m.states[i].actions.push_back(a);
    }
    for (auto _ : state) {
        auto v = mc_value(m);
        benchmark::DoNotOptimize(v);
    }
}
BENCHMARK(BM_ChainValue)->Arg(50)->Arg(200);

void BM_MaxMeanCycle(benchmark::State& state) {
    int n = (int)state.range(0);
    WeightedTS ts;
    ts.succ.resize(n);
    ts.bad.assign(n, 0);
    for (int i = 0; i < n; ++i) {
        ts.succ[i].push_back({(i + 1) % n, Rat((i * 13 + 7) % 11, 1 + i % 3)});
        ts.succ[i].push_back({(i * 5 + 2) % n, Rat((i * 3 + 1) % 7)});
    }
    for (auto _ : state) {
        auto v = max_mean_cycle(ts);
        benchmark::DoNotOptimize(v);
    }
}
BENCHMARK(BM_MaxMeanCycle)->Arg(100)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
