#include <benchmark/benchmark.h>

#include <bodyfit/ad/tape.hpp>

using namespace bodyfit;

// Chained scalar graph: forward build + one reverse sweep.
static void BM_TapeChain(benchmark::State& state) {
    const int n = (int)state.range(0);
    ad::Tape tape;
    for (auto _ : state) {
        tape.clear();
        ad::Value x = tape.var(0.5);
        ad::Value acc = tape.constant(0.0);
        for (int i = 0; i < n; ++i) acc = acc + sin(x * (double)i) * exp(x * 1e-3);
        auto grads = tape.backward(acc);
        benchmark::DoNotOptimize(grads[x]);
    }
    state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_TapeChain)->Arg(1000)->Arg(10000);

// Fused dot versus elementwise accumulation.
static void BM_TapeDot(benchmark::State& state) {
    const int n = (int)state.range(0);
    ad::Tape tape;
    for (auto _ : state) {
        tape.clear();
        std::vector<ad::Value> a, b;
        for (int i = 0; i < n; ++i) {
            a.push_back(tape.var(0.01 * i));
            b.push_back(tape.var(1.0 - 0.01 * i));
        }
        ad::Value d = dot(std::span<const ad::Value>(a), std::span<const ad::Value>(b));
        auto grads = tape.backward(d);
        benchmark::DoNotOptimize(grads[a[0]]);
    }
    state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_TapeDot)->Arg(128)->Arg(1024);

BENCHMARK_MAIN();
