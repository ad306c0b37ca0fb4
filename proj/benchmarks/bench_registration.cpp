#include <benchmark/benchmark.h>

#include <bodyfit/registration.hpp>
#include <bodyfit/synth.hpp>

using namespace bodyfit;

// One Adam iteration of the registration energy (tape build + backward).
static void BM_RegistrationIteration(benchmark::State& state) {
    const BodyTemplate tpl = builtin_humanoid();
    const KeypointMap& map = KeypointMap::standard16();
    SynthConfig sc;
    sc.count = 1;
    sc.dense_points = (int)state.range(0);
    sc.seed = 3;
    const SynthDataset data = synth_dataset(tpl, map, sc);

    RegistConfig cfg;
    cfg.iterations = 1;
    const std::vector<BodyParams> init{default_init(tpl, data.samples[0], map)};
    for (auto _ : state) {
        auto result = register_samples(tpl, data.samples, init, cfg, map);
        benchmark::DoNotOptimize(result.fitted[0].scale);
    }
}
BENCHMARK(BM_RegistrationIteration)->Arg(100)->Arg(300);

BENCHMARK_MAIN();
