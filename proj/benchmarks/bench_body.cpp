#include <benchmark/benchmark.h>

#include <bodyfit/body_model.hpp>
#include <bodyfit/body_template.hpp>
#include <bodyfit/camera.hpp>

using namespace bodyfit;

static BodyParams bent_pose() {
    BodyParams p = BodyParams::t_pose();
    for (int j = 0; j < BodyTemplate::kNumJoints; ++j) p.pose[j] = {0.1, -0.05, 0.2};
    return p;
}

// Full skinning pass: FK + blend of every vertex.
static void BM_PoseBody(benchmark::State& state) {
    const BodyTemplate tpl = builtin_humanoid();
    const BodyParams p = bent_pose();
    for (auto _ : state) {
        PosedBody posed = pose_body(tpl, p);
        benchmark::DoNotOptimize(posed.vertices.back());
    }
    state.SetItemsProcessed(state.iterations() * tpl.n_vertices());
}
BENCHMARK(BM_PoseBody);

// Projection of the posed surface.
static void BM_Project(benchmark::State& state) {
    const BodyTemplate tpl = builtin_humanoid();
    const BodyParams p = bent_pose();
    const PosedBody posed = pose_body(tpl, p);
    const WeakPerspectiveCamera cam{p.rotation_raw, 180.0, {256.0, 256.0}};
    for (auto _ : state) {
        auto pixels = project(posed.vertices, cam);
        benchmark::DoNotOptimize(pixels.back());
    }
    state.SetItemsProcessed(state.iterations() * tpl.n_vertices());
}
BENCHMARK(BM_Project);

BENCHMARK_MAIN();
