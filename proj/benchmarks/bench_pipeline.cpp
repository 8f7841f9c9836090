#include <benchmark/benchmark.h>

#include "nudgesim/driver.hpp"
#include "nudgesim/motioncluster.hpp"
#include "nudgesim/rng.hpp"

using namespace nudgesim;

namespace {

SceneState bench_scene(uint64_t seed, int n) {
    SceneConfig cfg;
    cfg.n_min = n;
    cfg.n_max = n;
    cfg.shape_set = ShapeSet::Convex;
    return generate_scene(cfg, seed);
}

std::pair<SceneState, SceneState> bench_step(uint64_t seed) {
    const SceneState before = bench_scene(seed, 6);
    NudgeCommand cmd;
    cmd.point = before.objects[0].centroid();
    cmd.direction = {1.0, 0.0};
    cmd.magnitude = 25.0;
    cmd.twist = 0.1;
    return {before, apply_nudge(before, cmd)};
}

} // namespace

static void BM_RenderLabels(benchmark::State& state) {
    const SceneState scene = bench_scene(1, static_cast<int>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(render_labels(scene));
    }
}
BENCHMARK(BM_RenderLabels)->Arg(4)->Arg(8);

static void BM_GroundTruthFlow(benchmark::State& state) {
    const auto [before, after] = bench_step(2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(ground_truth_flow(before, after));
    }
}
BENCHMARK(BM_GroundTruthFlow);

static void BM_DbscanFlowPoints(benchmark::State& state) {
    const auto [before, after] = bench_step(3);
    const FlowField flow = ground_truth_flow(before, after);
    const auto points = flow_to_points(flow, 0.5, static_cast<int>(state.range(0)));
    const ClusterParams params;
    for (auto _ : state) {
        benchmark::DoNotOptimize(dbscan(points, params));
    }
    state.counters["points"] = static_cast<double>(points.size());
}
BENCHMARK(BM_DbscanFlowPoints)->Arg(1)->Arg(2);

static void BM_WarpMasks(benchmark::State& state) {
    const auto [before, after] = bench_step(4);
    const FlowField flow = ground_truth_flow(before, after);
    const auto points = flow_to_points(flow, 0.5, 1);
    const auto assign = dbscan(points, ClusterParams{});
    const auto raw = masks_from_assignment(assign, points, flow.width, flow.height, 1);
    const auto hyp = hypothesis_from_raw(raw, 0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(warp_masks(hyp, flow));
    }
}
BENCHMARK(BM_WarpMasks);

static void BM_FullTrial(benchmark::State& state) {
    RunConfig cfg;
    cfg.scene.n_min = 5;
    cfg.scene.n_max = 8;
    cfg.scene.shape_set = ShapeSet::Convex;
    cfg.write_snapshots = false;
    uint64_t seed = 100;
    for (auto _ : state) {
        benchmark::DoNotOptimize(run_trial(cfg, seed++));
    }
}
BENCHMARK(BM_FullTrial)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
