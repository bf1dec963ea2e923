#include <benchmark/benchmark.h>

#include "mav/marching_tet.hpp"

using namespace mav;

static SdfGrid make_sphere_field(int resolution) {
    TetGrid grid = build_grid(resolution, Box3{Vec3(-1), Vec3(1)});
    SdfGrid sdf(std::move(grid));
    fill_sdf(sdf, [](const Vec3& p) { return length(p) - 0.6; });
    return sdf;
}

static void BM_IsosurfaceExtract(benchmark::State& state) {
    SdfGrid sdf = make_sphere_field(int(state.range(0)));
    size_t faces = 0;
    for (auto _ : state) {
        ExtractedMesh mesh = marching_tetrahedra(sdf);
        faces = mesh.faces.size();
        benchmark::DoNotOptimize(mesh.vertices.data());
    }
    state.counters["faces"] = double(faces);
}
BENCHMARK(BM_IsosurfaceExtract)->Arg(32)->Arg(64)->Arg(96)->Unit(benchmark::kMillisecond);

static void BM_ExtractBackward(benchmark::State& state) {
    SdfGrid sdf = make_sphere_field(int(state.range(0)));
    ExtractedMesh mesh = marching_tetrahedra(sdf);
    std::vector<Vec3> vgrads(mesh.vertices.size(), Vec3(1.0));
    std::vector<double> value_grads;
    for (auto _ : state) {
        value_grads.assign(sdf.values.size(), 0.0);
        mt_backward(mesh, sdf.grid, vgrads, value_grads);
        benchmark::DoNotOptimize(value_grads.data());
    }
}
BENCHMARK(BM_ExtractBackward)->Arg(64)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
