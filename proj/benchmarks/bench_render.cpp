#include <benchmark/benchmark.h>

#include "mav/fixtures.hpp"
#include "mav/renderer.hpp"

using namespace mav;

namespace {

struct BenchScene {
    TriMesh mesh;
    Bvh bvh;
    std::vector<Vec3> normals;
    MaterialGrid material;
    EnvMap env;
    EnvCdf cdf;
    Scene scene;

    BenchScene() {
        mesh = make_sphere_mesh(0.6, 64);
        bvh = Bvh(mesh);
        normals = vertex_normals(mesh);
        material = MaterialGrid(16, mesh.bounds().dilated(0.2), 0);
        fill_two_tone_material(material, {0.7, 0.3, 0.2}, {0.2, 0.3, 0.7}, 0.4);
        env = make_gradient_env(32, 16);
        cdf = build_env_cdf(env);
        scene.mesh = &mesh;
        scene.bvh = &bvh;
        scene.normals = &normals;
        scene.canonical = &mesh.vertices;
        scene.material = &material;
        scene.env = &env;
        scene.env_cdf = &cdf;
    }
};

}  // namespace

static void BM_Render(benchmark::State& state) {
    static BenchScene bs;
    int size = int(state.range(0));
    int spp = int(state.range(1));
    Camera cam = look_at_camera({0, 0, -2.4}, {0, 0, 0}, {0, 1, 0},
                                45 * kPi / 180, size, size);
    RenderOptions opts;
    opts.spp = spp;
    for (auto _ : state) {
        RenderOutput out = render_image(bs.scene, cam, opts);
        benchmark::DoNotOptimize(out.radiance.data.data());
    }
    state.counters["Mray/s"] = benchmark::Counter(
        double(size) * size * spp * 2, benchmark::Counter::kIsIterationInvariantRate,
        benchmark::Counter::kIs1000);
}
BENCHMARK(BM_Render)->Args({128, 8})->Args({256, 16})->Args({512, 64})
    ->Unit(benchmark::kMillisecond);

static void BM_RenderBackward(benchmark::State& state) {
    static BenchScene bs;
    int size = int(state.range(0));
    Camera cam = look_at_camera({0, 0, -2.4}, {0, 0, 0}, {0, 1, 0},
                                45 * kPi / 180, size, size);
    RenderOptions opts;
    opts.spp = 8;
    opts.record_samples = true;
    RenderOutput out = render_image(bs.scene, cam, opts);
    Image grads(size, size, 3, 1.f);
    for (auto _ : state) {
        RenderGrads rg = render_backward(bs.scene, cam, out, grads, nullptr, opts);
        benchmark::DoNotOptimize(rg.env.data());
    }
}
BENCHMARK(BM_RenderBackward)->Arg(128)->Unit(benchmark::kMillisecond);
