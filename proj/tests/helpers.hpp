#pragma once

#include <filesystem>
#include <string>

#include "mav/fixtures.hpp"
#include "mav/renderer.hpp"
#include "mav/rng.hpp"

namespace mavtest {

using namespace mav;

// Self-owned static scene so tests can render without wiring pointers by hand.
struct TestScene {
    TriMesh mesh;
    Bvh bvh;
    std::vector<Vec3> normals;
    MaterialGrid material;
    EnvMap env;
    EnvCdf cdf;
    Scene scene;

    void finish() {
        bvh = Bvh(mesh);
        normals = vertex_normals(mesh);
        cdf = build_env_cdf(env);
        scene = Scene{};
        scene.mesh = &mesh;
        scene.bvh = &bvh;
        scene.normals = &normals;
        scene.canonical = &mesh.vertices;
        scene.material = &material;
        scene.env = &env;
        scene.env_cdf = &cdf;
    }

    void rebuild_cdf() { cdf = build_env_cdf(env); }
};

inline void fill_uniform_material(MaterialGrid& grid, double albedo_logit,
                                  double rough_logit) {
    for (size_t i = 0; i < grid.values().size(); i += 4) {
        grid.values()[i] = albedo_logit;
        grid.values()[i + 1] = albedo_logit;
        grid.values()[i + 2] = albedo_logit;
        grid.values()[i + 3] = rough_logit;
    }
}

// Diffuse sphere under a constant white environment.
inline TestScene make_furnace_sphere(double albedo_logit = 20.0) {
    TestScene s;
    s.mesh = make_sphere_mesh(0.5, 32);
    s.material = MaterialGrid(2, s.mesh.bounds().dilated(0.2), 0);
    fill_uniform_material(s.material, albedo_logit, -20.0);
    s.env = EnvMap(8, 4, Vec3(1.0));
    s.finish();
    return s;
}

// Unit quad in the y=0 plane, normal +y.
inline TriMesh make_quad() {
    TriMesh quad;
    quad.vertices = {{-1, 0, -1}, {1, 0, -1}, {1, 0, 1}, {-1, 0, 1}};
    quad.faces = {{0, 2, 1}, {0, 3, 2}};
    return quad;
}

inline std::string temp_dir(const std::string& name) {
    std::string dir =
        (std::filesystem::temp_directory_path() / ("mav_test_" + name)).string();
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// Double-precision weighted radiance, bypassing the float image buffer so
// finite differences are not limited by float rounding. Matches render_image
// because primary rays are deterministic pixel centers.
inline double weighted_radiance(const Scene& scene, const Camera& cam,
                                const RenderOptions& opts, const Image& weights) {
    double sum = 0;
    for (int y = 0; y < cam.height; ++y)
        for (int x = 0; x < cam.width; ++x) {
            uint64_t pixel = uint64_t(y) * cam.width + x;
            Ray ray = cam.pixel_ray(x, y);
            Hit hit = scene.bvh->intersect(ray);
            if (!hit.valid) continue;
            Vec3 L = shade_pixel(scene, hit, ray, opts, pixel);
            const float* w = weights.at(x, y);
            sum += L.x * w[0] + L.y * w[1] + L.z * w[2];
        }
    return sum;
}

inline double image_sum_weighted(const Image& img, uint64_t seed) {
    Rng rng(seed);
    double sum = 0;
    for (float v : img.data) sum += v * rng.uniform(0.25, 1.0);
    return sum;
}

}  // namespace mavtest
