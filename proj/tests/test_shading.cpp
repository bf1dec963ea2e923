#include <doctest.h>

#include "mav/brdf.hpp"
#include "mav/bvh.hpp"
#include "mav/camera.hpp"
#include "mav/envmap.hpp"
#include "mav/material.hpp"
#include "mav/rng.hpp"
#include "helpers.hpp"

using namespace mav;

namespace {

MaterialGrid random_material(int res, int channels, uint64_t seed) {
    MaterialGrid grid(res, Box3{Vec3(-1), Vec3(1)}, channels);
    Rng rng(seed);
    for (double& v : grid.values()) v = rng.uniform(-1.5, 1.5);
    for (double& v : grid.blend_weights()) v = rng.uniform(-0.5, 0.5);
    return grid;
}

// (phi, cos theta) quadrature of f(wi) * cos over the n = +z hemisphere.
template <typename F>
double hemisphere_quadrature(F&& integrand, int n_phi, int n_cos) {
    double sum = 0;
    for (int i = 0; i < n_phi; ++i) {
        double phi = 2 * kPi * (i + 0.5) / n_phi;
        for (int j = 0; j < n_cos; ++j) {
            double ct = (j + 0.5) / n_cos;
            double st = std::sqrt(1 - ct * ct);
            Vec3 wi{st * std::cos(phi), st * std::sin(phi), ct};
            sum += integrand(wi) * ct;
        }
    }
    return sum * (2 * kPi / n_phi) * (1.0 / n_cos);
}

}  // namespace

TEST_CASE("material decode stays in range and ignores features with zero blend") {
    MaterialGrid grid = random_material(6, 4, 1);
    for (double& v : grid.blend_weights()) v = 0.0;
    Rng rng(2);
    for (int i = 0; i < 100; ++i) {
        Vec3 p = rng.in_box(Box3{Vec3(-0.95), Vec3(0.95)});
        std::vector<double> f0(4, 0.0), f1{1.0, -2.0, 0.5, 3.0};
        MaterialSample a = grid.query(p, f0);
        MaterialSample b = grid.query(p, f1);
        for (int c = 0; c < 3; ++c) {
            CHECK(a.kd[c] > 0.0);
            CHECK(a.kd[c] < 1.0);
            CHECK(a.kd[c] == b.kd[c]);
        }
        CHECK(a.ks >= 0.03);
        CHECK(a.ks <= 1.0);
        CHECK(a.ks == b.ks);
    }
}

TEST_CASE("material queries match finite differences") {
    MaterialGrid grid = random_material(4, 2, 7);
    Vec3 p{0.31, -0.12, 0.44};
    std::vector<double> feature{0.6, -0.9};
    Vec3 kd_w{0.5, -1.2, 0.8};
    double ks_w = 0.9;

    auto loss = [&]() {
        MaterialSample m = grid.query(p, feature);
        return dot(kd_w, m.kd) + ks_w * m.ks;
    };

    std::vector<double> val_grads(grid.values().size(), 0.0);
    std::vector<double> blend_grads(grid.blend_weights().size(), 0.0);
    std::vector<double> feat_grads(2, 0.0);
    MaterialGrid::Grads grads{&val_grads, &blend_grads};
    Vec3 point_grad = grid.query_backward(p, feature, kd_w, ks_w, grads, &feat_grads);

    double h = 1e-4;
    auto fd = [&](double* slot) {
        double saved = *slot;
        *slot = saved + h;
        double fp = loss();
        *slot = saved - h;
        double fm = loss();
        *slot = saved;
        return (fp - fm) / (2 * h);
    };

    int checked = 0;
    for (size_t i = 0; i < grid.values().size() && checked < 6; ++i) {
        if (std::abs(val_grads[i]) < 1e-8) continue;
        CHECK(val_grads[i] == doctest::Approx(fd(&grid.values()[i])).epsilon(1e-4));
        ++checked;
    }
    CHECK(checked == 6);

    for (size_t i = 0; i < grid.blend_weights().size(); ++i)
        if (std::abs(blend_grads[i]) > 1e-8)
            CHECK(blend_grads[i] ==
                  doctest::Approx(fd(&grid.blend_weights()[i])).epsilon(1e-4));
    for (int i = 0; i < 2; ++i)
        CHECK(feat_grads[i] == doctest::Approx(fd(&feature[i])).epsilon(1e-4));

    // Spatial gradient via point displacement.
    for (int axis = 0; axis < 3; ++axis) {
        Vec3 e{};
        e[axis] = h;
        Vec3 saved = p;
        p = saved + e;
        double fp = loss();
        p = saved - e;
        double fm = loss();
        p = saved;
        CHECK(point_grad[axis] == doctest::Approx((fp - fm) / (2 * h)).epsilon(1e-4));
    }
}

TEST_CASE("material smoothness loss and gradients") {
    MaterialGrid grid = random_material(4, 0, 9);
    Rng rng(8);
    std::vector<Vec3> pts, eps;
    std::vector<std::vector<double>> feats;
    for (int i = 0; i < 20; ++i) {
        pts.push_back(rng.in_box(Box3{Vec3(-0.7), Vec3(0.7)}));
        eps.push_back(rng.in_unit_ball() * 0.1);
        feats.emplace_back();
    }
    double base = material_smoothness_loss(grid, pts, eps, feats);
    CHECK(base > 0.0);

    std::vector<double> val_grads(grid.values().size(), 0.0);
    MaterialGrid::Grads grads{&val_grads, nullptr};
    material_smoothness_backward(grid, pts, eps, feats, 1.0, grads);

    int checked = 0;
    for (size_t i = 0; i < grid.values().size() && checked < 5; ++i) {
        if (std::abs(val_grads[i]) < 1e-6) continue;
        double h = 1e-6;
        double saved = grid.values()[i];
        grid.values()[i] = saved + h;
        double fp = material_smoothness_loss(grid, pts, eps, feats);
        grid.values()[i] = saved - h;
        double fm = material_smoothness_loss(grid, pts, eps, feats);
        grid.values()[i] = saved;
        CHECK(val_grads[i] == doctest::Approx((fp - fm) / (2 * h)).epsilon(1e-3));
        ++checked;
    }
    CHECK(checked == 5);
}

TEST_CASE("material grid round trips through disk") {
    MaterialGrid grid = random_material(4, 3, 5);
    std::string dir = mavtest::temp_dir("mat");
    grid.save(dir + "/m.bin");
    MaterialGrid loaded = MaterialGrid::load(dir + "/m.bin");
    CHECK(loaded.resolution() == 4);
    CHECK(loaded.feature_channels() == 3);
    std::vector<double> f{0.3, -0.2, 0.9};
    MaterialSample a = grid.query({0.2, 0.1, -0.4}, f);
    MaterialSample b = loaded.query({0.2, 0.1, -0.4}, f);
    CHECK(a.kd.x == doctest::Approx(b.kd.x).epsilon(1e-6));
    CHECK(a.ks == doctest::Approx(b.ks).epsilon(1e-6));
}

TEST_CASE("env eval at texel centers returns the texel radiance") {
    EnvMap env(16, 8);
    Rng rng(4);
    for (double& v : env.radiance) v = rng.uniform(0.1, 2.0);
    for (int y : {1, 4, 6})
        for (int x : {0, 7, 15}) {
            double theta = kPi * (y + 0.5) / 8;
            double phi = 2 * kPi * (x + 0.5) / 16;
            Vec3 dir{std::sin(theta) * std::cos(phi), std::cos(theta),
                     std::sin(theta) * std::sin(phi)};
            Vec3 L = env.eval(dir);
            const double* t = env.at(x, y);
            CHECK(L.x == doctest::Approx(t[0]).epsilon(1e-9));
            CHECK(L.y == doctest::Approx(t[1]).epsilon(1e-9));
            CHECK(L.z == doctest::Approx(t[2]).epsilon(1e-9));
        }
}

TEST_CASE("constant env sampling has pdf exactly 1/4pi") {
    EnvMap env(12, 6, Vec3(1.0));
    EnvCdf cdf = build_env_cdf(env);
    Rng rng(6);
    for (int i = 0; i < 500; ++i) {
        double pdf;
        Vec3 dir = env_sample(cdf, rng.uniform(), rng.uniform(), &pdf);
        CHECK(length(dir) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(pdf == doctest::Approx(1.0 / (4 * kPi)).epsilon(1e-12));
        CHECK(env_pdf(cdf, dir) == doctest::Approx(pdf).epsilon(1e-9));
    }
}

TEST_CASE("env pdf integrates to one") {
    EnvMap env = make_gradient_env(16, 8);
    EnvCdf cdf = build_env_cdf(env);
    double integral = 0;
    int n_phi = 128, n_cos = 128;
    for (int i = 0; i < n_phi; ++i) {
        double phi = 2 * kPi * (i + 0.5) / n_phi;
        for (int j = 0; j < n_cos; ++j) {
            double ct = -1.0 + 2.0 * (j + 0.5) / n_cos;
            double st = std::sqrt(std::max(0.0, 1 - ct * ct));
            Vec3 dir{st * std::cos(phi), ct, st * std::sin(phi)};
            integral += env_pdf(cdf, dir);
        }
    }
    integral *= (2 * kPi / n_phi) * (2.0 / n_cos);
    CHECK(integral == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("env sampling follows the luminance-times-solid-angle distribution") {
    EnvMap env = make_gradient_env(8, 4);
    EnvCdf cdf = build_env_cdf(env);

    // Chi-square over texel counts against expected probabilities.
    const int n = 200000;
    std::vector<int> counts(size_t(env.width) * env.height, 0);
    Rng rng(10);
    for (int i = 0; i < n; ++i) {
        double pdf;
        Vec3 dir = env_sample(cdf, rng.uniform(), rng.uniform(), &pdf);
        double theta = std::acos(std::clamp(dir.y, -1.0, 1.0));
        double phi = std::atan2(dir.z, dir.x);
        if (phi < 0) phi += 2 * kPi;
        int x = std::min(env.width - 1, int(phi / (2 * kPi) * env.width));
        int y = std::min(env.height - 1, int(theta / kPi * env.height));
        counts[size_t(y) * env.width + x]++;
    }
    double chi2 = 0;
    for (int y = 0; y < env.height; ++y)
        for (int x = 0; x < env.width; ++x) {
            double expected = cdf.lum[size_t(y) * env.width + x] * cdf.row_omega[y] /
                              cdf.total_weight * n;
            REQUIRE(expected > 5);
            double d = counts[size_t(y) * env.width + x] - expected;
            chi2 += d * d / expected;
        }
    // 31 degrees of freedom; 99.9th percentile is ~61.1.
    CHECK(chi2 < 62.0);
}

TEST_CASE("env eval_backward matches finite differences") {
    EnvMap env = make_gradient_env(8, 4);
    Vec3 dir = normalize(Vec3{0.3, 0.8, -0.5});
    Vec3 upstream{1.0, -0.5, 2.0};
    std::vector<double> grads(env.radiance.size(), 0.0);
    env.eval_backward(dir, upstream, grads);

    int checked = 0;
    for (size_t i = 0; i < env.radiance.size() && checked < 5; ++i) {
        if (grads[i] == 0.0) continue;
        double h = 1e-5;
        double saved = env.radiance[i];
        env.radiance[i] = saved + h;
        double fp = dot(upstream, env.eval(dir));
        env.radiance[i] = saved - h;
        double fm = dot(upstream, env.eval(dir));
        env.radiance[i] = saved;
        CHECK(grads[i] == doctest::Approx((fp - fm) / (2 * h)).epsilon(1e-6));
        ++checked;
    }
    CHECK(checked >= 3);
}

TEST_CASE("light whiteness loss on a pure red map is exactly 4/9") {
    EnvMap env(6, 3);
    for (int i = 0; i < env.width * env.height; ++i) {
        env.radiance[size_t(i) * 3] = 1.0;
        env.radiance[size_t(i) * 3 + 1] = 0.0;
        env.radiance[size_t(i) * 3 + 2] = 0.0;
    }
    CHECK(light_whiteness_loss(env) == doctest::Approx(4.0 / 9.0).epsilon(1e-15));

    EnvMap white(6, 3, Vec3(0.7));
    CHECK(light_whiteness_loss(white) < 1e-12);

    // Gradient vs finite differences on a generic map.
    EnvMap g = make_gradient_env(4, 2);
    std::vector<double> grads(g.radiance.size(), 0.0);
    light_whiteness_backward(g, 1.0, grads);
    for (size_t i : {size_t(0), size_t(7), size_t(13)}) {
        double h = 1e-6;
        double saved = g.radiance[i];
        g.radiance[i] = saved + h;
        double fp = light_whiteness_loss(g);
        g.radiance[i] = saved - h;
        double fm = light_whiteness_loss(g);
        g.radiance[i] = saved;
        CHECK(grads[i] == doctest::Approx((fp - fm) / (2 * h)).epsilon(1e-5));
    }
}

TEST_CASE("env map round trips through pfm") {
    EnvMap env = make_gradient_env(8, 4);
    std::string dir = mavtest::temp_dir("env");
    save_envmap(dir + "/e.pfm", env);
    EnvMap loaded = load_envmap(dir + "/e.pfm");
    REQUIRE(loaded.width == 8);
    REQUIRE(loaded.height == 4);
    for (size_t i = 0; i < env.radiance.size(); ++i)
        CHECK(loaded.radiance[i] == doctest::Approx(env.radiance[i]).epsilon(1e-6));
}

TEST_CASE("brdf white furnace bound holds across roughness") {
    Vec3 n{0, 0, 1};
    for (double ks : {0.03, 0.2, 0.5, 0.8, 1.0}) {
        MaterialSample mat{Vec3(1.0), ks};
        Vec3 wo = normalize(Vec3{0.3, 0.1, 0.9});
        double albedo = hemisphere_quadrature(
            [&](const Vec3& wi) {
                Vec3 f = brdf_eval(mat, wi, wo, n);
                return (f.x + f.y + f.z) / 3.0;
            },
            400, 250);
        CHECK(albedo <= 1.0 + 1e-2);
        CHECK(albedo > 0.5);
    }
}

TEST_CASE("max roughness is diffuse dominant") {
    Vec3 n{0, 0, 1};
    MaterialSample mat{Vec3(0.6), 1.0};
    Vec3 wo = normalize(Vec3{0.2, -0.1, 1.0});
    Vec3 wi = normalize(Vec3{-0.3, 0.2, 0.8});
    Vec3 f = brdf_eval(mat, wi, wo, n);
    double expect = 0.6 / kPi;
    CHECK(f.x == doctest::Approx(expect).epsilon(0.15));
}

TEST_CASE("brdf is zero outside the hemisphere") {
    MaterialSample mat{Vec3(0.5), 0.3};
    Vec3 n{0, 0, 1};
    Vec3 below = normalize(Vec3{0.1, 0.2, -0.9});
    Vec3 above = normalize(Vec3{0.1, 0.2, 0.9});
    CHECK(length(brdf_eval(mat, below, above, n)) == 0.0);
    CHECK(length(brdf_eval(mat, above, below, n)) == 0.0);
}

TEST_CASE("brdf sampling integrates the reflectance correctly") {
    // MC estimate of the hemispherical-directional albedo with the sampler's
    // own pdf vs the quadrature oracle.
    Vec3 n{0, 0, 1};
    MaterialSample mat{{0.7, 0.4, 0.2}, 0.35};
    Vec3 wo = normalize(Vec3{0.4, 0.2, 0.8});

    double oracle = hemisphere_quadrature(
        [&](const Vec3& wi) { return brdf_eval(mat, wi, wo, n).x; }, 300, 200);

    Rng rng(42);
    double mc = 0;
    const int N = 200000;
    for (int i = 0; i < N; ++i) {
        double pdf;
        Vec3 wi = brdf_sample(mat, wo, n, rng.uniform(), rng.uniform(), rng.uniform(),
                              &pdf);
        CHECK(pdf > 0.0);
        double c = dot(wi, n);
        if (c <= 0) continue;
        mc += brdf_eval(mat, wi, wo, n).x * c / pdf;
    }
    mc /= N;
    CHECK(mc == doctest::Approx(oracle).epsilon(0.02));
}

TEST_CASE("brdf pdf integrates to at most one over the hemisphere") {
    Vec3 n{0, 0, 1};
    MaterialSample mat{{0.5, 0.5, 0.5}, 0.4};
    Vec3 wo = normalize(Vec3{0.2, -0.3, 0.9});
    double integral = hemisphere_quadrature(
        [&](const Vec3& wi) { return brdf_pdf(mat, wi, wo, n) / std::max(dot(wi, n), 1e-9); },
        300, 200);
    CHECK(integral == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("brdf sampling rejects a degenerate normal") {
    MaterialSample mat{Vec3(0.5), 0.3};
    CHECK_THROWS_AS(brdf_sample(mat, {0, 0, 1}, {0, 0, 2}, 0.5, 0.5, 0.5, nullptr),
                    std::invalid_argument);
}

TEST_CASE("bvh agrees with brute-force intersection") {
    Rng rng(33);
    TriMesh soup;
    for (int i = 0; i < 120; ++i) {
        Vec3 c = rng.in_box(Box3{Vec3(-1), Vec3(1)});
        int base = int(soup.vertices.size());
        soup.vertices.push_back(c + rng.in_unit_ball() * 0.3);
        soup.vertices.push_back(c + rng.in_unit_ball() * 0.3);
        soup.vertices.push_back(c + rng.in_unit_ball() * 0.3);
        soup.faces.push_back({base, base + 1, base + 2});
    }
    Bvh bvh(soup);

    for (int i = 0; i < 500; ++i) {
        Ray ray{rng.in_box(Box3{Vec3(-2), Vec3(2)}), normalize(rng.in_unit_ball())};
        Hit hit = bvh.intersect(ray);

        Hit brute;
        for (size_t f = 0; f < soup.faces.size(); ++f) {
            double t, u, v;
            const auto& tri = soup.faces[f];
            if (ray_triangle(ray, soup.vertices[tri[0]], soup.vertices[tri[1]],
                             soup.vertices[tri[2]], t, u, v) &&
                t < brute.t) {
                brute.valid = true;
                brute.face = int(f);
                brute.t = t;
            }
        }
        CHECK(hit.valid == brute.valid);
        if (hit.valid) {
            CHECK(hit.t == doctest::Approx(brute.t).epsilon(1e-9));
            CHECK(bvh.occluded(ray, 1e-9));
            CHECK(!bvh.occluded(ray, 1e-9, hit.t * 0.999));
        }
    }
}

TEST_CASE("ray_triangle basics") {
    Ray ray{{0.2, 0.3, -1}, {0, 0, 1}};
    double t, u, v;
    REQUIRE(ray_triangle(ray, {0, 0, 0}, {1, 0, 0}, {0, 1, 0}, t, u, v));
    CHECK(t == doctest::Approx(1.0));
    CHECK(u == doctest::Approx(0.2));
    CHECK(v == doctest::Approx(0.3));
    // Parallel ray misses.
    Ray par{{0, 0, -1}, {1, 0, 0}};
    CHECK(!ray_triangle(par, {0, 0, 0}, {1, 0, 0}, {0, 1, 0}, t, u, v));
}

TEST_CASE("camera projection round trips") {
    Camera cam = look_at_camera({1, 2, -3}, {0, 0, 0}, {0, 1, 0}, 50 * kPi / 180, 64, 48);
    cam.validate();
    CHECK(cam.fy == doctest::Approx(24.0 / std::tan(25 * kPi / 180)));

    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
        double px = rng.uniform(0, 63), py = rng.uniform(0, 47);
        Ray ray = cam.pixel_ray(px, py);
        CHECK(length(ray.dir) == doctest::Approx(1.0).epsilon(1e-12));
        Vec3 world = ray.origin + ray.dir * rng.uniform(0.5, 5.0);
        Vec3 cam_pt = cam.to_camera_point(world);
        Vec2 back = cam.project(cam_pt);
        CHECK(back.x == doctest::Approx(px).epsilon(1e-9));
        CHECK(back.y == doctest::Approx(py).epsilon(1e-9));
    }

    // The optical axis looks at the target.
    Ray center = cam.pixel_ray(32.0, 24.0);
    Vec3 to_target = normalize(Vec3{0, 0, 0} - Vec3{1, 2, -3});
    CHECK(length(center.dir - to_target) < 1e-9);
}

TEST_CASE("camera round trips through disk") {
    Camera cam = look_at_camera({0.4, 1.2, -2}, {0, 0.5, 0}, {0, 1, 0}, 40 * kPi / 180,
                                128, 96);
    std::string dir = mavtest::temp_dir("cam");
    save_camera(dir + "/c.txt", cam);
    Camera loaded = load_camera(dir + "/c.txt");
    CHECK(loaded.fx == doctest::Approx(cam.fx).epsilon(1e-12));
    CHECK(loaded.width == cam.width);
    for (int i = 0; i < 9; ++i)
        CHECK(loaded.world_from_camera.R.m[i] ==
              doctest::Approx(cam.world_from_camera.R.m[i]).epsilon(1e-12));
}
