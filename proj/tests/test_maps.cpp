#include <doctest.h>

#include "mav/detailmaps.hpp"
#include "mav/pca.hpp"
#include "mav/posmap.hpp"
#include "mav/rng.hpp"
#include "helpers.hpp"

using namespace mav;

namespace {

DetailMaps random_detail(int res, int channels, uint64_t seed, double scale = 0.02) {
    DetailMaps maps(res, channels);
    Rng rng(seed);
    for (double& v : maps.offsets_front.data) v = rng.uniform(-scale, scale);
    for (double& v : maps.offsets_back.data) v = rng.uniform(-scale, scale);
    for (double& v : maps.feature.data) v = rng.uniform(-1, 1);
    return maps;
}

}  // namespace

TEST_CASE("canonical square covers the bounds") {
    Box3 b{Vec3{-0.3, -0.8, -0.2}, Vec3{0.5, 0.6, 0.2}};
    CanonicalSquare sq = CanonicalSquare::fit(b);
    CHECK(sq.size >= 1.4);
    CHECK(sq.min_x <= -0.3);
    CHECK(sq.min_x + sq.size >= 0.5);
    CHECK(sq.min_y <= -0.8);
    CHECK(sq.min_y + sq.size >= 0.6);

    Vec2 t = sq.to_texture(sq.min_x, sq.min_y, 64, 64);
    CHECK(t.x == doctest::Approx(-0.5));
    CHECK(t.y == doctest::Approx(-0.5));
}

TEST_CASE("position maps store posed coordinates at the right texels") {
    // One front-facing quad (canonical normal +z), posed by a translation.
    std::vector<Vec3> canonical{{-0.5, -0.5, 0.1}, {0.5, -0.5, 0.1},
                                {0.5, 0.5, 0.1}, {-0.5, 0.5, 0.1}};
    Vec3 shift{2.0, -1.0, 0.5};
    std::vector<Vec3> posed;
    for (const Vec3& c : canonical) posed.push_back(c + shift);
    std::vector<std::array<int, 3>> faces{{0, 1, 2}, {0, 2, 3}};

    Box3 b;
    for (const Vec3& c : canonical) b.expand(c);
    CanonicalSquare sq = CanonicalSquare::fit(b);
    PositionMaps maps = render_position_maps(canonical, posed, faces, sq, 32);

    int hits = 0;
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
            if (maps.front_mask.at(x, y)[0] == 0) continue;
            ++hits;
            const float* p = maps.front.at(x, y);
            // The posed x/y must equal the canonical texel coordinate + shift.
            CHECK(p[2] == doctest::Approx(0.1 + shift.z).epsilon(1e-4));
        }
    CHECK(hits > 400);

    // Back map stays empty: no face has canonical normal pointing to -z.
    for (float m : maps.back_mask.data) CHECK(m == 0.f);
}

TEST_CASE("position maps throw when nothing projects") {
    std::vector<Vec3> canonical{{0, 0, 0}, {0.1, 0, 0}, {0, 0.1, 0}};
    std::vector<std::array<int, 3>> faces{{0, 1, 2}};
    CanonicalSquare far_square;
    far_square.min_x = 100;
    far_square.min_y = 100;
    far_square.size = 1;
    CHECK_THROWS(render_position_maps(canonical, canonical, faces, far_square, 16));
}

TEST_CASE("pca basis is orthonormal and projection is idempotent") {
    Rng rng(9);
    std::vector<Image> maps;
    for (int i = 0; i < 6; ++i) {
        Image m(8, 8, 3);
        for (float& v : m.data) v = float(rng.uniform(-1, 1));
        maps.push_back(m);
    }
    PcaBasis basis = pca_fit(maps, 3);
    REQUIRE(basis.component_count() == 3);

    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double d = 0;
            for (size_t k = 0; k < basis.components[i].size(); ++k)
                d += basis.components[i][k] * basis.components[j][k];
            CHECK(d == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-8));
        }

    Image once = pca_project(maps[0], basis);
    Image twice = pca_project(once, basis);
    for (size_t k = 0; k < once.data.size(); ++k)
        CHECK(std::abs(once.data[k] - twice.data[k]) < 1e-5);
}

TEST_CASE("pca reconstructs maps that lie in the basis span") {
    // Three maps built from two generators: rank 2 around the mean, so a
    // 2-component basis must reconstruct them exactly.
    Image g1(8, 8, 1), g2(8, 8, 1);
    Rng rng(4);
    for (float& v : g1.data) v = float(rng.uniform(-1, 1));
    for (float& v : g2.data) v = float(rng.uniform(-1, 1));
    std::vector<Image> maps;
    for (double a : {0.0, 1.0, -0.5}) {
        Image m(8, 8, 1);
        for (size_t k = 0; k < m.data.size(); ++k)
            m.data[k] = float(a * g1.data[k] + (1.0 - a) * g2.data[k]);
        maps.push_back(m);
    }
    PcaBasis basis = pca_fit(maps, 2);
    for (const Image& m : maps) {
        Image r = pca_project(m, basis);
        for (size_t k = 0; k < m.data.size(); ++k)
            CHECK(std::abs(r.data[k] - m.data[k]) < 1e-4);
    }
}

TEST_CASE("pca rejects degenerate requests and round trips through disk") {
    std::vector<Image> one{Image(4, 4, 1)};
    CHECK_THROWS(pca_fit(one, 1));

    Rng rng(12);
    std::vector<Image> maps;
    for (int i = 0; i < 3; ++i) {
        Image m(4, 4, 1);
        for (float& v : m.data) v = float(rng.uniform(-1, 1));
        maps.push_back(m);
    }
    CHECK_THROWS(pca_fit(maps, 4));

    PcaBasis basis = pca_fit(maps, 2);
    std::string dir = mavtest::temp_dir("pca");
    save_pca(dir + "/b.bin", basis);
    PcaBasis loaded = load_pca(dir + "/b.bin");
    CHECK(loaded.component_count() == 2);
    std::vector<double> ca = pca_coefficients(maps[1], basis);
    std::vector<double> cb = pca_coefficients(maps[1], loaded);
    for (size_t i = 0; i < ca.size(); ++i) CHECK(ca[i] == doctest::Approx(cb[i]));
}

TEST_CASE("offset sampling reproduces texel values at texel centers") {
    CanonicalSquare sq;
    sq.min_x = -1;
    sq.min_y = -1;
    sq.size = 2;
    DetailMaps maps = random_detail(16, 2, 31);

    for (int y : {2, 7, 13})
        for (int x : {1, 8, 14}) {
            // Canonical coordinate whose texture coordinate is exactly (x, y).
            double cx = sq.min_x + (x + 0.5) / 16.0 * sq.size;
            double cy = sq.min_y + (y + 0.5) / 16.0 * sq.size;
            Vec3 front = sample_offsets({cx, cy, 0.3}, maps, sq);
            const double* t = maps.offsets_front.at(x, y);
            CHECK(front.x == doctest::Approx(t[0]).epsilon(1e-12));
            CHECK(front.y == doctest::Approx(t[1]).epsilon(1e-12));
            CHECK(front.z == doctest::Approx(t[2]).epsilon(1e-12));

            Vec3 back = sample_offsets({cx, cy, -0.3}, maps, sq);
            const double* tb = maps.offsets_back.at(x, y);
            CHECK(back.x == doctest::Approx(tb[0]).epsilon(1e-12));
        }
}

TEST_CASE("offset regularizer formula") {
    CHECK(offset_reg({}) == 0.0);
    CHECK(offset_reg({{0, 0, 0}, {0, 0, 0}}) == 0.0);
    std::vector<Vec3> offs(17, Vec3{0.1, 0, 0});
    CHECK(offset_reg(offs) == doctest::Approx(0.01).epsilon(1e-15));

    std::vector<Vec3> grads = offset_reg_backward(offs);
    CHECK(grads.size() == offs.size());
    CHECK(grads[0].x == doctest::Approx(2.0 * 0.1 / 17.0));
}

TEST_CASE("offset texel gradients match finite differences below 1e-4") {
    CanonicalSquare sq;
    sq.min_x = -1;
    sq.min_y = -1;
    sq.size = 2;
    DetailMaps maps = random_detail(8, 0, 77);

    Rng rng(5);
    std::vector<Vec3> pts;
    for (int i = 0; i < 40; ++i)
        pts.push_back({rng.uniform(-0.9, 0.9), rng.uniform(-0.9, 0.9), rng.uniform(-1, 1)});

    auto loss = [&]() {
        std::vector<Vec3> offs;
        for (const Vec3& p : pts) offs.push_back(sample_offsets(p, maps, sq));
        return offset_reg(offs);
    };

    // Analytic chain: offset_reg backward then the sampling adjoint.
    std::vector<Vec3> offs;
    for (const Vec3& p : pts) offs.push_back(sample_offsets(p, maps, sq));
    std::vector<Vec3> og = offset_reg_backward(offs);
    DetailMaps grads(8, 0);
    for (size_t i = 0; i < pts.size(); ++i)
        sample_offsets_backward(pts[i], og[i], grads, sq);

    int checked = 0;
    for (size_t i = 0; i < grads.offsets_front.data.size() && checked < 6; ++i) {
        if (std::abs(grads.offsets_front.data[i]) < 1e-6) continue;
        double h = 1e-6;
        double saved = maps.offsets_front.data[i];
        maps.offsets_front.data[i] = saved + h;
        double fp = loss();
        maps.offsets_front.data[i] = saved - h;
        double fm = loss();
        maps.offsets_front.data[i] = saved;
        double fd = (fp - fm) / (2 * h);
        CHECK(std::abs(grads.offsets_front.data[i] - fd) / std::abs(fd) < 1e-4);
        ++checked;
    }
    CHECK(checked == 6);
}

TEST_CASE("offset spatial gradients match finite differences") {
    CanonicalSquare sq;
    sq.min_x = -1;
    sq.min_y = -1;
    sq.size = 2;
    DetailMaps maps = random_detail(8, 0, 13);
    Vec3 p{0.21, -0.37, 0.5};

    Vec3 ddx, ddy;
    sample_offsets_spatial_grad(p, maps, sq, ddx, ddy);

    double h = 1e-6;
    Vec3 fx = (sample_offsets(p + Vec3{h, 0, 0}, maps, sq) -
               sample_offsets(p - Vec3{h, 0, 0}, maps, sq)) * (0.5 / h);
    Vec3 fy = (sample_offsets(p + Vec3{0, h, 0}, maps, sq) -
               sample_offsets(p - Vec3{0, h, 0}, maps, sq)) * (0.5 / h);
    CHECK(length(ddx - fx) < 1e-6);
    CHECK(length(ddy - fy) < 1e-6);
}

TEST_CASE("feature sampling and its adjoints are consistent") {
    CanonicalSquare sq;
    sq.min_x = -1;
    sq.min_y = -1;
    sq.size = 2;
    DetailMaps maps = random_detail(8, 3, 21);
    Vec3 p{0.4, 0.1, 0.0};

    std::vector<double> f = sample_feature(p, maps.feature, sq);
    REQUIRE(f.size() == 3);

    // Adjoint: grad of sum(w . f) w.r.t. texels, checked by FD.
    std::vector<double> w{0.7, -1.3, 0.4};
    ParamMap grad_map(8, 8, 3);
    sample_feature_backward(p, w, grad_map, sq);
    auto weighted = [&]() {
        std::vector<double> g = sample_feature(p, maps.feature, sq);
        return w[0] * g[0] + w[1] * g[1] + w[2] * g[2];
    };
    int checked = 0;
    for (size_t i = 0; i < grad_map.data.size() && checked < 4; ++i) {
        if (std::abs(grad_map.data[i]) < 1e-9) continue;
        double h = 1e-6;
        double saved = maps.feature.data[i];
        maps.feature.data[i] = saved + h;
        double fp = weighted();
        maps.feature.data[i] = saved - h;
        double fm = weighted();
        maps.feature.data[i] = saved;
        CHECK(grad_map.data[i] == doctest::Approx((fp - fm) / (2 * h)).epsilon(1e-6));
        ++checked;
    }
    CHECK(checked == 4);

    std::vector<double> dx, dy;
    sample_feature_spatial_grad(p, maps.feature, sq, dx, dy);
    double h = 1e-6;
    std::vector<double> fxp = sample_feature(p + Vec3{h, 0, 0}, maps.feature, sq);
    std::vector<double> fxm = sample_feature(p - Vec3{h, 0, 0}, maps.feature, sq);
    for (int c = 0; c < 3; ++c)
        CHECK(dx[c] == doctest::Approx((fxp[c] - fxm[c]) / (2 * h)).epsilon(1e-5));
}

TEST_CASE("offset clamp bounds per-texel norms") {
    DetailMaps maps(4, 0);
    for (double& v : maps.offsets_front.data) v = 1.0;
    maps.clamp_offsets();
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) {
            const double* t = maps.offsets_front.at(x, y);
            double n = std::sqrt(t[0] * t[0] + t[1] * t[1] + t[2] * t[2]);
            CHECK(n <= 0.05 + 1e-12);
        }
}

TEST_CASE("param maps round trip through pfm files") {
    std::string dir = mavtest::temp_dir("pmap");
    Rng rng(3);

    ParamMap m3(6, 5, 3);
    for (double& v : m3.data) v = rng.uniform(-2, 2);
    save_param_map(dir + "/m3.pfm", m3);
    ParamMap l3 = load_param_map(dir + "/m3.pfm");
    REQUIRE(l3.channels == 3);
    for (size_t i = 0; i < m3.data.size(); ++i)
        CHECK(l3.data[i] == doctest::Approx(m3.data[i]).epsilon(1e-6));

    ParamMap m5(4, 4, 5);
    for (double& v : m5.data) v = rng.uniform(-2, 2);
    save_param_map(dir + "/m5.pfm", m5);
    ParamMap l5 = load_param_map(dir + "/m5.pfm", 5);
    REQUIRE(l5.channels == 5);
    for (size_t i = 0; i < m5.data.size(); ++i)
        CHECK(l5.data[i] == doctest::Approx(m5.data[i]).epsilon(1e-6));
}
