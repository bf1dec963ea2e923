#include <doctest.h>

#include <cstdlib>

#include "mav/adam.hpp"
#include "mav/jet.hpp"
#include "mav/parallel.hpp"
#include "mav/rng.hpp"
#include "mav/tonemap.hpp"
#include "mav/vecmath.hpp"
#include "helpers.hpp"

using namespace mav;

TEST_CASE("rodrigues matches a plain z-axis rotation") {
    double theta = 0.7;
    Mat3 R = rodrigues({0, 0, theta});
    CHECK(R(0, 0) == doctest::Approx(std::cos(theta)));
    CHECK(R(0, 1) == doctest::Approx(-std::sin(theta)));
    CHECK(R(1, 0) == doctest::Approx(std::sin(theta)));
    CHECK(R(2, 2) == doctest::Approx(1.0));
    CHECK(R.det() == doctest::Approx(1.0));

    Mat3 RtR = R.transposed() * R;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(RtR(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));
}

TEST_CASE("rodrigues is smooth through zero") {
    Mat3 R = rodrigues({1e-10, 0, 0});
    CHECK(R(1, 2) == doctest::Approx(-1e-10));
    CHECK(R(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("Mat3 inverse and rigid transform algebra") {
    Mat3 M = rodrigues({0.3, -0.2, 0.9}) + Mat3::outer({0.1, 0, 0}, {0, 0.2, 0});
    Mat3 MI = M * M.inverse();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(MI(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-10));

    RigidTransform a{rodrigues({0.1, 0.5, -0.2}), {1, 2, 3}};
    RigidTransform b{rodrigues({-0.4, 0.2, 0.8}), {-0.5, 0.1, 0.7}};
    Vec3 p{0.3, -0.9, 0.5};
    Vec3 via_compose = a.compose(b).apply(p);
    Vec3 via_chain = a.apply(b.apply(p));
    CHECK(length(via_compose - via_chain) < 1e-12);
    Vec3 round = a.inverse().apply(a.apply(p));
    CHECK(length(round - p) < 1e-12);
}

TEST_CASE("Box3 expand, contains, dilated") {
    Box3 b;
    b.expand({0, 0, 0});
    b.expand({1, 2, 3});
    CHECK(b.valid());
    CHECK(b.contains({0.5, 1, 1.5}));
    CHECK(!b.contains({-0.1, 0, 0}));
    CHECK(b.dilated(0.5).contains({-0.4, 0, 0}));
    CHECK(b.center().y == doctest::Approx(1.0));
    CHECK(b.diagonal() == doctest::Approx(std::sqrt(14.0)));
}

static double pow5(double x) {
    double x2 = x * x;
    return x2 * x2 * x;
}

TEST_CASE("jet derivatives match finite differences") {
    auto f = [](auto x) {
        return sqrt(x * x + 1.0) / (2.0 - x) + pow5(x) * 0.1;
    };
    double x0 = 0.62;
    Jet<1> jx = Jet<1>::var(x0, 0);
    Jet<1> jy = f(jx);
    double h = 1e-6;
    double fd = (f(x0 + h) - f(x0 - h)) / (2 * h);
    CHECK(jy.a == doctest::Approx(f(x0)));
    CHECK(jy.v[0] == doctest::Approx(fd).epsilon(1e-6));
}

TEST_CASE("jet clamp_min kills gradients below the floor") {
    Jet<1> j = clamp_min(Jet<1>::var(-0.5, 0), 0.0);
    CHECK(j.a == 0.0);
    CHECK(j.v[0] == 0.0);
    Jet<1> k = clamp_min(Jet<1>::var(0.5, 0), 0.0);
    CHECK(k.v[0] == 1.0);
}

TEST_CASE("keyed rng streams are deterministic and decorrelated") {
    Rng a = Rng::keyed(1, 2, 3, 4);
    Rng b = Rng::keyed(1, 2, 3, 4);
    Rng c = Rng::keyed(1, 2, 3, 5);
    bool all_equal = true, any_equal_c = false;
    for (int i = 0; i < 32; ++i) {
        double va = a.uniform();
        all_equal &= va == b.uniform();
        any_equal_c |= va == c.uniform();
    }
    CHECK(all_equal);
    CHECK(!any_equal_c);
}

TEST_CASE("rng uniform moments") {
    Rng rng(99);
    double sum = 0, sum2 = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        sum += u;
        sum2 += u * u;
    }
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
    CHECK(sum2 / n == doctest::Approx(1.0 / 3.0).epsilon(0.01));
}

TEST_CASE("rng gaussian moments and ball containment") {
    Rng rng(7);
    double sum = 0, sum2 = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        double g = rng.gaussian();
        sum += g;
        sum2 += g * g;
    }
    CHECK(sum / n == doctest::Approx(0.0).epsilon(0.02));
    CHECK(sum2 / n == doctest::Approx(1.0).epsilon(0.03));
    for (int i = 0; i < 1000; ++i) CHECK(length(rng.in_unit_ball()) <= 1.0);
}

TEST_CASE("adam first step magnitude equals the learning rate") {
    // Bias-corrected Adam moves by lr * g/|g| (up to eps) on the first step.
    Adam opt(2, 0.01);
    std::vector<double> p{1.0, -2.0};
    opt.step(p, {0.3, -40.0});
    CHECK(p[0] == doctest::Approx(1.0 - 0.01).epsilon(1e-4));
    CHECK(p[1] == doctest::Approx(-2.0 + 0.01).epsilon(1e-4));
}

TEST_CASE("adam minimizes a quadratic") {
    Adam opt(1, 0.05);
    std::vector<double> p{3.0};
    for (int i = 0; i < 500; ++i) opt.step(p, {2.0 * (p[0] - 1.25)});
    CHECK(p[0] == doctest::Approx(1.25).epsilon(1e-3));
}

TEST_CASE("adam state round trips through disk") {
    std::string dir = mavtest::temp_dir("adam");
    Adam opt(3, 0.02);
    std::vector<double> p{1, 2, 3};
    opt.step(p, {0.1, -0.2, 0.3});
    opt.step(p, {0.05, 0.4, -0.1});
    opt.save(dir + "/a.bin");
    Adam loaded = Adam::load(dir + "/a.bin");
    CHECK(loaded.step_count() == opt.step_count());
    CHECK(loaded.learning_rate() == opt.learning_rate());

    std::vector<double> pa = p, pb = p;
    opt.step(pa, {0.3, 0.3, 0.3});
    loaded.step(pb, {0.3, 0.3, 0.3});
    for (int i = 0; i < 3; ++i) CHECK(pa[i] == pb[i]);
}

TEST_CASE("parallel_chunks covers the range exactly once in order") {
    std::vector<int> hits(1000, 0);
    parallel_chunks(0, 1000, [&](int64_t lo, int64_t hi, int) {
        for (int64_t i = lo; i < hi; ++i) hits[size_t(i)]++;
    });
    for (int h : hits) CHECK(h == 1);
    CHECK(parallel_chunk_count(0, 1000) >= 1);
    CHECK(parallel_chunk_count(5, 5) == 0);
}

TEST_CASE("thread cap env var limits workers") {
    setenv("MESHAVATAR_THREADS", "1", 1);
    CHECK(worker_count() == 1);
    unsetenv("MESHAVATAR_THREADS");
    CHECK(worker_count() >= 1);
}

TEST_CASE("tonemap round trip and anchor values") {
    for (double v : {0.0, 0.001, 0.01, 0.2, 0.5, 1.0})
        CHECK(tonemap_inv(tonemap(v)) == doctest::Approx(v).epsilon(1e-10));
    CHECK(tonemap(1.0) == doctest::Approx(1.0));
    CHECK(tonemap(0.0) == 0.0);
    // Linear 0.5 is ~0.735 in this transfer curve.
    CHECK(tonemap(0.5) == doctest::Approx(0.7353569).epsilon(1e-5));
}
