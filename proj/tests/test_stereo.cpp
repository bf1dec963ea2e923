#include <doctest.h>

#include "mav/rng.hpp"
#include "mav/stereo.hpp"
#include "helpers.hpp"

using namespace mav;

namespace {

Image noise_image(int w, int h, uint64_t seed) {
    Image img(w, h, 1);
    Rng rng(seed);
    for (float& v : img.data) v = float(rng.uniform(0.0, 1.0));
    return img;
}

Camera plain_intrinsics(int w, int h, double f) {
    Camera cam;
    cam.fx = cam.fy = f;
    cam.cx = w / 2.0;
    cam.cy = h / 2.0;
    cam.width = w;
    cam.height = h;
    return cam;
}

}  // namespace

TEST_CASE("identical textured images match at zero disparity") {
    StereoPair pair;
    pair.left = noise_image(64, 32, 1);
    pair.right = pair.left;
    pair.baseline = 0.05;
    pair.focal = 100;
    DisparityMap d = block_match_disparity(pair, 5, 10);
    int valid = 0;
    for (int y = 4; y < 28; ++y)
        for (int x = 4; x < 50; ++x)
            if (d.valid.at(x, y)[0] > 0) {
                ++valid;
                CHECK(d.disparity.at(x, y)[0] == 0.f);
            }
    CHECK(valid > 500);
}

TEST_CASE("a pure horizontal shift is recovered exactly") {
    Image left = noise_image(64, 32, 2);
    Image right(64, 32, 1);
    const int shift = 5;
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 64; ++x)
            right.at(x, y)[0] = left.at(std::min(63, x + shift), y)[0];
    // right(x) = left(x + 5) means a left pixel x matches right at x - 5.
    StereoPair pair{left, right, 0.05, 100};
    DisparityMap d = block_match_disparity(pair, 5, 10);
    int valid = 0;
    for (int y = 4; y < 28; ++y)
        for (int x = 10; x < 50; ++x)
            if (d.valid.at(x, y)[0] > 0) {
                ++valid;
                CHECK(d.disparity.at(x, y)[0] == doctest::Approx(5.0).epsilon(1e-12));
            }
    CHECK(valid > 400);
}

TEST_CASE("textureless regions are invalidated") {
    StereoPair pair;
    pair.left = Image(64, 32, 1, 0.5f);
    pair.right = Image(64, 32, 1, 0.5f);
    pair.baseline = 0.05;
    pair.focal = 100;
    DisparityMap d = block_match_disparity(pair, 5, 10);
    for (float v : d.valid.data) CHECK(v == 0.f);
}

TEST_CASE("block matcher rejects malformed inputs") {
    StereoPair pair;
    pair.left = noise_image(16, 16, 3);
    pair.right = noise_image(16, 16, 4);
    CHECK_THROWS(block_match_disparity(pair, 4, 5));   // even window
    CHECK_THROWS(block_match_disparity(pair, 17, 5));  // larger than image
    pair.right = noise_image(8, 16, 4);
    CHECK_THROWS(block_match_disparity(pair, 5, 5));   // size mismatch
}

TEST_CASE("disparity to depth formula") {
    DisparityMap d;
    d.disparity = Image(4, 1, 1);
    d.valid = Image(4, 1, 1);
    d.disparity.at(0, 0)[0] = 8.f;   // f*b = 8 -> depth 1
    d.valid.at(0, 0)[0] = 1.f;
    d.disparity.at(1, 0)[0] = 16.f;  // doubled -> halved
    d.valid.at(1, 0)[0] = 1.f;
    d.disparity.at(2, 0)[0] = 4.f;   // invalid stays zero
    Image depth = disparity_to_depth(d, 160, 0.05);
    CHECK(depth.at(0, 0)[0] == doctest::Approx(1.0));
    CHECK(depth.at(1, 0)[0] == doctest::Approx(0.5));
    CHECK(depth.at(2, 0)[0] == 0.f);
    CHECK_THROWS(disparity_to_depth(d, 0, 0.05));
}

TEST_CASE("constant depth gives fronto-parallel normals") {
    Camera cam = plain_intrinsics(32, 32, 60);
    Image depth(32, 32, 1, 2.f);
    Image n = depth_to_normal(depth, cam);
    for (int y = 4; y < 28; ++y)
        for (int x = 4; x < 28; ++x) {
            const float* p = n.at(x, y);
            CHECK(p[0] == doctest::Approx(0.0).epsilon(1e-6));
            CHECK(p[1] == doctest::Approx(0.0).epsilon(1e-6));
            CHECK(p[2] == doctest::Approx(-1.0).epsilon(1e-6));
        }
}

TEST_CASE("a 45 degree plane gives the analytic tilted normal") {
    // Plane y_cam + z_cam = c in camera space (tilted about the image x axis).
    Camera cam = plain_intrinsics(64, 64, 80);
    double c = 3.0;
    Image depth(64, 64, 1);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
            double yf = (y + 0.5 - cam.cy) / cam.fy;
            depth.at(x, y)[0] = float(c / (1.0 + yf));
        }
    Image n = depth_to_normal(depth, cam);
    double s = std::sqrt(0.5);
    for (int y = 8; y < 56; y += 7)
        for (int x = 8; x < 56; x += 7) {
            const float* p = n.at(x, y);
            CHECK(p[0] == doctest::Approx(0.0).epsilon(1e-3));
            CHECK(p[1] == doctest::Approx(-s).epsilon(1e-3));
            CHECK(p[2] == doctest::Approx(-s).epsilon(1e-3));
        }
}

TEST_CASE("sphere depth produces accurate analytic normals") {
    // Depth of a sphere at (0,0,z0) radius r, orthographic-ish pinhole render.
    int size = 256;
    Camera cam = plain_intrinsics(size, size, 600);
    double z0 = 3.0, r = 1.0;
    Image depth(size, size, 1);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            Vec3 d = normalize(Vec3{(x + 0.5 - cam.cx) / cam.fx,
                                    (y + 0.5 - cam.cy) / cam.fy, 1.0});
            double b = d.z * z0;
            double disc = b * b - (z0 * z0 - r * r);
            if (disc <= 0) continue;
            double t = b - std::sqrt(disc);
            depth.at(x, y)[0] = float(t * d.z);
        }
    Image n = depth_to_normal(depth, cam);

    double err_sum = 0;
    int count = 0;
    for (int y = 1; y < size - 1; ++y)
        for (int x = 1; x < size - 1; ++x) {
            const float* p = n.at(x, y);
            if (p[0] == 0 && p[1] == 0 && p[2] == 0) continue;
            double z = depth.at(x, y)[0];
            Vec3 point = cam.unproject(x, y, z);
            Vec3 analytic = normalize(point - Vec3{0, 0, z0});
            if (analytic.z > -0.2) continue;  // skip the grazing silhouette ring
            // Both the estimate and the analytic normal face the camera.
            double cosang = std::clamp(
                analytic.x * p[0] + analytic.y * p[1] + analytic.z * p[2], -1.0, 1.0);
            err_sum += std::acos(cosang) * 180.0 / kPi;
            ++count;
        }
    REQUIRE(count > 10000);
    CHECK(err_sum / count < 3.0);
}

TEST_CASE("stereo normals are unit length on valid pixels") {
    Camera cam = plain_intrinsics(32, 32, 60);
    Image depth(32, 32, 1);
    Rng rng(5);
    for (float& v : depth.data) v = float(2.0 + 0.05 * rng.uniform());
    Image n = depth_to_normal(depth, cam);
    for (int y = 1; y < 31; ++y)
        for (int x = 1; x < 31; ++x) {
            const float* p = n.at(x, y);
            double len = std::sqrt(double(p[0]) * p[0] + p[1] * p[1] + p[2] * p[2]);
            if (len == 0) continue;
            CHECK(len == doctest::Approx(1.0).epsilon(1e-5));
            CHECK(p[2] < 0.f);
        }
}

TEST_CASE("grayscale conversion uses luma weights") {
    Image rgb(1, 1, 3);
    rgb.at(0, 0)[0] = 1.f;
    rgb.at(0, 0)[1] = 0.5f;
    rgb.at(0, 0)[2] = 0.25f;
    Image g = to_grayscale(rgb);
    CHECK(g.at(0, 0)[0] ==
          doctest::Approx(0.2126 + 0.7152 * 0.5 + 0.0722 * 0.25).epsilon(1e-6));
}
