#include <doctest.h>

#include <fstream>

#include "mav/checkpoint.hpp"
#include "mav/config.hpp"
#include "mav/dataset.hpp"
#include "mav/rng.hpp"
#include "mav/trainer.hpp"
#include "helpers.hpp"

using namespace mav;

TEST_CASE("pfm round trips exactly") {
    std::string dir = mavtest::temp_dir("pfm");
    Rng rng(1);
    for (int channels : {1, 3}) {
        Image img(7, 5, channels);
        for (float& v : img.data) v = float(rng.uniform(-10, 10));
        write_pfm(dir + "/img.pfm", img);
        Image back = read_pfm(dir + "/img.pfm");
        CHECK(back.width == 7);
        CHECK(back.height == 5);
        CHECK(back.channels == channels);
        CHECK(back.data == img.data);
    }
}

TEST_CASE("png round trips within quantization") {
    std::string dir = mavtest::temp_dir("png");
    Rng rng(2);
    Image img(9, 6, 3);
    for (float& v : img.data) v = float(rng.uniform(0, 1));
    write_png(dir + "/img.png", img);
    Image back = read_image(dir + "/img.png");
    REQUIRE(back.channels == 3);
    for (size_t i = 0; i < img.data.size(); ++i)
        CHECK(std::abs(back.data[i] - img.data[i]) <= 0.5f / 255.f + 1e-6f);

    Image mask(4, 4, 1);
    mask.at(1, 2)[0] = 1.f;
    write_png(dir + "/mask.png", mask);
    Image mback = read_png(dir + "/mask.png");
    CHECK(mback.at(1, 2)[0] == doctest::Approx(1.0));
    CHECK(mback.at(0, 0)[0] == doctest::Approx(0.0));
}

TEST_CASE("ply round trips meshes with skinning weights") {
    std::string dir = mavtest::temp_dir("ply");
    TriMesh mesh;
    mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    mesh.faces = {{0, 1, 2}, {0, 2, 3}};
    std::vector<double> weights{1, 0, 0.5, 0.5, 0.25, 0.75, 0, 1};
    write_ply(dir + "/m.ply", mesh, &weights, 2);

    std::vector<double> wback;
    int joints = 0;
    TriMesh back = read_ply(dir + "/m.ply", &wback, &joints);
    CHECK(joints == 2);
    REQUIRE(back.vertices.size() == 4);
    CHECK(back.faces == mesh.faces);
    for (size_t i = 0; i < weights.size(); ++i)
        CHECK(wback[i] == doctest::Approx(weights[i]).epsilon(1e-6));
}

TEST_CASE("obj export writes the expected structure") {
    std::string dir = mavtest::temp_dir("obj");
    TriMesh mesh;
    mesh.vertices = {{0.5, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    mesh.faces = {{0, 1, 2}};
    write_obj(dir + "/m.obj", mesh);
    std::ifstream in(dir + "/m.obj");
    std::string line;
    int v = 0, f = 0;
    while (std::getline(in, line)) {
        if (line.rfind("v ", 0) == 0) ++v;
        if (line.rfind("f ", 0) == 0) ++f;
    }
    CHECK(v == 3);
    CHECK(f == 1);
}

TEST_CASE("skeleton, template and pose files round trip") {
    std::string dir = mavtest::temp_dir("skel");
    CapsuleBody body = make_capsule_body(16);
    write_skeleton(dir + "/s.txt", body.skeleton);
    Skeleton sk = read_skeleton(dir + "/s.txt");
    REQUIRE(sk.joint_count() == body.skeleton.joint_count());
    for (int j = 0; j < sk.joint_count(); ++j) {
        CHECK(sk.joints[j].name == body.skeleton.joints[j].name);
        CHECK(sk.joints[j].parent == body.skeleton.joints[j].parent);
        CHECK(length(sk.joints[j].rest_local.t - body.skeleton.joints[j].rest_local.t) <
              1e-9);
    }

    write_template(dir + "/t.ply", body.surface);
    TemplateSurface surf = read_template(dir + "/t.ply");
    CHECK(surf.joint_count == body.surface.joint_count);
    CHECK(surf.mesh.vertices.size() == body.surface.mesh.vertices.size());

    Pose pose = Pose::rest(sk.joint_count());
    pose.axis_angle[2] = {0.1, -0.2, 0.3};
    pose.root_translation = {0.5, 0, -0.25};
    write_pose(dir + "/p.json", pose);
    Pose pback = read_pose(dir + "/p.json");
    CHECK(length(pback.axis_angle[2] - pose.axis_angle[2]) < 1e-12);
    CHECK(length(pback.root_translation - pose.root_translation) < 1e-12);
}

TEST_CASE("config round trips and rejects unknown keys") {
    Config c;
    c.grid_resolution = 48;
    c.weights.light = 0.125;
    c.dataset = "some/manifest.json";
    Config back = parse_config(config_to_json(c));
    CHECK(back.grid_resolution == 48);
    CHECK(back.weights.light == 0.125);
    CHECK(back.dataset == "some/manifest.json");

    CHECK_THROWS_AS(parse_config("{\"grid_resolutoin\": 32}"), ConfigError);
    CHECK_THROWS_AS(parse_config("{\"loss_weights\": {\"lambda_bogus\": 1}}"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config("not json"), ConfigError);
    CHECK_THROWS_AS(parse_config("{\"grid_resolution\": -4}"), ConfigError);
}

TEST_CASE("manifest loading validates referenced files") {
    std::string dir = mavtest::temp_dir("manifest");
    std::ofstream(dir + "/manifest.json")
        << R"({"skeleton": "missing.txt", "template": "missing.ply", "frames": []})";
    CHECK_THROWS_AS(load_manifest(dir + "/manifest.json"), ConfigError);
}

TEST_CASE("checkpoints round trip the full optimization state") {
    CapsuleBody body = make_capsule_body(16);

    Dataset dataset;
    dataset.skeleton = body.skeleton;
    dataset.surface = body.surface;
    Frame frame;
    frame.pose = Pose::rest(body.skeleton.joint_count());
    View view;
    view.camera = look_at_camera({0, 0, -2}, {0, 0, 0}, {0, 1, 0}, kPi / 4, 8, 8);
    view.image = Image(8, 8, 3, 0.5f);
    view.mask = Image(8, 8, 1, 1.f);
    frame.views.push_back(view);
    dataset.frames.push_back(frame);

    Config config;
    config.grid_resolution = 12;
    config.weight_resolution = 8;
    config.detail_resolution = 8;
    config.material_resolution = 4;
    config.feature_channels = 2;
    config.env_width = 8;
    config.env_height = 4;

    Checkpoint ckpt = init_checkpoint(config, dataset);
    ckpt.step = 7;
    Rng rng(4);
    for (double& v : ckpt.detail[0].offsets_front.data) v = rng.uniform(-0.01, 0.01);
    for (double& v : ckpt.env.radiance) v = rng.uniform(0.1, 1.0);

    std::string dir = mavtest::temp_dir("ckpt");
    save_checkpoint(dir, ckpt);
    Checkpoint back = load_checkpoint(dir);

    CHECK(back.step == 7);
    CHECK(back.config.grid_resolution == 12);
    CHECK(back.config.feature_channels == 2);
    CHECK(back.skeleton.joint_count() == ckpt.skeleton.joint_count());
    CHECK(back.poses.size() == 1);
    REQUIRE(back.sdf.values.size() == ckpt.sdf.values.size());
    for (size_t i = 0; i < ckpt.sdf.values.size(); i += 37)
        CHECK(back.sdf.values[i] == doctest::Approx(ckpt.sdf.values[i]).epsilon(1e-5));
    REQUIRE(back.detail.size() == 1);
    for (size_t i = 0; i < ckpt.detail[0].offsets_front.data.size(); i += 11)
        CHECK(back.detail[0].offsets_front.data[i] ==
              doctest::Approx(ckpt.detail[0].offsets_front.data[i]).epsilon(1e-6));
    CHECK(back.detail[0].feature.channels == 2);
    for (size_t i = 0; i < ckpt.env.radiance.size(); i += 5)
        CHECK(back.env.radiance[i] == doctest::Approx(ckpt.env.radiance[i]).epsilon(1e-6));
    CHECK(back.adam.size() == 4);
    CHECK(back.adam.count("sdf") == 1);
    CHECK(back.weights.joint_count == ckpt.weights.joint_count);
    CHECK(back.material.resolution() == 4);
}
