#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "mav/config.hpp"
#include "mav/dataset.hpp"
#include "mav/fixtures.hpp"
#include "mav/trainer.hpp"
#include "helpers.hpp"

using namespace mav;

namespace {

const std::string& fixture_manifest() {
    static std::string path = [] {
        FixtureOptions options;
        options.out_dir = mavtest::temp_dir("pipeline_fixtures");
        options.views = 2;
        options.frames = 2;
        options.image_size = 32;
        options.spp = 16;
        return make_fixtures(options);
    }();
    return path;
}

Config small_config() {
    Config c;
    c.dataset = fixture_manifest();
    c.grid_resolution = 20;
    c.weight_resolution = 10;
    c.detail_resolution = 16;
    c.feature_channels = 2;
    c.material_resolution = 8;
    c.env_width = 16;
    c.env_height = 8;
    c.spp_train = 2;
    c.steps = 4;
    c.checkpoint_every = 2;
    c.eikonal_samples = 64;
    c.material_smooth_samples = 32;
    c.validate();
    return c;
}

int count_lines(const std::string& path) {
    std::ifstream in(path);
    std::string line;
    int n = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++n;
    return n;
}

}  // namespace

TEST_CASE("synthetic fixtures load as a consistent dataset") {
    DatasetManifest manifest = load_manifest(fixture_manifest());
    REQUIRE(manifest.frames.size() == 2);
    CHECK(manifest.frames[0].views.size() == 2);

    Dataset dataset = load_dataset(manifest);
    CHECK(dataset.view_count() == 4);
    CHECK(dataset.skeleton.joint_count() == 5);
    CHECK(dataset.surface.mesh.faces.size() > 100);
    for (const Frame& frame : dataset.frames)
        for (const View& view : frame.views) {
            CHECK(view.image.channels == 3);
            CHECK(view.mask.channels == 1);
            CHECK(view.image.width == view.camera.width);
            REQUIRE(view.normal.has_value());
            CHECK(view.normal->channels == 3);
            double coverage = 0;
            for (float v : view.mask.data) coverage += v;
            CHECK(coverage > 20);  // the body is actually in frame
        }

    Config from_disk = load_config(
        (std::filesystem::path(fixture_manifest()).parent_path() / "config.json")
            .string());
    CHECK(from_disk.dataset == fixture_manifest());
}

TEST_CASE("a short fit run optimizes, checkpoints and fits the pose basis") {
    Dataset dataset = load_dataset(load_manifest(fixture_manifest()));
    Config config = small_config();
    Checkpoint ckpt = init_checkpoint(config, dataset);
    CHECK(ckpt.poses.size() == 2);
    CHECK(ckpt.detail.size() == 2);
    CHECK(ckpt.pca.component_count() == 0);

    std::string out = mavtest::temp_dir("fit_run");
    FitResult result = fit(ckpt, dataset, out);
    CHECK(result.steps_done == 4);
    CHECK(!result.nan_halt);
    CHECK(std::isfinite(result.final_loss));
    CHECK(ckpt.step == 4);

    // header + one row per step
    CHECK(count_lines(out + "/metrics.csv") == 5);
    CHECK(std::filesystem::exists(out + "/config.json"));
    CHECK(std::filesystem::exists(out + "/sdf.bin"));

    // Two training poses span a rank-1 centered basis: one component.
    CHECK(ckpt.pca.component_count() == 1);
    REQUIRE(ckpt.pca_coeffs.size() == 2);

    Checkpoint loaded = load_checkpoint(out);
    CHECK(loaded.step == 4);
    CHECK(loaded.pca.component_count() == 1);

    // nearest-pose lookup recovers the training poses themselves
    CHECK(nearest_detail_index(loaded, loaded.poses[0]) == 0);
    CHECK(nearest_detail_index(loaded, loaded.poses[1]) == 1);

    double mesh_seconds = -1;
    PosedAvatar avatar = pose_avatar(loaded, loaded.poses[1], &mesh_seconds);
    CHECK(mesh_seconds >= 0);
    CHECK(avatar.detail_index == 1);
    REQUIRE(avatar.mesh.vertices.size() > 100);
    CHECK(avatar.normals.size() == avatar.mesh.vertices.size());
    CHECK(avatar.detailed_canonical.size() == avatar.mesh.vertices.size());

    AvatarScene scene;
    build_avatar_scene(loaded, avatar, scene);
    RenderOptions ropts;
    ropts.spp = 4;
    RenderOutput render = render_image(scene.scene, dataset.frames[1].views[0].camera,
                                       ropts);
    double coverage = 0;
    for (float v : render.mask.data) coverage += v;
    CHECK(coverage > 20);
    for (float v : render.radiance.data) REQUIRE(std::isfinite(v));
}

TEST_CASE("fit is deterministic and resumable") {
    Dataset dataset = load_dataset(load_manifest(fixture_manifest()));
    Config config = small_config();
    config.steps = 3;
    config.checkpoint_every = 3;

    std::string out_a = mavtest::temp_dir("fit_a");
    Checkpoint a = init_checkpoint(config, dataset);
    FitResult ra = fit(a, dataset, out_a);

    std::string out_b = mavtest::temp_dir("fit_b");
    Checkpoint b = init_checkpoint(config, dataset);
    FitResult rb = fit(b, dataset, out_b);

    CHECK(ra.final_loss == rb.final_loss);
    REQUIRE(a.sdf.values.size() == b.sdf.values.size());
    for (size_t i = 0; i < a.sdf.values.size(); i += 101)
        CHECK(a.sdf.values[i] == b.sdf.values[i]);
    CHECK(a.env.radiance == b.env.radiance);

    // resume from the on-disk state and push the horizon forward
    Checkpoint resumed = load_checkpoint(out_a);
    CHECK(resumed.step == 3);
    resumed.config.steps = 5;
    FitResult rr = fit(resumed, dataset, out_a);
    CHECK(rr.steps_done == 5);
    CHECK(count_lines(out_a + "/metrics.csv") == 6);
}
