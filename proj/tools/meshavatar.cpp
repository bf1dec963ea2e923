#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mav/eikonal.hpp"
#include "mav/fixtures.hpp"
#include "mav/losses.hpp"
#include "mav/marching_tet.hpp"
#include "mav/renderer.hpp"
#include "mav/tonemap.hpp"
#include "mav/trainer.hpp"

namespace fs = std::filesystem;
using namespace mav;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNumeric = 2;
constexpr int kExitDiagnostic = 3;

Image to_srgb8(const Image& linear) {
    Image out(linear.width, linear.height, linear.channels);
    for (size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = float(std::clamp(tonemap(double(linear.data[i])), 0.0, 1.0));
    return out;
}

void write_render_outputs(const std::string& dir, const RenderOutput& out) {
    fs::create_directories(dir);
    write_pfm(dir + "/radiance.pfm", out.radiance);
    write_png(dir + "/image.png", to_srgb8(out.radiance));
    write_pfm(dir + "/normal.pfm", out.normal);
    write_pfm(dir + "/depth.pfm", out.depth);
    write_png(dir + "/mask.png", out.mask);
    write_pfm(dir + "/albedo.pfm", out.albedo);
}

bool finite_image(const Image& img) {
    for (float v : img.data)
        if (!std::isfinite(v)) return false;
    return true;
}

int cmd_fit(const std::string& config_path, const std::string& out_dir,
            const std::string& resume, uint64_t seed_override, bool has_seed) {
    Config config = load_config(config_path);
    if (has_seed) config.seed = seed_override;
    DatasetManifest manifest = load_manifest(config.dataset);
    Dataset dataset = load_dataset(manifest);

    Checkpoint ckpt;
    if (!resume.empty()) {
        ckpt = load_checkpoint(resume);
        ckpt.config.dataset = config.dataset;
    } else {
        ckpt = init_checkpoint(config, dataset);
    }
    FitResult result = fit(ckpt, dataset, out_dir);
    if (result.nan_halt) {
        std::fprintf(stderr, "fit halted on non-finite loss after %llu steps\n",
                     (unsigned long long)result.steps_done);
        return kExitNumeric;
    }
    std::printf("fit: %llu steps, final loss %.6f, checkpoint at %s\n",
                (unsigned long long)result.steps_done, result.final_loss,
                out_dir.c_str());
    return kExitOk;
}

int render_common(const std::string& ckpt_dir, const std::string& pose_path,
                  const std::string& camera_path, const std::string& env_path,
                  int spp, uint64_t seed, const std::string& out_dir) {
    Checkpoint ckpt = load_checkpoint(ckpt_dir);
    if (!env_path.empty()) ckpt.env = load_envmap(env_path);

    Pose pose = pose_path.empty() ? Pose::rest(ckpt.skeleton.joint_count())
                                  : read_pose(pose_path);
    pose.validate(ckpt.skeleton.joint_count());
    Camera camera = load_camera(camera_path);

    double mesh_seconds = 0;
    PosedAvatar avatar = pose_avatar(ckpt, pose, &mesh_seconds);
    AvatarScene scene;
    build_avatar_scene(ckpt, avatar, scene);

    RenderOptions opts;
    opts.spp = spp > 0 ? spp : ckpt.config.spp_infer;
    opts.seed = seed;
    RenderOutput out = render_image(scene.scene, camera, opts);
    if (!finite_image(out.radiance)) {
        std::fprintf(stderr, "render produced non-finite values\n");
        return kExitNumeric;
    }
    write_render_outputs(out_dir, out);
    std::printf("mesh stage: %.3f s (extract+offset+skin), render stage: %.3f s\n",
                mesh_seconds, out.render_seconds);
    return kExitOk;
}

int cmd_pose_seq(const std::string& ckpt_dir, const std::vector<std::string>& pose_paths,
                 const std::string& out_dir) {
    Checkpoint ckpt = load_checkpoint(ckpt_dir);
    fs::create_directories(out_dir);
    for (size_t i = 0; i < pose_paths.size(); ++i) {
        Pose pose = read_pose(pose_paths[i]);
        pose.validate(ckpt.skeleton.joint_count());
        PosedAvatar avatar = pose_avatar(ckpt, pose);
        write_obj(out_dir + "/frame" + std::to_string(i) + ".obj", avatar.mesh);
    }
    std::printf("wrote %zu posed meshes to %s\n", pose_paths.size(), out_dir.c_str());
    return kExitOk;
}

int cmd_export(const std::string& ckpt_dir, const std::string& out_dir) {
    Checkpoint ckpt = load_checkpoint(ckpt_dir);
    fs::create_directories(out_dir);

    ExtractedMesh em = marching_tetrahedra(ckpt.sdf);
    if (em.empty()) {
        std::fprintf(stderr, "export: empty isosurface\n");
        return kExitNumeric;
    }
    TriMesh mesh;
    mesh.vertices = em.vertices;
    mesh.faces = em.faces;
    write_obj(out_dir + "/canonical.obj", mesh);

    // Per-vertex baked material: position, albedo as color, roughness.
    std::ofstream ply(out_dir + "/material.ply");
    ply << "ply\nformat ascii 1.0\n";
    ply << "element vertex " << mesh.vertices.size() << "\n";
    ply << "property float x\nproperty float y\nproperty float z\n";
    ply << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    ply << "property float roughness\n";
    ply << "element face " << mesh.faces.size() << "\n";
    ply << "property list uchar int vertex_indices\nend_header\n";
    std::vector<double> zero_feature(ckpt.config.feature_channels, 0.0);
    for (const Vec3& v : mesh.vertices) {
        MaterialSample mat = ckpt.material.query(v, zero_feature);
        auto to8 = [](double x) {
            return int(std::lround(std::clamp(x, 0.0, 1.0) * 255.0));
        };
        ply << v.x << " " << v.y << " " << v.z << " " << to8(mat.kd.x) << " "
            << to8(mat.kd.y) << " " << to8(mat.kd.z) << " " << mat.ks << "\n";
    }
    for (const auto& f : mesh.faces)
        ply << "3 " << f[0] << " " << f[1] << " " << f[2] << "\n";

    save_envmap(out_dir + "/env.pfm", ckpt.env);
    std::printf("exported canonical mesh, baked material and light to %s\n",
                out_dir.c_str());
    return kExitOk;
}

// Minimal self-check scenes for `diagnose`.

struct FlatScene {
    TriMesh mesh;
    Bvh bvh;
    std::vector<Vec3> normals;
    MaterialGrid material;
    EnvMap env;
    EnvCdf cdf;
    Scene scene;
};

void build_flat_scene(FlatScene& s, const TriMesh& mesh, double albedo_logit,
                      double rough_logit, const EnvMap& env) {
    s.mesh = mesh;
    s.bvh = Bvh(s.mesh);
    s.normals = vertex_normals(s.mesh);
    Box3 bounds = s.mesh.bounds().dilated(0.2);
    s.material = MaterialGrid(2, bounds, 0);
    for (size_t i = 0; i < s.material.values().size(); i += 4) {
        s.material.values()[i] = albedo_logit;
        s.material.values()[i + 1] = albedo_logit;
        s.material.values()[i + 2] = albedo_logit;
        s.material.values()[i + 3] = rough_logit;
    }
    s.env = env;
    s.cdf = build_env_cdf(s.env);
    s.scene.mesh = &s.mesh;
    s.scene.bvh = &s.bvh;
    s.scene.normals = &s.normals;
    s.scene.canonical = &s.mesh.vertices;
    s.scene.material = &s.material;
    s.scene.env = &s.env;
    s.scene.env_cdf = &s.cdf;
}

bool diag_furnace() {
    FlatScene s;
    build_flat_scene(s, make_sphere_mesh(0.5, 32), 20.0, -20.0, EnvMap(8, 4, Vec3(1.0)));
    Camera cam = look_at_camera({0, 0, -2.2}, {0, 0, 0}, {0, 1, 0}, 40 * kPi / 180, 64, 64);
    RenderOptions opts;
    opts.spp = 128;
    RenderOutput out = render_image(s.scene, cam, opts);
    double sum = 0;
    int count = 0;
    for (int y = 28; y < 36; ++y)
        for (int x = 28; x < 36; ++x)
            if (out.mask.at(x, y)[0] > 0) {
                const float* p = out.radiance.at(x, y);
                sum += (p[0] + p[1] + p[2]) / 3.0;
                ++count;
            }
    double mean = count ? sum / count : 0;
    bool ok = count > 0 && std::abs(mean - 1.0) < 0.02;
    std::printf("  furnace sphere mean radiance %.4f (want 1.00 +- 0.02): %s\n", mean,
                ok ? "ok" : "FAIL");
    return ok;
}

bool diag_env_gradcheck() {
    TriMesh quad;
    quad.vertices = {{-1, 0, -1}, {1, 0, -1}, {1, 0, 1}, {-1, 0, 1}};
    quad.faces = {{0, 2, 1}, {0, 3, 2}};
    FlatScene s;
    build_flat_scene(s, quad, 0.0, 2.0, EnvMap(8, 4, Vec3(0.8)));
    Camera cam = look_at_camera({0, 2, 0.01}, {0, 0, 0}, {0, 0, 1}, 30 * kPi / 180, 4, 4);
    RenderOptions opts;
    opts.spp = 16;
    opts.strategy = SampleStrategy::LightOnly;
    opts.record_samples = true;
    RenderOutput out = render_image(s.scene, cam, opts);

    Image grads(4, 4, 3);
    int px = 2, py = 2;
    for (int c = 0; c < 3; ++c) grads.at(px, py)[c] = 1.f;
    RenderGrads rg = render_backward(s.scene, cam, out, grads, nullptr, opts);

    size_t best = 0;
    for (size_t i = 0; i < rg.env.size(); ++i)
        if (std::abs(rg.env[i]) > std::abs(rg.env[best])) best = i;
    if (rg.env[best] == 0) {
        std::printf("  env gradcheck: no covered pixel: FAIL\n");
        return false;
    }
    double h = 1e-3;
    double base = s.env.radiance[best];
    auto eval = [&](double v) {
        s.env.radiance[best] = v;
        RenderOutput o = render_image(s.scene, cam, opts);
        const float* p = o.radiance.at(px, py);
        return double(p[0]) + p[1] + p[2];
    };
    double fd = (eval(base + h) - eval(base - h)) / (2 * h);
    s.env.radiance[best] = base;
    double rel = std::abs(fd - rg.env[best]) / std::max(std::abs(fd), 1e-12);
    bool ok = rel < 1e-3;
    std::printf("  env texel gradcheck rel err %.2e (want < 1e-3): %s\n", rel,
                ok ? "ok" : "FAIL");
    return ok;
}

bool diag_mt_topology() {
    TetGrid grid = build_grid(32, Box3{Vec3(-1), Vec3(1)});
    SdfGrid sdf(std::move(grid));
    fill_sdf(sdf, [](const Vec3& p) { return length(p) - 0.5; });
    ExtractedMesh em = marching_tetrahedra(sdf);
    TriMesh mesh;
    mesh.vertices = em.vertices;
    mesh.faces = em.faces;
    bool water = is_watertight(mesh);
    long euler = euler_characteristic(mesh);

    fill_sdf(sdf, [](const Vec3&) { return 1.0; });
    bool empty_ok = marching_tetrahedra(sdf).empty();
    bool ok = water && euler == 2 && empty_ok;
    std::printf("  isosurface: watertight=%d euler=%ld empty-on-positive=%d: %s\n",
                int(water), euler, int(empty_ok), ok ? "ok" : "FAIL");
    return ok;
}

bool diag_eikonal() {
    TetGrid grid = build_grid(64, Box3{Vec3(-1), Vec3(1)});
    SdfGrid sdf(std::move(grid));
    fill_sdf(sdf, [](const Vec3& p) { return length(p) - 0.5; });
    std::vector<Vec3> samples = eikonal_samples(sdf, 2000, 7, 0);
    double loss = eikonal_loss(sdf, samples).loss;
    bool ok = loss < 1e-3;
    std::printf("  eikonal loss on exact distance field %.2e (want < 1e-3): %s\n", loss,
                ok ? "ok" : "FAIL");
    return ok;
}

int cmd_diagnose(const std::string& fixtures_dir, uint64_t seed) {
    if (!fixtures_dir.empty()) {
        FixtureOptions opts;
        opts.out_dir = fixtures_dir;
        opts.seed = seed;
        std::string manifest = make_fixtures(opts);
        std::printf("fixtures written, manifest at %s\n", manifest.c_str());
        return kExitOk;
    }
    std::printf("diagnose:\n");
    bool ok = true;
    ok &= diag_mt_topology();
    ok &= diag_eikonal();
    ok &= diag_furnace();
    ok &= diag_env_gradcheck();
    std::printf("diagnose: %s\n", ok ? "all checks passed" : "FAILURES");
    return ok ? kExitOk : kExitDiagnostic;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"differentiable avatar toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", resume, pose_path, camera_path, env_path;
    std::string fixtures_dir;
    std::vector<std::string> pose_paths;
    uint64_t seed = 0;
    int spp = 0;
    bool make_fixtures_flag = false;

    auto* fit_cmd = app.add_subcommand("fit", "optimize an avatar from a dataset");
    fit_cmd->add_option("--config", config_path)->required();
    fit_cmd->add_option("--out", out_dir);
    fit_cmd->add_option("--resume", resume);
    auto* fit_seed = fit_cmd->add_option("--seed", seed);

    auto* render_cmd = app.add_subcommand("render", "render a checkpoint");
    render_cmd->add_option("--resume", resume)->required();
    render_cmd->add_option("--pose", pose_path);
    render_cmd->add_option("--camera", camera_path)->required();
    render_cmd->add_option("--spp", spp);
    render_cmd->add_option("--seed", seed);
    render_cmd->add_option("--out", out_dir);

    auto* relight_cmd = app.add_subcommand("relight", "render under a new light");
    relight_cmd->add_option("--resume", resume)->required();
    relight_cmd->add_option("--pose", pose_path);
    relight_cmd->add_option("--camera", camera_path)->required();
    relight_cmd->add_option("--env", env_path)->required();
    relight_cmd->add_option("--spp", spp);
    relight_cmd->add_option("--seed", seed);
    relight_cmd->add_option("--out", out_dir);

    auto* pose_cmd = app.add_subcommand("pose", "export posed meshes");
    pose_cmd->add_option("--resume", resume)->required();
    pose_cmd->add_option("--poses", pose_paths)->required();
    pose_cmd->add_option("--out", out_dir);

    auto* export_cmd = app.add_subcommand("export", "export canonical assets");
    export_cmd->add_option("--resume", resume)->required();
    export_cmd->add_option("--out", out_dir);

    auto* diag_cmd = app.add_subcommand("diagnose", "run built-in self checks");
    diag_cmd->add_flag("--make-fixtures", make_fixtures_flag,
                       "generate the synthetic dataset instead");
    diag_cmd->add_option("--out", fixtures_dir);
    diag_cmd->add_option("--seed", seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*fit_cmd)
            return cmd_fit(config_path, out_dir, resume, seed, fit_seed->count() > 0);
        if (*render_cmd)
            return render_common(resume, pose_path, camera_path, "", spp, seed, out_dir);
        if (*relight_cmd)
            return render_common(resume, pose_path, camera_path, env_path, spp, seed,
                                 out_dir);
        if (*pose_cmd) return cmd_pose_seq(resume, pose_paths, out_dir);
        if (*export_cmd) return cmd_export(resume, out_dir);
        if (*diag_cmd) {
            if (make_fixtures_flag && fixtures_dir.empty()) fixtures_dir = "fixtures";
            return cmd_diagnose(make_fixtures_flag ? fixtures_dir : "", seed);
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumeric;
    }
    return kExitConfig;
}
