#include "mav/fixtures.hpp"

#include <cmath>
#include <filesystem>

#include "mav/bvh.hpp"
#include "mav/marching_tet.hpp"
#include "mav/renderer.hpp"
#include "mav/tonemap.hpp"

namespace mav {

namespace fs = std::filesystem;

TriMesh make_sphere_mesh(double radius, int resolution) {
    double pad = radius * 0.4 + 0.1;
    TetGrid grid = build_grid(resolution,
                              Box3{Vec3(-radius - pad), Vec3(radius + pad)});
    SdfGrid sdf(std::move(grid));
    fill_sdf(sdf, [&](const Vec3& p) { return length(p) - radius; });
    ExtractedMesh em = marching_tetrahedra(sdf);
    TriMesh mesh;
    mesh.vertices = std::move(em.vertices);
    mesh.faces = std::move(em.faces);
    return mesh;
}

void fill_two_tone_material(MaterialGrid& grid, const Vec3& kd_neg, const Vec3& kd_pos,
                            double roughness) {
    auto logit = [](double p) {
        p = std::clamp(p, 1e-4, 1.0 - 1e-4);
        return std::log(p / (1.0 - p));
    };
    double rough_u =
        logit((roughness - MaterialGrid::kRoughnessFloor) /
              (1.0 - MaterialGrid::kRoughnessFloor));
    int R = grid.resolution();
    const Box3& b = grid.bounds();
    for (int z = 0; z < R; ++z)
        for (int y = 0; y < R; ++y)
            for (int x = 0; x < R; ++x) {
                double cx = b.lo.x + (b.hi.x - b.lo.x) * x / (R - 1);
                const Vec3& kd = cx < 0 ? kd_neg : kd_pos;
                size_t node = size_t(x) + size_t(R) * (y + size_t(R) * z);
                double* v = grid.values().data() + node * MaterialGrid::kChannels;
                v[0] = logit(kd.x);
                v[1] = logit(kd.y);
                v[2] = logit(kd.z);
                v[3] = rough_u;
            }
}

EnvMap make_gradient_env(int width, int height) {
    EnvMap env(width, height);
    for (int y = 0; y < height; ++y) {
        double theta = kPi * (y + 0.5) / height;
        double up = std::cos(theta);  // 1 at zenith, -1 at nadir
        for (int x = 0; x < width; ++x) {
            double phi = 2 * kPi * (x + 0.5) / width;
            double warm = 0.5 + 0.5 * std::cos(phi);
            double* t = env.at(x, y);
            t[0] = 0.35 + 0.4 * std::max(up, 0.0) + 0.15 * warm;
            t[1] = 0.35 + 0.45 * std::max(up, 0.0);
            t[2] = 0.4 + 0.55 * std::max(up, 0.0) + 0.1 * (1.0 - warm);
        }
    }
    return env;
}

namespace {

Pose fixture_pose(const Skeleton& skeleton, int frame) {
    Pose pose = Pose::rest(skeleton.joint_count());
    if (frame > 0 && skeleton.joint_count() > 2) {
        double bend = 0.25 * frame;
        pose.axis_angle[2] = {0, 0, -bend};   // left arm down
        pose.axis_angle[3] = {0, 0, bend};    // right arm down
    }
    return pose;
}

}  // namespace

std::string make_fixtures(const FixtureOptions& options) {
    fs::path root(options.out_dir);
    fs::create_directories(root);

    CapsuleBody body = make_capsule_body();
    write_skeleton((root / "skeleton.txt").string(), body.skeleton);
    write_template((root / "template.ply").string(), body.surface);

    Box3 bounds = body.surface.mesh.bounds().dilated(0.1);
    MaterialGrid material(24, bounds, 0);
    fill_two_tone_material(material, {0.75, 0.3, 0.2}, {0.2, 0.4, 0.75}, 0.4);
    material.save((root / "material_gt.bin").string());

    EnvMap env = make_gradient_env(32, 16);
    save_envmap((root / "env_gt.pfm").string(), env);
    EnvCdf cdf = build_env_cdf(env);

    DatasetManifest manifest;
    manifest.root = root.string();
    manifest.skeleton_path = "skeleton.txt";
    manifest.template_path = "template.ply";

    Vec3 center = body.surface.mesh.bounds().center();
    for (int f = 0; f < options.frames; ++f) {
        Pose pose = fixture_pose(body.skeleton, f);
        std::string pose_name = "pose" + std::to_string(f) + ".json";
        write_pose((root / pose_name).string(), pose);

        auto transforms = joint_transforms(body.skeleton, pose);
        TriMesh posed = body.surface.mesh;
        posed.vertices = lbs_transform(body.surface.mesh.vertices,
                                       body.surface.surface_weights, transforms);
        Bvh bvh(posed);
        std::vector<Vec3> normals = vertex_normals(posed);

        Scene scene;
        scene.mesh = &posed;
        scene.bvh = &bvh;
        scene.normals = &normals;
        scene.canonical = &body.surface.mesh.vertices;
        scene.material = &material;
        scene.env = &env;
        scene.env_cdf = &cdf;

        FrameRef frame_ref;
        frame_ref.pose = pose_name;
        for (int v = 0; v < options.views; ++v) {
            double angle = 2 * kPi * v / options.views;
            Vec3 eye = center + Vec3{2.4 * std::sin(angle), 0.15, 2.4 * std::cos(angle)};
            Camera cam = look_at_camera(eye, center, {0, 1, 0}, 45.0 * kPi / 180.0,
                                        options.image_size, options.image_size);

            RenderOptions ropts;
            ropts.spp = options.spp;
            ropts.seed = options.seed + uint64_t(f) * 1000 + v;
            RenderOutput out = render_image(scene, cam, ropts);

            std::string tag = "f" + std::to_string(f) + "_v" + std::to_string(v);
            Image srgb(out.radiance.width, out.radiance.height, 3);
            for (size_t i = 0; i < srgb.data.size(); ++i)
                srgb.data[i] = float(std::clamp(tonemap(double(out.radiance.data[i])),
                                                0.0, 1.0));
            write_png((root / (tag + ".png")).string(), srgb);
            write_png((root / (tag + "_mask.png")).string(), out.mask);
            write_pfm((root / (tag + "_normal.pfm")).string(), out.normal);
            save_camera((root / (tag + "_cam.txt")).string(), cam);

            ViewRef view;
            view.image = tag + ".png";
            view.mask = tag + "_mask.png";
            view.camera = tag + "_cam.txt";
            view.normal = tag + "_normal.pfm";
            frame_ref.views.push_back(view);
        }
        manifest.frames.push_back(frame_ref);
    }

    std::string manifest_path = (root / "manifest.json").string();
    save_manifest(manifest_path, manifest);

    Config config;
    config.dataset = manifest_path;
    config.grid_resolution = 48;
    config.detail_resolution = 64;
    config.seed = options.seed;
    save_config((root / "config.json").string(), config);
    return manifest_path;
}

}  // namespace mav
