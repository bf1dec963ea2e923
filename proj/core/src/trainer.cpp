#include "mav/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "mav/eikonal.hpp"
#include "mav/losses.hpp"
#include "mav/pca.hpp"
#include "mav/rng.hpp"
#include "mav/weightgrid.hpp"

namespace mav {

namespace {

// Signed distance approximation to the template: unsigned distance to the
// nearest surface vertex, signed by that vertex's outward normal.
void init_sdf_from_template(SdfGrid& sdf, const TriMesh& surface) {
    std::vector<Vec3> normals = vertex_normals(surface);
    for (size_t i = 0; i < sdf.grid.vertices.size(); ++i) {
        const Vec3& p = sdf.grid.vertices[i];
        double best = 1e30;
        size_t best_v = 0;
        for (size_t v = 0; v < surface.vertices.size(); ++v) {
            double d = length_sq(p - surface.vertices[v]);
            if (d < best) {
                best = d;
                best_v = v;
            }
        }
        double dist = std::sqrt(best);
        double sign = dot(p - surface.vertices[best_v], normals[best_v]) >= 0 ? 1.0 : -1.0;
        sdf.values[i] = sign * dist;
    }
}

Image position_map_image(const Skeleton& skeleton, const TemplateSurface& surface,
                         const Pose& pose, const CanonicalSquare& square,
                         int resolution) {
    auto transforms = joint_transforms(skeleton, pose);
    std::vector<Vec3> posed =
        lbs_transform(surface.mesh.vertices, surface.surface_weights, transforms);
    PositionMaps maps = render_position_maps(surface.mesh.vertices, posed,
                                             surface.mesh.faces, square, resolution);
    // Stack front over back into one picture for the PCA space.
    Image stacked(maps.front.width, maps.front.height * 2, 3);
    std::copy(maps.front.data.begin(), maps.front.data.end(), stacked.data.begin());
    std::copy(maps.back.data.begin(), maps.back.data.end(),
              stacked.data.begin() + maps.front.data.size());
    return stacked;
}

constexpr int kPosMapResolution = 64;

struct GroupParams {
    std::vector<double> flat;

    void gather_detail(const std::vector<DetailMaps>& detail) {
        flat.clear();
        for (const DetailMaps& d : detail) {
            flat.insert(flat.end(), d.offsets_front.data.begin(),
                        d.offsets_front.data.end());
            flat.insert(flat.end(), d.offsets_back.data.begin(),
                        d.offsets_back.data.end());
            flat.insert(flat.end(), d.feature.data.begin(), d.feature.data.end());
        }
    }
    void scatter_detail(std::vector<DetailMaps>& detail) const {
        size_t k = 0;
        for (DetailMaps& d : detail) {
            for (double& v : d.offsets_front.data) v = flat[k++];
            for (double& v : d.offsets_back.data) v = flat[k++];
            for (double& v : d.feature.data) v = flat[k++];
        }
    }
};

}  // namespace

Checkpoint init_checkpoint(const Config& config, const Dataset& dataset) {
    if (dataset.frames.empty()) throw ConfigError("dataset: no frames");
    for (const Frame& f : dataset.frames)
        if (f.views.empty()) throw ConfigError("dataset: frame without views");

    Checkpoint ckpt;
    ckpt.config = config;
    ckpt.skeleton = dataset.skeleton;
    ckpt.surface = dataset.surface;

    Box3 bounds = dataset.surface.mesh.bounds().dilated(0.1);
    ckpt.sdf = SdfGrid(build_grid(config.grid_resolution, bounds));
    init_sdf_from_template(ckpt.sdf, dataset.surface.mesh);

    DiffusionParams dp;
    dp.resolution = config.weight_resolution;
    dp.bounds = bounds;
    ckpt.weights = diffuse_weights(dataset.surface, dp);

    ckpt.material = MaterialGrid(config.material_resolution, bounds,
                                 config.feature_channels);
    ckpt.env = EnvMap(config.env_width, config.env_height, Vec3(0.5));

    for (const Frame& f : dataset.frames) {
        ckpt.poses.push_back(f.pose);
        ckpt.detail.emplace_back(config.detail_resolution, config.feature_channels);
    }

    size_t detail_size = 0;
    for (const DetailMaps& d : ckpt.detail)
        detail_size += d.offsets_front.data.size() + d.offsets_back.data.size() +
                       d.feature.data.size();
    ckpt.adam.emplace("sdf", Adam(ckpt.sdf.values.size(), config.lr_sdf));
    ckpt.adam.emplace("offsets", Adam(detail_size, config.lr_offsets));
    ckpt.adam.emplace("material",
                      Adam(ckpt.material.values().size() +
                               ckpt.material.blend_weights().size(),
                           config.lr_material));
    ckpt.adam.emplace("env", Adam(ckpt.env.radiance.size(), config.lr_env));
    return ckpt;
}

FitResult fit(Checkpoint& ckpt, const Dataset& dataset, const std::string& out_dir) {
    const Config& config = ckpt.config;
    if (dataset.frames.empty()) throw ConfigError("dataset: no frames");
    std::filesystem::create_directories(out_dir);

    CanonicalSquare square = CanonicalSquare::fit(ckpt.surface.mesh.bounds());

    std::string metrics_path = out_dir + "/metrics.csv";
    bool fresh_metrics = ckpt.step == 0 || !std::filesystem::exists(metrics_path);
    std::ofstream metrics(metrics_path, fresh_metrics ? std::ios::trunc : std::ios::app);
    if (fresh_metrics) metrics << "step,loss,psnr\n";

    Checkpoint last_good = ckpt;
    FitResult result;
    size_t F = dataset.frames.size();

    for (uint64_t t = ckpt.step; t < config.steps; ++t) {
        size_t frame_idx = t % F;
        const Frame& frame = dataset.frames[frame_idx];
        const View& view = frame.views[(t / F) % frame.views.size()];
        DetailMaps& detail = ckpt.detail[frame_idx];

        ExtractedMesh em = marching_tetrahedra(ckpt.sdf);
        if (em.empty())
            throw std::runtime_error("fit: surface vanished (empty isosurface)");
        size_t nv = em.vertices.size();

        std::vector<Vec3> offsets(nv);
        std::vector<Vec3> detailed(nv);
        for (size_t i = 0; i < nv; ++i) {
            offsets[i] = sample_offsets(em.vertices[i], detail, square);
            detailed[i] = em.vertices[i] + offsets[i];
        }

        auto transforms = joint_transforms(ckpt.skeleton, frame.pose);
        std::vector<RigidTransform> blended(nv);
        TriMesh posed;
        posed.faces = em.faces;
        posed.vertices.resize(nv);
        for (size_t i = 0; i < nv; ++i) {
            std::vector<double> w = query_weights(ckpt.weights, em.vertices[i]);
            blended[i] = blend_transforms(w.data(), transforms);
            posed.vertices[i] = blended[i].apply(detailed[i]);
        }
        Bvh bvh(posed);
        std::vector<Vec3> normals = vertex_normals(posed);
        EnvCdf cdf = build_env_cdf(ckpt.env);

        Scene scene;
        scene.mesh = &posed;
        scene.bvh = &bvh;
        scene.normals = &normals;
        scene.canonical = &em.vertices;
        scene.material = &ckpt.material;
        scene.env = &ckpt.env;
        scene.env_cdf = &cdf;
        if (config.feature_channels > 0) {
            scene.feature_map = &detail.feature;
            scene.square = &square;
        }

        RenderOptions ropts;
        ropts.spp = config.spp_train;
        ropts.seed = config.seed;
        ropts.step = t;
        ropts.record_samples = true;
        RenderOutput out = render_image(scene, view.camera, ropts);

        ImageLossResult il =
            image_loss(out, view.image, view.mask,
                       view.normal ? &*view.normal : nullptr, config.weights.normal);

        std::vector<Vec3> eik_pts =
            eikonal_samples(ckpt.sdf, config.eikonal_samples, config.seed, t);
        EikonalResult eik = eikonal_loss(ckpt.sdf, eik_pts);

        double off_reg = offset_reg(offsets);
        double lam_off = lambda_offset(config.weights, t, config.steps);

        // Material smoothness with frozen sample pairs for this step.
        double mat_smooth = 0;
        std::vector<double> mat_val_grads(ckpt.material.values().size(), 0.0);
        std::vector<double> mat_blend_grads(ckpt.material.blend_weights().size(), 0.0);
        MaterialGrid::Grads mat_grads{&mat_val_grads, &mat_blend_grads};
        if (config.material_smooth_samples > 0 && nv > 0) {
            Rng rng = Rng::keyed(config.seed, 0x5e00d, 0, t);
            double sigma = ckpt.material.bounds().extent().x /
                           double(ckpt.material.resolution() - 1);
            int count = config.material_smooth_samples;
            double inv = 1.0 / double(count);
            std::vector<double> zero_feature(config.feature_channels, 0.0);
            for (int k = 0; k < count; ++k) {
                const Vec3& c = em.vertices[rng.uniform_index(uint32_t(nv))];
                Vec3 eps = rng.in_unit_ball() * sigma;
                MaterialSample a = ckpt.material.query(c, zero_feature);
                MaterialSample b = ckpt.material.query(c + eps, zero_feature);
                Vec3 kd_sign{};
                double term = 0;
                for (int ch = 0; ch < 3; ++ch) {
                    double d = a.kd[ch] - b.kd[ch];
                    term += config.weights.mat_albedo * std::abs(d) / 3.0;
                    kd_sign[ch] = config.weights.mat_albedo * inv / 3.0 *
                                  (d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0));
                }
                double ds = a.ks - b.ks;
                term += config.weights.mat_rough * std::abs(ds);
                double ks_sign =
                    config.weights.mat_rough * inv * (ds > 0 ? 1.0 : (ds < 0 ? -1.0 : 0.0));
                mat_smooth += term * inv;
                ckpt.material.query_backward(c, zero_feature, kd_sign, ks_sign, mat_grads);
                ckpt.material.query_backward(c + eps, zero_feature, -kd_sign, -ks_sign,
                                             mat_grads);
            }
        }

        double light = light_whiteness_loss(ckpt.env);

        double total = il.total + config.weights.sdf * eik.loss + lam_off * off_reg +
                       mat_smooth + config.weights.light * light;

        if (!std::isfinite(total)) {
            std::fprintf(stderr, "fit: non-finite loss at step %llu, halting\n",
                         (unsigned long long)t);
            save_checkpoint(out_dir, last_good);
            result.steps_done = t;
            result.nan_halt = true;
            return result;
        }

        // Backward.
        RenderGrads rg =
            render_backward(scene, view.camera, out, il.radiance_grads,
                            view.normal ? &il.normal_grads : nullptr, ropts);

        std::vector<Vec3> canon_grads(nv);
        DetailMaps detail_grads(config.detail_resolution, config.feature_channels);
        double reg_scale = lam_off * 2.0 / double(nv);
        for (size_t i = 0; i < nv; ++i) {
            Vec3 g_vc = blended[i].R.transposed() * rg.vertex[i];
            Vec3 g_dv = g_vc + offsets[i] * reg_scale;
            sample_offsets_backward(em.vertices[i], g_dv, detail_grads, square);
            Vec3 ddx, ddy;
            sample_offsets_spatial_grad(em.vertices[i], detail, square, ddx, ddy);
            canon_grads[i] = g_vc + rg.canonical[i];
            canon_grads[i].x += dot(ddx, g_dv);
            canon_grads[i].y += dot(ddy, g_dv);
        }
        if (!rg.feature.data.empty())
            for (size_t i = 0; i < rg.feature.data.size(); ++i)
                detail_grads.feature.data[i] += rg.feature.data[i];

        std::vector<double> sdf_grads(ckpt.sdf.values.size(), 0.0);
        mt_backward(em, ckpt.sdf.grid, canon_grads, sdf_grads);
        for (size_t i = 0; i < sdf_grads.size(); ++i)
            sdf_grads[i] += config.weights.sdf * eik.value_grads[i];

        for (size_t i = 0; i < mat_val_grads.size(); ++i)
            mat_val_grads[i] += rg.mat_values[i];
        for (size_t i = 0; i < mat_blend_grads.size(); ++i)
            mat_blend_grads[i] += rg.mat_blend[i];

        std::vector<double> env_grads = rg.env;
        light_whiteness_backward(ckpt.env, config.weights.light, env_grads);

        // Parameter updates.
        if (config.optimize_sdf) {
            ckpt.adam.at("sdf").step(ckpt.sdf.values, sdf_grads);
            ckpt.sdf.clamp_values();
        }
        if (config.optimize_offsets) {
            GroupParams params, grads;
            params.gather_detail(ckpt.detail);
            std::vector<DetailMaps> grad_holder(ckpt.detail.size());
            for (size_t i = 0; i < ckpt.detail.size(); ++i)
                grad_holder[i] = i == frame_idx
                                     ? std::move(detail_grads)
                                     : DetailMaps(config.detail_resolution,
                                                  config.feature_channels);
            grads.gather_detail(grad_holder);
            ckpt.adam.at("offsets").step(params.flat, grads.flat);
            params.scatter_detail(ckpt.detail);
            for (DetailMaps& d : ckpt.detail) d.clamp_offsets();
        }
        if (config.optimize_material) {
            std::vector<double> params = ckpt.material.values();
            params.insert(params.end(), ckpt.material.blend_weights().begin(),
                          ckpt.material.blend_weights().end());
            std::vector<double> grads = mat_val_grads;
            grads.insert(grads.end(), mat_blend_grads.begin(), mat_blend_grads.end());
            ckpt.adam.at("material").step(params, grads);
            std::copy(params.begin(), params.begin() + ckpt.material.values().size(),
                      ckpt.material.values().begin());
            std::copy(params.begin() + ckpt.material.values().size(), params.end(),
                      ckpt.material.blend_weights().begin());
        }
        if (config.optimize_env) {
            ckpt.adam.at("env").step(ckpt.env.radiance, env_grads);
            ckpt.env.clamp_nonnegative();
        }

        double psnr = masked_psnr(out.radiance, view.image, view.mask);
        metrics << t << "," << total << "," << psnr << "\n";
        result.final_loss = total;
        result.steps_done = t + 1;
        ckpt.step = t + 1;

        if ((t + 1) % config.checkpoint_every == 0 || t + 1 == config.steps) {
            save_checkpoint(out_dir, ckpt);
            last_good = ckpt;
        }
    }

    // Position-map PCA over the training poses for nearest-pose lookup.
    if (ckpt.poses.size() >= 2 && ckpt.pca.component_count() == 0) {
        std::vector<Image> maps;
        for (const Pose& pose : ckpt.poses)
            maps.push_back(position_map_image(ckpt.skeleton, ckpt.surface, pose, square,
                                              kPosMapResolution));
        int k = std::min<int>(4, int(maps.size()));
        ckpt.pca = pca_fit(maps, k);
        ckpt.pca_coeffs.clear();
        for (const Image& m : maps) ckpt.pca_coeffs.push_back(pca_coefficients(m, ckpt.pca));
        save_checkpoint(out_dir, ckpt);
    }
    return result;
}

int nearest_detail_index(const Checkpoint& ckpt, const Pose& pose) {
    if (ckpt.pca.component_count() == 0 || ckpt.pca_coeffs.size() != ckpt.poses.size() ||
        ckpt.poses.size() < 2)
        return 0;
    CanonicalSquare square = CanonicalSquare::fit(ckpt.surface.mesh.bounds());
    Image map = position_map_image(ckpt.skeleton, ckpt.surface, pose, square,
                                   kPosMapResolution);
    std::vector<double> coeffs = pca_coefficients(map, ckpt.pca);
    int best = 0;
    double best_d = 1e30;
    for (size_t i = 0; i < ckpt.pca_coeffs.size(); ++i) {
        double d = 0;
        for (size_t k = 0; k < coeffs.size(); ++k) {
            double diff = coeffs[k] - ckpt.pca_coeffs[i][k];
            d += diff * diff;
        }
        if (d < best_d) {
            best_d = d;
            best = int(i);
        }
    }
    return best;
}

PosedAvatar pose_avatar(const Checkpoint& ckpt, const Pose& pose, double* mesh_seconds) {
    auto start = std::chrono::steady_clock::now();
    PosedAvatar avatar;
    avatar.square = CanonicalSquare::fit(ckpt.surface.mesh.bounds());
    avatar.detail_index = nearest_detail_index(ckpt, pose);
    avatar.canonical = marching_tetrahedra(ckpt.sdf);
    if (avatar.canonical.empty())
        throw std::runtime_error("pose_avatar: empty isosurface");
    const DetailMaps& detail = ckpt.detail.at(avatar.detail_index);

    size_t nv = avatar.canonical.vertices.size();
    avatar.detailed_canonical.resize(nv);
    for (size_t i = 0; i < nv; ++i)
        avatar.detailed_canonical[i] =
            avatar.canonical.vertices[i] +
            sample_offsets(avatar.canonical.vertices[i], detail, avatar.square);

    auto transforms = joint_transforms(ckpt.skeleton, pose);
    avatar.mesh.faces = avatar.canonical.faces;
    avatar.mesh.vertices.resize(nv);
    for (size_t i = 0; i < nv; ++i) {
        std::vector<double> w = query_weights(ckpt.weights, avatar.canonical.vertices[i]);
        avatar.mesh.vertices[i] =
            blend_transforms(w.data(), transforms).apply(avatar.detailed_canonical[i]);
    }
    avatar.normals = vertex_normals(avatar.mesh);
    if (mesh_seconds)
        *mesh_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return avatar;
}

void build_avatar_scene(const Checkpoint& ckpt, const PosedAvatar& avatar,
                        AvatarScene& out) {
    out.bvh = Bvh(avatar.mesh);
    out.env_cdf = build_env_cdf(ckpt.env);
    out.scene = Scene{};
    out.scene.mesh = &avatar.mesh;
    out.scene.bvh = &out.bvh;
    out.scene.normals = &avatar.normals;
    out.scene.canonical = &avatar.canonical.vertices;
    out.scene.material = &ckpt.material;
    out.scene.env = &ckpt.env;
    out.scene.env_cdf = &out.env_cdf;
    if (ckpt.config.feature_channels > 0 && !ckpt.detail.empty()) {
        out.scene.feature_map = &ckpt.detail.at(avatar.detail_index).feature;
        out.scene.square = &avatar.square;
    }
}

}  // namespace mav
