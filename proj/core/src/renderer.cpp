#include "mav/renderer.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "mav/brdf.hpp"
#include "mav/jet.hpp"
#include "mav/parallel.hpp"
#include "mav/rng.hpp"

namespace mav {

namespace {

constexpr double kShadowEps = 1e-4;

struct HitGeom {
    Vec3 position;
    Vec3 bary;        // (1-u-v, u, v)
    Vec3 n_unnorm;    // interpolated, before normalization
    Vec3 normal;      // unit shading normal
    Vec3 canonical;   // lookup coordinate
    std::vector<double> feature;
    MaterialSample mat;
};

HitGeom hit_geometry(const Scene& scene, const Hit& hit, const Ray& ray) {
    HitGeom g;
    const auto& f = scene.mesh->faces[hit.face];
    g.position = ray.origin + ray.dir * hit.t;
    g.bary = {1.0 - hit.u - hit.v, hit.u, hit.v};
    g.n_unnorm = (*scene.normals)[f[0]] * g.bary.x + (*scene.normals)[f[1]] * g.bary.y +
                 (*scene.normals)[f[2]] * g.bary.z;
    double len = length(g.n_unnorm);
    g.normal = len > 1e-12 ? g.n_unnorm / len : Vec3{0, 0, 1};
    const std::vector<Vec3>& canon = *scene.canonical;
    g.canonical =
        canon[f[0]] * g.bary.x + canon[f[1]] * g.bary.y + canon[f[2]] * g.bary.z;
    if (scene.feature_map)
        g.feature = sample_feature(g.canonical, *scene.feature_map, *scene.square);
    else
        g.feature.assign(scene.material->feature_channels(), 0.0);
    g.mat = scene.material->query(g.canonical, g.feature);
    return g;
}

bool light_visible(const Scene& scene, const Vec3& point, const Vec3& normal,
                   const Vec3& dir, bool shadows) {
    if (!shadows) return true;
    Ray shadow{point + normal * kShadowEps, dir};
    return !scene.bvh->occluded(shadow, kShadowEps);
}

void check_scene(const Scene& scene) {
    if (!scene.mesh || !scene.bvh || !scene.normals || !scene.canonical ||
        !scene.material || !scene.env || !scene.env_cdf)
        throw std::invalid_argument("render: incomplete scene");
    if (scene.feature_map && !scene.square)
        throw std::invalid_argument("render: feature map without canonical square");
}

}  // namespace

Vec3 shade_pixel(const Scene& scene, const Hit& hit, const Ray& primary,
                 const RenderOptions& options, uint64_t pixel_index,
                 PixelRecord* record) {
    HitGeom g = hit_geometry(scene, hit, primary);
    Vec3 wo = -primary.dir;
    Vec3 total{};
    const bool use_light = options.strategy != SampleStrategy::BrdfOnly;
    const bool use_brdf = options.strategy != SampleStrategy::LightOnly;
    const bool mis = options.strategy == SampleStrategy::Mis;

    for (int s = 0; s < options.spp; ++s) {
        Rng rng = Rng::keyed(options.seed, pixel_index, uint64_t(s), options.step);
        double ul1 = rng.uniform(), ul2 = rng.uniform();
        double ub1 = rng.uniform(), ub2 = rng.uniform(), ulobe = rng.uniform();

        if (use_light) {
            double pdf_l;
            Vec3 wl = env_sample(*scene.env_cdf, ul1, ul2, &pdf_l);
            double cos_i = dot(wl, g.normal);
            bool vis = cos_i > 0 &&
                       light_visible(scene, g.position, g.normal, wl, options.shadows);
            double w = mis ? pdf_l / (pdf_l + brdf_pdf(g.mat, wl, wo, g.normal)) : 1.0;
            if (vis) {
                Vec3 f = brdf_eval(g.mat, wl, wo, g.normal);
                total += scene.env->eval(wl) * f * (cos_i * w / pdf_l);
            }
            if (record) record->samples.push_back({wl, pdf_l, w, vis});
        }
        if (use_brdf) {
            double pdf_b;
            Vec3 wb = brdf_sample(g.mat, wo, g.normal, ub1, ub2, ulobe, &pdf_b);
            double cos_i = dot(wb, g.normal);
            bool vis = cos_i > 0 &&
                       light_visible(scene, g.position, g.normal, wb, options.shadows);
            double w = mis ? pdf_b / (pdf_b + env_pdf(*scene.env_cdf, wb)) : 1.0;
            if (vis) {
                Vec3 f = brdf_eval(g.mat, wb, wo, g.normal);
                total += scene.env->eval(wb) * f * (cos_i * w / pdf_b);
            }
            if (record) record->samples.push_back({wb, pdf_b, w, vis});
        }
    }
    return total / double(options.spp);
}

RenderOutput render_image(const Scene& scene, const Camera& camera,
                          const RenderOptions& options) {
    check_scene(scene);
    camera.validate();
    auto start = std::chrono::steady_clock::now();

    RenderOutput out;
    int w = camera.width, h = camera.height;
    out.radiance = Image(w, h, 3);
    out.normal = Image(w, h, 3);
    out.depth = Image(w, h, 1);
    out.mask = Image(w, h, 1);
    out.albedo = Image(w, h, 3);
    if (options.record_samples) out.records.resize(size_t(w) * h);

    if (scene.mesh->faces.empty() || scene.bvh->empty()) {
        out.render_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return out;
    }

    RigidTransform cam_inv = camera.world_from_camera.inverse();
    parallel_chunks(0, h, [&](int64_t y0, int64_t y1, int) {
        for (int64_t y = y0; y < y1; ++y)
            for (int x = 0; x < w; ++x) {
                uint64_t pixel = uint64_t(y) * w + x;
                Ray ray = camera.pixel_ray(x, int(y));
                Hit hit = scene.bvh->intersect(ray);
                if (!hit.valid) continue;
                PixelRecord* rec = nullptr;
                if (options.record_samples) {
                    rec = &out.records[pixel];
                    rec->face = hit.face;
                    rec->u = hit.u;
                    rec->v = hit.v;
                }
                Vec3 L = shade_pixel(scene, hit, ray, options, pixel, rec);
                HitGeom g = hit_geometry(scene, hit, ray);
                Vec3 n_cam = cam_inv.apply_vector(g.normal);
                Vec3 p_cam = cam_inv.apply(g.position);
                float* rad = out.radiance.at(x, int(y));
                rad[0] = float(L.x);
                rad[1] = float(L.y);
                rad[2] = float(L.z);
                float* nrm = out.normal.at(x, int(y));
                nrm[0] = float(n_cam.x);
                nrm[1] = float(n_cam.y);
                nrm[2] = float(n_cam.z);
                out.depth.at(x, int(y))[0] = float(p_cam.z);
                out.mask.at(x, int(y))[0] = 1.f;
                float* alb = out.albedo.at(x, int(y));
                alb[0] = float(g.mat.kd.x);
                alb[1] = float(g.mat.kd.y);
                alb[2] = float(g.mat.kd.z);
            }
    });
    out.render_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

namespace {

// Per-chunk gradient buffers, reduced in chunk order.
struct GradBuffers {
    std::vector<double> env;
    std::vector<double> mat_values;
    std::vector<double> mat_blend;
    ParamMap feature;
    std::vector<Vec3> canonical;
    std::vector<Vec3> normal_adj;  // dL/d(unit vertex normal)
    std::vector<Vec3> vertex;      // bary chain only; normal chain added later

    GradBuffers(const Scene& scene) {
        env.assign(scene.env->radiance.size(), 0.0);
        mat_values.assign(scene.material->values().size(), 0.0);
        mat_blend.assign(scene.material->blend_weights().size(), 0.0);
        if (scene.feature_map)
            feature = ParamMap(scene.feature_map->width, scene.feature_map->height,
                               scene.feature_map->channels);
        size_t nv = scene.mesh->vertices.size();
        canonical.assign(nv, Vec3{});
        normal_adj.assign(nv, Vec3{});
        vertex.assign(nv, Vec3{});
    }

    void add(const GradBuffers& o) {
        for (size_t i = 0; i < env.size(); ++i) env[i] += o.env[i];
        for (size_t i = 0; i < mat_values.size(); ++i) mat_values[i] += o.mat_values[i];
        for (size_t i = 0; i < mat_blend.size(); ++i) mat_blend[i] += o.mat_blend[i];
        for (size_t i = 0; i < feature.data.size(); ++i) feature.data[i] += o.feature.data[i];
        for (size_t i = 0; i < vertex.size(); ++i) {
            canonical[i] += o.canonical[i];
            normal_adj[i] += o.normal_adj[i];
            vertex[i] += o.vertex[i];
        }
    }
};

// Jet slots: 0..2 diffuse albedo, 3 roughness, 4..6 world normal.
using J7 = Jet<7>;

void backward_pixel(const Scene& scene, const Camera& camera, const PixelRecord& rec,
                    int x, int y, const Vec3& g_rad, const Vec3& g_ncam,
                    const RenderOptions& options, GradBuffers& buf) {
    Ray ray = camera.pixel_ray(x, y);
    Hit hit;
    hit.valid = true;
    hit.face = rec.face;
    hit.u = rec.u;
    hit.v = rec.v;
    // t is not retained; only needed via the bary Jacobian, not the position.
    hit.t = 0;
    HitGeom g = hit_geometry(scene, hit, ray);
    Vec3 wo = -ray.dir;
    double cos_o_val = dot(wo, g.normal);

    J7 kd_j[3] = {J7::var(g.mat.kd.x, 0), J7::var(g.mat.kd.y, 1), J7::var(g.mat.kd.z, 2)};
    J7 ks_j = J7::var(g.mat.ks, 3);
    J7 n_j[3] = {J7::var(g.normal.x, 4), J7::var(g.normal.y, 5), J7::var(g.normal.z, 6)};

    std::array<double, 7> acc{};  // dL/d(kd, ks, unit normal)

    for (const SampleRecord& s : rec.samples) {
        if (!s.visible) continue;
        double cos_i_val = dot(s.dir, g.normal);
        if (cos_i_val <= 0 || cos_o_val <= 0) continue;
        double scale = s.mis_weight / (s.pdf * double(options.spp));
        Vec3 Lenv = scene.env->eval(s.dir);

        J7 cos_i = s.dir.x * n_j[0] + s.dir.y * n_j[1] + s.dir.z * n_j[2];
        J7 cos_o = wo.x * n_j[0] + wo.y * n_j[1] + wo.z * n_j[2];
        Vec3 half = normalize(s.dir + wo);
        J7 cos_h = half.x * n_j[0] + half.y * n_j[1] + half.z * n_j[2];
        J7 f[3];
        brdf_eval_core(kd_j, ks_j, cos_i, cos_o, cos_h, dot(half, wo), f);

        Vec3 f_cos_val{value(f[0]) * cos_i_val, value(f[1]) * cos_i_val,
                       value(f[2]) * cos_i_val};
        scene.env->eval_backward(s.dir, g_rad * f_cos_val * scale, buf.env);
        for (int c = 0; c < 3; ++c) {
            J7 contrib = f[c] * cos_i;
            double gc = g_rad[c] * Lenv[c] * scale;
            for (int k = 0; k < 7; ++k) acc[k] += gc * contrib.v[k];
        }
    }

    // Normal AOV chain: n_cam = R^T n_world.
    Vec3 dn{acc[4], acc[5], acc[6]};
    dn += camera.world_from_camera.R * g_ncam;

    // Through the normalization of the interpolated normal.
    double len = length(g.n_unnorm);
    Vec3 dn_unnorm{};
    if (len > 1e-12) {
        Vec3 y_hat = g.normal;
        dn_unnorm = (dn - y_hat * dot(y_hat, dn)) / len;
    }

    const auto& face = scene.mesh->faces[rec.face];
    const std::vector<Vec3>& normals = *scene.normals;
    const std::vector<Vec3>& canon = *scene.canonical;
    double du = 0, dv = 0;

    for (int k = 0; k < 3; ++k) buf.normal_adj[face[k]] += dn_unnorm * g.bary[k];
    du += dot(dn_unnorm, normals[face[1]] - normals[face[0]]);
    dv += dot(dn_unnorm, normals[face[2]] - normals[face[0]]);

    // Material lookup chain.
    Vec3 dkd{acc[0], acc[1], acc[2]};
    double dks = acc[3];
    std::vector<double> feature_grad(scene.material->feature_channels(), 0.0);
    MaterialGrid::Grads mg{&buf.mat_values, &buf.mat_blend};
    Vec3 dc = scene.material->query_backward(g.canonical, g.feature, dkd, dks, mg,
                                             &feature_grad);
    if (scene.feature_map) {
        sample_feature_backward(g.canonical, feature_grad, buf.feature, *scene.square);
        std::vector<double> dfdx, dfdy;
        sample_feature_spatial_grad(g.canonical, *scene.feature_map, *scene.square, dfdx,
                                    dfdy);
        for (size_t k = 0; k < feature_grad.size(); ++k) {
            dc.x += feature_grad[k] * dfdx[k];
            dc.y += feature_grad[k] * dfdy[k];
        }
    }
    for (int k = 0; k < 3; ++k) buf.canonical[face[k]] += dc * g.bary[k];
    du += dot(dc, canon[face[1]] - canon[face[0]]);
    dv += dot(dc, canon[face[2]] - canon[face[0]]);

    // Barycentric dependence on the posed vertices, ray held fixed. The hit
    // solves o + t d = (1-u-v) p0 + u p1 + v p2; the implicit function theorem
    // gives d(t,u,v)/dp_k = bary_k J^{-1} with J = [d, -(p1-p0), -(p2-p0)].
    if (du != 0 || dv != 0) {
        const Vec3& p0 = scene.mesh->vertices[face[0]];
        Vec3 e1 = scene.mesh->vertices[face[1]] - p0;
        Vec3 e2 = scene.mesh->vertices[face[2]] - p0;
        Mat3 J = Mat3::from_cols(ray.dir, -e1, -e2);
        if (std::abs(J.det()) > 1e-14) {
            Vec3 a = J.inverse().transposed() * Vec3{0, du, dv};
            for (int k = 0; k < 3; ++k) buf.vertex[face[k]] += a * g.bary[k];
        }
    }
}

}  // namespace

RenderGrads render_backward(const Scene& scene, const Camera& camera,
                            const RenderOutput& output, const Image& radiance_grads,
                            const Image* normal_grads, const RenderOptions& options) {
    check_scene(scene);
    int w = camera.width, h = camera.height;
    if (output.records.size() != size_t(w) * h)
        throw std::invalid_argument("render_backward: forward pass did not record samples");
    if (radiance_grads.width != w || radiance_grads.height != h ||
        radiance_grads.channels != 3)
        throw std::invalid_argument("render_backward: radiance grad shape mismatch");

    int n_chunks = parallel_chunk_count(0, h);
    std::vector<GradBuffers> partials;
    partials.reserve(n_chunks);
    for (int i = 0; i < n_chunks; ++i) partials.emplace_back(scene);

    parallel_chunks(0, h, [&](int64_t y0, int64_t y1, int chunk) {
        GradBuffers& buf = partials[chunk];
        for (int64_t y = y0; y < y1; ++y)
            for (int x = 0; x < w; ++x) {
                const PixelRecord& rec = output.records[size_t(y) * w + x];
                if (rec.face < 0) continue;
                const float* gr = radiance_grads.at(x, int(y));
                Vec3 g_rad{gr[0], gr[1], gr[2]};
                Vec3 g_ncam{};
                if (normal_grads) {
                    const float* gn = normal_grads->at(x, int(y));
                    g_ncam = {gn[0], gn[1], gn[2]};
                }
                if (length_sq(g_rad) == 0 && length_sq(g_ncam) == 0) continue;
                backward_pixel(scene, camera, rec, x, int(y), g_rad, g_ncam, options, buf);
            }
    });

    GradBuffers total = std::move(partials[0]);
    for (int i = 1; i < n_chunks; ++i) total.add(partials[i]);

    RenderGrads grads;
    grads.env = std::move(total.env);
    grads.mat_values = std::move(total.mat_values);
    grads.mat_blend = std::move(total.mat_blend);
    grads.feature = std::move(total.feature);
    grads.canonical = std::move(total.canonical);
    grads.vertex = std::move(total.vertex);
    vertex_normals_backward(*scene.mesh, total.normal_adj, grads.vertex);
    return grads;
}

}  // namespace mav
