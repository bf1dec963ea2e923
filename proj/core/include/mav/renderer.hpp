#pragma once

#include <vector>

#include "mav/bvh.hpp"
#include "mav/camera.hpp"
#include "mav/detailmaps.hpp"
#include "mav/envmap.hpp"
#include "mav/image.hpp"
#include "mav/material.hpp"
#include "mav/mesh.hpp"

namespace mav {

// Immutable view of everything a render needs. `canonical` (same length as
// mesh vertices) is where material and feature lookups happen; pass the posed
// positions for rigid scenes. `feature_map`/`square` are optional; without
// them the material sees a zero feature.
struct Scene {
    const TriMesh* mesh = nullptr;
    const Bvh* bvh = nullptr;
    const std::vector<Vec3>* normals = nullptr;  // unit vertex normals
    const std::vector<Vec3>* canonical = nullptr;
    const MaterialGrid* material = nullptr;
    const EnvMap* env = nullptr;
    const EnvCdf* env_cdf = nullptr;
    const ParamMap* feature_map = nullptr;
    const CanonicalSquare* square = nullptr;
};

// LightOnly and BrdfOnly exist for the gradient checks, where a single frozen
// sampling distribution keeps finite differences honest. Mis is the default.
enum class SampleStrategy { LightOnly, BrdfOnly, Mis };

struct RenderOptions {
    int spp = 64;
    uint64_t seed = 0;
    uint64_t step = 0;
    SampleStrategy strategy = SampleStrategy::Mis;
    bool shadows = true;
    bool record_samples = false;  // required for render_backward
};

// One retained incident-light sample; everything the backward pass needs to
// treat the sampling decisions as constants.
struct SampleRecord {
    Vec3 dir;
    double pdf = 0;
    double mis_weight = 0;
    bool visible = false;
};

struct PixelRecord {
    int face = -1;
    double u = 0, v = 0;  // barycentrics of vertices 1 and 2
    std::vector<SampleRecord> samples;
};

struct RenderOutput {
    Image radiance;  // linear HDR, 3ch
    Image normal;    // camera-space unit vectors on covered pixels, 3ch
    Image depth;     // camera-space z, 1ch
    Image mask;      // 1ch coverage
    Image albedo;    // k_d AOV, 3ch
    std::vector<PixelRecord> records;  // per pixel, when recorded
    double render_seconds = 0;
};

RenderOutput render_image(const Scene& scene, const Camera& camera,
                          const RenderOptions& options);

// Direct lighting at a found hit; exposed for tests.
Vec3 shade_pixel(const Scene& scene, const Hit& hit, const Ray& primary,
                 const RenderOptions& options, uint64_t pixel_index,
                 PixelRecord* record = nullptr);

struct RenderGrads {
    std::vector<double> env;         // layout of EnvMap::radiance
    std::vector<double> mat_values;  // layout of MaterialGrid::values()
    std::vector<double> mat_blend;   // layout of MaterialGrid::blend_weights()
    ParamMap feature;                // grad of the feature map (empty when unused)
    std::vector<Vec3> vertex;        // dL/d(posed vertex positions)
    std::vector<Vec3> canonical;     // dL/d(canonical vertex coords), lookup chain only
};

// Reparameterized backward pass: replays the retained samples with directions,
// pdfs, MIS weights and visibility held fixed, and differentiates the
// integrand analytically. `radiance_grads` is dL/d(radiance image);
// `normal_grads` (optional) is dL/d(camera-space normal AOV). Throws when the
// forward pass did not record samples.
RenderGrads render_backward(const Scene& scene, const Camera& camera,
                            const RenderOutput& output, const Image& radiance_grads,
                            const Image* normal_grads, const RenderOptions& options);

}  // namespace mav
