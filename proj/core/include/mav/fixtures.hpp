#pragma once

#include <string>

#include "mav/config.hpp"
#include "mav/dataset.hpp"
#include "mav/envmap.hpp"
#include "mav/material.hpp"
#include "mav/mesh.hpp"

namespace mav {

// Synthetic capsule-body dataset rendered with this repo's own renderer, so
// the whole pipeline can run without external data. Ground-truth material and
// lighting are also written (material_gt.bin, env_gt.pfm) for evaluations.
struct FixtureOptions {
    std::string out_dir;
    int views = 4;
    int frames = 2;
    int image_size = 64;
    int spp = 64;
    uint64_t seed = 0;
};

// Returns the manifest path; also writes a ready-to-run config.json next to it.
std::string make_fixtures(const FixtureOptions& options);

// Unit-ish sphere mesh via the isosurface extractor.
TriMesh make_sphere_mesh(double radius, int resolution);

// Two-tone albedo split at canonical x = 0, uniform roughness. Grid values are
// set to the pre-squash logits of the target colors; blend head stays zero.
void fill_two_tone_material(MaterialGrid& grid, const Vec3& kd_neg, const Vec3& kd_pos,
                            double roughness);

// Smooth directional sky: brighter toward +y with a warm/cool horizon tint.
EnvMap make_gradient_env(int width, int height);

}  // namespace mav
