#include "mav/eikonal.hpp"

#include <cmath>

#include "mav/marching_tet.hpp"
#include "mav/rng.hpp"

namespace mav {

EikonalResult eikonal_loss(const SdfGrid& sdf, const std::vector<Vec3>& samples) {
    EikonalResult result;
    result.value_grads.assign(sdf.values.size(), 0.0);

    for (const Vec3& p : samples) {
        int corners[4];
        double weights[4];
        Vec3 grad_weights[4];
        if (!sdf.sample_backward(p, corners, weights, grad_weights)) {
            ++result.skipped;
            continue;
        }
        Vec3 g{};
        for (int i = 0; i < 4; ++i) g += grad_weights[i] * sdf.values[corners[i]];
        double norm = length(g);
        double diff = norm - 1.0;
        result.loss += diff * diff;
        if (norm > 1e-12) {
            Vec3 dldg = g * (2.0 * diff / norm);
            for (int i = 0; i < 4; ++i)
                result.value_grads[corners[i]] += dot(dldg, grad_weights[i]);
        }
        ++result.accepted;
    }
    if (result.accepted > 0) {
        result.loss /= result.accepted;
        for (double& g : result.value_grads) g /= result.accepted;
    } else {
        result.loss = 0;
    }
    return result;
}

std::vector<Vec3> eikonal_samples(const SdfGrid& sdf, int count, uint64_t seed,
                                  uint64_t step) {
    Rng rng = Rng::keyed(seed, 0x4e1c, 0, step);
    std::vector<Vec3> samples;
    samples.reserve(count);

    ExtractedMesh surface = marching_tetrahedra(sdf);
    double jitter = sdf.grid.cell_size().x;

    for (int i = 0; i < count; ++i) {
        bool near_surface = !surface.vertices.empty() && rng.uniform() < 0.5;
        if (near_surface) {
            const Vec3& v = surface.vertices[rng.uniform_index(
                uint32_t(surface.vertices.size()))];
            samples.push_back(v + Vec3{rng.gaussian(), rng.gaussian(), rng.gaussian()} *
                                      jitter);
        } else {
            samples.push_back(rng.in_box(sdf.grid.bounds));
        }
    }
    return samples;
}

}  // namespace mav
