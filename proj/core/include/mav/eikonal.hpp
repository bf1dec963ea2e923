#pragma once

#include <vector>

#include "mav/sdfgrid.hpp"

namespace mav {

struct EikonalResult {
    double loss = 0;                 // mean over accepted samples of (|grad S| - 1)^2
    std::vector<double> value_grads; // dL/d(field values)
    int skipped = 0;                 // samples outside the bounds
    int accepted = 0;
};

// Field gradient is evaluated per containing tet (exact for linear-in-tet
// interpolation). Samples outside the bounds are skipped and counted.
EikonalResult eikonal_loss(const SdfGrid& sdf, const std::vector<Vec3>& samples);

// Draws the documented sample mix: 50% uniform in the bounds, 50% jittered
// around the current zero level set (surface vertices + gaussian offsets of one
// cell). Falls back to uniform when the surface is empty.
std::vector<Vec3> eikonal_samples(const SdfGrid& sdf, int count, uint64_t seed,
                                  uint64_t step);

}  // namespace mav
