#pragma once

#include <string>
#include <vector>

#include "mav/tetgrid.hpp"

namespace mav {

// Signed distance values on the tetrahedral grid vertices (negative inside).
// This dense, linearly interpolated field is the optimizable geometry
// representation.
struct SdfGrid {
    TetGrid grid;
    std::vector<double> values;

    SdfGrid() = default;
    explicit SdfGrid(TetGrid g)
        : grid(std::move(g)), values(grid.vertices.size(), 0.0) {}

    // Clamp magnitudes to the grid diagonal and reject non-finite values.
    void clamp_values();

    // Linear-in-tet interpolation; returns false when p is outside the bounds.
    bool sample(const Vec3& p, double* value, Vec3* gradient = nullptr) const;

    // Gradient of sample() w.r.t. the four tet corner values at p; fills
    // corner indices and weights. Returns false outside bounds.
    bool sample_backward(const Vec3& p, int corners[4], double value_weights[4],
                         Vec3 gradient_weights[4]) const;
};

// Fills values with the given analytic field.
template <typename F>
void fill_sdf(SdfGrid& sdf, F&& field) {
    for (size_t i = 0; i < sdf.grid.vertices.size(); ++i)
        sdf.values[i] = field(sdf.grid.vertices[i]);
}

// Binary checkpoint: magic, resolution, bounds, then little-endian float32
// values in x-fastest order.
void save_sdf(const std::string& path, const SdfGrid& sdf);
SdfGrid load_sdf(const std::string& path);

}  // namespace mav
