#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mav/vecmath.hpp"

namespace mav {

// Regular tetrahedral grid: R^3 vertices on an axis-aligned box, 6 tets per
// cube via the standard body-diagonal split. Vertex order is x-fastest.
struct TetGrid {
    int resolution = 0;
    Box3 bounds;
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 4>> tets;  // positive signed volume

    int vertex_index(int x, int y, int z) const {
        return x + resolution * (y + resolution * z);
    }
    Vec3 cell_size() const {
        double s = 1.0 / (resolution - 1);
        Vec3 e = bounds.extent();
        return {e.x * s, e.y * s, e.z * s};
    }
};

// Throws std::invalid_argument for resolution < 2 or degenerate bounds.
TetGrid build_grid(int resolution, const Box3& bounds);

}  // namespace mav
