#pragma once

#include <vector>

#include "mav/image.hpp"
#include "mav/mesh.hpp"
#include "mav/vecmath.hpp"

namespace mav {

// Square texture domain over the canonical (x, y) extent of the template.
// Shared by position maps, offset maps and the feature map so texel lookups by
// canonical coordinate agree everywhere.
struct CanonicalSquare {
    double min_x = 0, min_y = 0;
    double size = 1;

    static CanonicalSquare fit(const Box3& canonical_bounds, double pad = 0.02);

    // Continuous texel coordinates for a map of the given resolution.
    Vec2 to_texture(double cx, double cy, int width, int height) const {
        return {(cx - min_x) / size * width - 0.5, (cy - min_y) / size * height - 0.5};
    }
};

// Orthographic position maps: texel (x, y) of the canonical square stores the
// POSED coordinate of the front-most (resp. back-most) surface point along the
// canonical z axis.
struct PositionMaps {
    Image front;  // H x W x 3, posed coordinates (meters)
    Image back;
    Image front_mask;  // H x W x 1, 1 = valid
    Image back_mask;
    CanonicalSquare square;
};

// Rasterizes the posed template orthographically over the canonical square.
// Front/back facing is decided by the canonical face normal z sign. Throws when
// nothing projects into the square.
PositionMaps render_position_maps(const std::vector<Vec3>& canonical_vertices,
                                  const std::vector<Vec3>& posed_vertices,
                                  const std::vector<std::array<int, 3>>& faces,
                                  const CanonicalSquare& square, int resolution);

}  // namespace mav
