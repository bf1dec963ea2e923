#include "mav/tetgrid.hpp"

#include <stdexcept>

namespace mav {

namespace {

// Six tets covering the unit cube, all sharing the body diagonal 0-7.
// Corner bit order: bit0 = x, bit1 = y, bit2 = z.
constexpr int kCubeTets[6][4] = {
    {0, 1, 3, 7}, {0, 3, 2, 7}, {0, 2, 6, 7},
    {0, 6, 4, 7}, {0, 4, 5, 7}, {0, 5, 1, 7},
};

}  // namespace

TetGrid build_grid(int resolution, const Box3& bounds) {
    if (resolution < 2) throw std::invalid_argument("build_grid: resolution must be >= 2");
    if (!bounds.valid()) throw std::invalid_argument("build_grid: degenerate bounds");

    TetGrid grid;
    grid.resolution = resolution;
    grid.bounds = bounds;

    int R = resolution;
    grid.vertices.reserve(size_t(R) * R * R);
    Vec3 e = bounds.extent();
    for (int z = 0; z < R; ++z)
        for (int y = 0; y < R; ++y)
            for (int x = 0; x < R; ++x)
                grid.vertices.push_back({bounds.lo.x + e.x * x / (R - 1),
                                         bounds.lo.y + e.y * y / (R - 1),
                                         bounds.lo.z + e.z * z / (R - 1)});

    grid.tets.reserve(size_t(6) * (R - 1) * (R - 1) * (R - 1));
    for (int z = 0; z < R - 1; ++z)
        for (int y = 0; y < R - 1; ++y)
            for (int x = 0; x < R - 1; ++x) {
                int corner[8];
                for (int c = 0; c < 8; ++c)
                    corner[c] = grid.vertex_index(x + (c & 1), y + ((c >> 1) & 1),
                                                  z + ((c >> 2) & 1));
                for (const auto& t : kCubeTets) {
                    std::array<int, 4> tet = {corner[t[0]], corner[t[1]], corner[t[2]],
                                              corner[t[3]]};
                    const Vec3& p0 = grid.vertices[tet[0]];
                    double vol = dot(cross(grid.vertices[tet[1]] - p0,
                                           grid.vertices[tet[2]] - p0),
                                     grid.vertices[tet[3]] - p0);
                    if (vol < 0) std::swap(tet[1], tet[2]);
                    grid.tets.push_back(tet);
                }
            }
    return grid;
}

}  // namespace mav
