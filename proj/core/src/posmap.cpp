#include "mav/posmap.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mav {

CanonicalSquare CanonicalSquare::fit(const Box3& canonical_bounds, double pad) {
    CanonicalSquare sq;
    Vec3 e = canonical_bounds.extent();
    sq.size = std::max(e.x, e.y) + 2 * pad;
    Vec3 c = canonical_bounds.center();
    sq.min_x = c.x - sq.size / 2;
    sq.min_y = c.y - sq.size / 2;
    return sq;
}

PositionMaps render_position_maps(const std::vector<Vec3>& canonical_vertices,
                                  const std::vector<Vec3>& posed_vertices,
                                  const std::vector<std::array<int, 3>>& faces,
                                  const CanonicalSquare& square, int resolution) {
    if (canonical_vertices.size() != posed_vertices.size())
        throw std::invalid_argument("render_position_maps: vertex count mismatch");

    PositionMaps maps;
    maps.square = square;
    maps.front = Image(resolution, resolution, 3);
    maps.back = Image(resolution, resolution, 3);
    maps.front_mask = Image(resolution, resolution, 1);
    maps.back_mask = Image(resolution, resolution, 1);

    // Depth buffers in canonical z; front keeps the max, back the min.
    std::vector<double> front_z(size_t(resolution) * resolution, -1e30);
    std::vector<double> back_z(size_t(resolution) * resolution, 1e30);

    int covered = 0;
    for (const auto& f : faces) {
        const Vec3& c0 = canonical_vertices[f[0]];
        const Vec3& c1 = canonical_vertices[f[1]];
        const Vec3& c2 = canonical_vertices[f[2]];
        Vec3 n = cross(c1 - c0, c2 - c0);
        bool front_facing = n.z > 0;

        // Texel-space 2D triangle over canonical (x, y).
        Vec2 t0 = square.to_texture(c0.x, c0.y, resolution, resolution);
        Vec2 t1 = square.to_texture(c1.x, c1.y, resolution, resolution);
        Vec2 t2 = square.to_texture(c2.x, c2.y, resolution, resolution);

        double area = (t1.x - t0.x) * (t2.y - t0.y) - (t2.x - t0.x) * (t1.y - t0.y);
        if (std::abs(area) < 1e-12) continue;

        int xmin = std::max(0, int(std::floor(std::min({t0.x, t1.x, t2.x}))));
        int xmax = std::min(resolution - 1, int(std::ceil(std::max({t0.x, t1.x, t2.x}))));
        int ymin = std::max(0, int(std::floor(std::min({t0.y, t1.y, t2.y}))));
        int ymax = std::min(resolution - 1, int(std::ceil(std::max({t0.y, t1.y, t2.y}))));

        for (int py = ymin; py <= ymax; ++py) {
            for (int px = xmin; px <= xmax; ++px) {
                double b1 = ((px - t0.x) * (t2.y - t0.y) - (t2.x - t0.x) * (py - t0.y)) / area;
                double b2 = ((t1.x - t0.x) * (py - t0.y) - (px - t0.x) * (t1.y - t0.y)) / area;
                double b0 = 1 - b1 - b2;
                if (b0 < -1e-9 || b1 < -1e-9 || b2 < -1e-9) continue;
                double z = b0 * c0.z + b1 * c1.z + b2 * c2.z;
                Vec3 posed = posed_vertices[f[0]] * b0 + posed_vertices[f[1]] * b1 +
                             posed_vertices[f[2]] * b2;
                size_t idx = size_t(py) * resolution + px;
                if (front_facing) {
                    if (z > front_z[idx]) {
                        front_z[idx] = z;
                        float* dst = maps.front.at(px, py);
                        dst[0] = float(posed.x);
                        dst[1] = float(posed.y);
                        dst[2] = float(posed.z);
                        if (maps.front_mask.at(px, py)[0] == 0.f) {
                            maps.front_mask.at(px, py)[0] = 1.f;
                            ++covered;
                        }
                    }
                } else {
                    if (z < back_z[idx]) {
                        back_z[idx] = z;
                        float* dst = maps.back.at(px, py);
                        dst[0] = float(posed.x);
                        dst[1] = float(posed.y);
                        dst[2] = float(posed.z);
                        if (maps.back_mask.at(px, py)[0] == 0.f) {
                            maps.back_mask.at(px, py)[0] = 1.f;
                            ++covered;
                        }
                    }
                }
            }
        }
    }
    if (covered == 0)
        throw std::runtime_error("render_position_maps: empty projection");
    return maps;
}

}  // namespace mav
