#include "mav/sdfgrid.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>
#include <stdexcept>

namespace mav {

namespace {

constexpr char kMagic[8] = {'M', 'A', 'V', 'S', 'D', 'F', '0', '1'};

// Locates the cube cell of p and returns the index of the containing tet within
// grid.tets, or -1 outside the bounds. Also outputs barycentric weights.
int locate_tet(const TetGrid& grid, const Vec3& p, double bary[4]) {
    if (!grid.bounds.contains(p)) return -1;
    int R = grid.resolution;
    Vec3 cell = grid.cell_size();
    int cx = std::min(int((p.x - grid.bounds.lo.x) / cell.x), R - 2);
    int cy = std::min(int((p.y - grid.bounds.lo.y) / cell.y), R - 2);
    int cz = std::min(int((p.z - grid.bounds.lo.z) / cell.z), R - 2);
    int cell_index = cx + (R - 1) * (cy + (R - 1) * cz);
    for (int t = 0; t < 6; ++t) {
        const auto& tet = grid.tets[size_t(cell_index) * 6 + t];
        const Vec3& p0 = grid.vertices[tet[0]];
        Mat3 M = Mat3::from_cols(grid.vertices[tet[1]] - p0, grid.vertices[tet[2]] - p0,
                                 grid.vertices[tet[3]] - p0);
        Vec3 b = M.inverse() * (p - p0);
        double b0 = 1.0 - b.x - b.y - b.z;
        if (b.x >= -1e-9 && b.y >= -1e-9 && b.z >= -1e-9 && b0 >= -1e-9) {
            bary[0] = b0;
            bary[1] = b.x;
            bary[2] = b.y;
            bary[3] = b.z;
            return cell_index * 6 + t;
        }
    }
    return -1;
}

}  // namespace

void SdfGrid::clamp_values() {
    double limit = grid.bounds.diagonal();
    for (double& v : values) {
        if (!std::isfinite(v)) throw std::runtime_error("SdfGrid contains non-finite values");
        v = std::clamp(v, -limit, limit);
    }
}

bool SdfGrid::sample(const Vec3& p, double* value, Vec3* gradient) const {
    double bary[4];
    int tet_index = locate_tet(grid, p, bary);
    if (tet_index < 0) return false;
    const auto& tet = grid.tets[tet_index];
    if (value) {
        *value = 0;
        for (int i = 0; i < 4; ++i) *value += bary[i] * values[tet[i]];
    }
    if (gradient) {
        const Vec3& p0 = grid.vertices[tet[0]];
        Mat3 M = Mat3::from_rows(grid.vertices[tet[1]] - p0, grid.vertices[tet[2]] - p0,
                                 grid.vertices[tet[3]] - p0);
        Vec3 d{values[tet[1]] - values[tet[0]], values[tet[2]] - values[tet[0]],
               values[tet[3]] - values[tet[0]]};
        *gradient = M.inverse() * d;
    }
    return true;
}

bool SdfGrid::sample_backward(const Vec3& p, int corners[4], double value_weights[4],
                              Vec3 gradient_weights[4]) const {
    double bary[4];
    int tet_index = locate_tet(grid, p, bary);
    if (tet_index < 0) return false;
    const auto& tet = grid.tets[tet_index];
    for (int i = 0; i < 4; ++i) {
        corners[i] = tet[i];
        value_weights[i] = bary[i];
    }
    if (gradient_weights) {
        const Vec3& p0 = grid.vertices[tet[0]];
        Mat3 M = Mat3::from_rows(grid.vertices[tet[1]] - p0, grid.vertices[tet[2]] - p0,
                                 grid.vertices[tet[3]] - p0);
        Mat3 Minv = M.inverse();
        // gradient = Minv * (s1-s0, s2-s0, s3-s0)
        gradient_weights[1] = Minv.col(0);
        gradient_weights[2] = Minv.col(1);
        gradient_weights[3] = Minv.col(2);
        gradient_weights[0] = -(gradient_weights[1] + gradient_weights[2] +
                                gradient_weights[3]);
    }
    return true;
}

void save_sdf(const std::string& path, const SdfGrid& sdf) {
    std::unique_ptr<FILE, int (*)(FILE*)> f(std::fopen(path.c_str(), "wb"), std::fclose);
    if (!f) throw std::runtime_error("save_sdf: cannot open " + path);
    std::fwrite(kMagic, 1, 8, f.get());
    int32_t R = sdf.grid.resolution;
    std::fwrite(&R, 4, 1, f.get());
    double box[6] = {sdf.grid.bounds.lo.x, sdf.grid.bounds.lo.y, sdf.grid.bounds.lo.z,
                     sdf.grid.bounds.hi.x, sdf.grid.bounds.hi.y, sdf.grid.bounds.hi.z};
    std::fwrite(box, 8, 6, f.get());
    std::vector<float> vals(sdf.values.begin(), sdf.values.end());
    if (std::fwrite(vals.data(), 4, vals.size(), f.get()) != vals.size())
        throw std::runtime_error("save_sdf: short write to " + path);
}

SdfGrid load_sdf(const std::string& path) {
    std::unique_ptr<FILE, int (*)(FILE*)> f(std::fopen(path.c_str(), "rb"), std::fclose);
    if (!f) throw std::runtime_error("load_sdf: cannot open " + path);
    char magic[8];
    if (std::fread(magic, 1, 8, f.get()) != 8 || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("load_sdf: bad magic in " + path);
    int32_t R;
    double box[6];
    if (std::fread(&R, 4, 1, f.get()) != 1 || std::fread(box, 8, 6, f.get()) != 6)
        throw std::runtime_error("load_sdf: truncated header in " + path);
    Box3 bounds{{box[0], box[1], box[2]}, {box[3], box[4], box[5]}};
    SdfGrid sdf(build_grid(R, bounds));
    std::vector<float> vals(sdf.values.size());
    if (std::fread(vals.data(), 4, vals.size(), f.get()) != vals.size())
        throw std::runtime_error("load_sdf: truncated values in " + path);
    for (size_t i = 0; i < vals.size(); ++i) sdf.values[i] = vals[i];
    return sdf;
}

}  // namespace mav
