#include "mav/material.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>
#include <stdexcept>

namespace mav {

namespace {

constexpr char kMagic[8] = {'M', 'A', 'V', 'M', 'A', 'T', '0', '1'};

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct Trilinear {
    int corner[8];
    double weight[8];
    Vec3 dweight[8];  // d(weight)/d(point), meters
};

Trilinear locate(int R, const Box3& bounds, const Vec3& p, bool* clamped) {
    Vec3 e = bounds.extent();
    double coords[3] = {(p.x - bounds.lo.x) / e.x * (R - 1),
                        (p.y - bounds.lo.y) / e.y * (R - 1),
                        (p.z - bounds.lo.z) / e.z * (R - 1)};
    double scale[3] = {(R - 1) / e.x, (R - 1) / e.y, (R - 1) / e.z};
    if (clamped) *clamped = false;
    int cell[3];
    double frac[3];
    bool border[3];
    for (int a = 0; a < 3; ++a) {
        border[a] = false;
        if (coords[a] < 0 || coords[a] > R - 1) {
            coords[a] = std::clamp(coords[a], 0.0, double(R - 1));
            border[a] = true;
            if (clamped) *clamped = true;
        }
        cell[a] = std::min(int(coords[a]), R - 2);
        frac[a] = coords[a] - cell[a];
    }
    Trilinear t;
    for (int c = 0; c < 8; ++c) {
        int ix = cell[0] + (c & 1);
        int iy = cell[1] + ((c >> 1) & 1);
        int iz = cell[2] + ((c >> 2) & 1);
        t.corner[c] = ix + R * (iy + R * iz);
        double wx = (c & 1) ? frac[0] : 1 - frac[0];
        double wy = ((c >> 1) & 1) ? frac[1] : 1 - frac[1];
        double wz = ((c >> 2) & 1) ? frac[2] : 1 - frac[2];
        t.weight[c] = wx * wy * wz;
        double dx = border[0] ? 0 : ((c & 1) ? 1.0 : -1.0) * scale[0] * wy * wz;
        double dy = border[1] ? 0 : (((c >> 1) & 1) ? 1.0 : -1.0) * scale[1] * wx * wz;
        double dz = border[2] ? 0 : (((c >> 2) & 1) ? 1.0 : -1.0) * scale[2] * wx * wy;
        t.dweight[c] = {dx, dy, dz};
    }
    return t;
}

}  // namespace

MaterialGrid::MaterialGrid(int resolution, const Box3& bounds, int feature_channels)
    : resolution_(resolution), bounds_(bounds), feature_channels_(feature_channels) {
    if (resolution < 2) throw std::invalid_argument("MaterialGrid: resolution must be >= 2");
    if (!bounds.valid()) throw std::invalid_argument("MaterialGrid: degenerate bounds");
    size_t nodes = size_t(resolution) * resolution * resolution;
    values_.assign(nodes * kChannels, 0.0);
    blend_.assign(size_t(kChannels) * feature_channels, 0.0);
}

void MaterialGrid::raw_params(const Vec3& point, const std::vector<double>& feature,
                              double u[4], bool* clamped) const {
    Trilinear t = locate(resolution_, bounds_, point, clamped);
    for (int ch = 0; ch < kChannels; ++ch) u[ch] = 0;
    for (int c = 0; c < 8; ++c) {
        const double* node = values_.data() + size_t(t.corner[c]) * kChannels;
        for (int ch = 0; ch < kChannels; ++ch) u[ch] += t.weight[c] * node[ch];
    }
    for (int ch = 0; ch < kChannels; ++ch)
        for (int fc = 0; fc < feature_channels_; ++fc)
            u[ch] += blend_[size_t(ch) * feature_channels_ + fc] * feature[fc];
}

MaterialSample MaterialGrid::query(const Vec3& point, const std::vector<double>& feature,
                                   bool* clamped) const {
    if (int(feature.size()) != feature_channels_)
        throw std::invalid_argument("MaterialGrid::query: feature size mismatch");
    double u[4];
    raw_params(point, feature, u, clamped);
    MaterialSample mat;
    mat.kd = {sigmoid(u[0]), sigmoid(u[1]), sigmoid(u[2])};
    mat.ks = kRoughnessFloor + (1.0 - kRoughnessFloor) * sigmoid(u[3]);
    return mat;
}

Vec3 MaterialGrid::query_backward(const Vec3& point, const std::vector<double>& feature,
                                  const Vec3& kd_grad, double ks_grad, Grads grads,
                                  std::vector<double>* feature_grad) const {
    double u[4];
    raw_params(point, feature, u, nullptr);
    // dL/du through the squash.
    double du[4];
    for (int ch = 0; ch < 3; ++ch) {
        double s = sigmoid(u[ch]);
        du[ch] = kd_grad[ch] * s * (1 - s);
    }
    {
        double s = sigmoid(u[3]);
        du[3] = ks_grad * (1.0 - kRoughnessFloor) * s * (1 - s);
    }

    Trilinear t = locate(resolution_, bounds_, point, nullptr);
    Vec3 point_grad{};
    for (int c = 0; c < 8; ++c) {
        const double* node = values_.data() + size_t(t.corner[c]) * kChannels;
        double node_dot = 0;
        for (int ch = 0; ch < kChannels; ++ch) {
            if (grads.values)
                (*grads.values)[size_t(t.corner[c]) * kChannels + ch] +=
                    du[ch] * t.weight[c];
            node_dot += du[ch] * node[ch];
        }
        point_grad += t.dweight[c] * node_dot;
    }
    for (int ch = 0; ch < kChannels; ++ch)
        for (int fc = 0; fc < feature_channels_; ++fc) {
            if (grads.blend)
                (*grads.blend)[size_t(ch) * feature_channels_ + fc] += du[ch] * feature[fc];
            if (feature_grad)
                (*feature_grad)[fc] += du[ch] * blend_[size_t(ch) * feature_channels_ + fc];
        }
    return point_grad;
}

double material_smoothness_loss(const MaterialGrid& grid,
                                const std::vector<Vec3>& surface_samples,
                                const std::vector<Vec3>& epsilon_offsets,
                                const std::vector<std::vector<double>>& features) {
    if (surface_samples.empty()) return 0;
    double loss = 0;
    for (size_t i = 0; i < surface_samples.size(); ++i) {
        MaterialSample a = grid.query(surface_samples[i], features[i]);
        MaterialSample b = grid.query(surface_samples[i] + epsilon_offsets[i], features[i]);
        for (int c = 0; c < 3; ++c) loss += std::abs(a.kd[c] - b.kd[c]);
        loss += std::abs(a.ks - b.ks);
    }
    return loss / double(surface_samples.size());
}

void material_smoothness_backward(const MaterialGrid& grid,
                                  const std::vector<Vec3>& surface_samples,
                                  const std::vector<Vec3>& epsilon_offsets,
                                  const std::vector<std::vector<double>>& features,
                                  double upstream, MaterialGrid::Grads grads) {
    if (surface_samples.empty()) return;
    double scale = upstream / double(surface_samples.size());
    for (size_t i = 0; i < surface_samples.size(); ++i) {
        MaterialSample a = grid.query(surface_samples[i], features[i]);
        MaterialSample b = grid.query(surface_samples[i] + epsilon_offsets[i], features[i]);
        Vec3 kd_sign{};
        for (int c = 0; c < 3; ++c)
            kd_sign[c] = a.kd[c] > b.kd[c] ? scale : (a.kd[c] < b.kd[c] ? -scale : 0.0);
        double ks_sign = a.ks > b.ks ? scale : (a.ks < b.ks ? -scale : 0.0);
        grid.query_backward(surface_samples[i], features[i], kd_sign, ks_sign, grads);
        grid.query_backward(surface_samples[i] + epsilon_offsets[i], features[i],
                            -kd_sign, -ks_sign, grads);
    }
}

void MaterialGrid::save(const std::string& path) const {
    std::unique_ptr<FILE, int (*)(FILE*)> f(std::fopen(path.c_str(), "wb"), std::fclose);
    if (!f) throw std::runtime_error("MaterialGrid::save: cannot open " + path);
    std::fwrite(kMagic, 1, 8, f.get());
    int32_t header[2] = {resolution_, feature_channels_};
    std::fwrite(header, 4, 2, f.get());
    double box[6] = {bounds_.lo.x, bounds_.lo.y, bounds_.lo.z,
                     bounds_.hi.x, bounds_.hi.y, bounds_.hi.z};
    std::fwrite(box, 8, 6, f.get());
    std::vector<float> vals(values_.begin(), values_.end());
    std::fwrite(vals.data(), 4, vals.size(), f.get());
    std::vector<float> blend(blend_.begin(), blend_.end());
    if (std::fwrite(blend.data(), 4, blend.size(), f.get()) != blend.size())
        throw std::runtime_error("MaterialGrid::save: short write to " + path);
}

MaterialGrid MaterialGrid::load(const std::string& path) {
    std::unique_ptr<FILE, int (*)(FILE*)> f(std::fopen(path.c_str(), "rb"), std::fclose);
    if (!f) throw std::runtime_error("MaterialGrid::load: cannot open " + path);
    char magic[8];
    if (std::fread(magic, 1, 8, f.get()) != 8 || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("MaterialGrid::load: bad magic in " + path);
    int32_t header[2];
    double box[6];
    if (std::fread(header, 4, 2, f.get()) != 2 || std::fread(box, 8, 6, f.get()) != 6)
        throw std::runtime_error("MaterialGrid::load: truncated header in " + path);
    MaterialGrid grid(header[0], Box3{{box[0], box[1], box[2]}, {box[3], box[4], box[5]}},
                      header[1]);
    std::vector<float> vals(grid.values_.size());
    std::vector<float> blend(grid.blend_.size());
    if (std::fread(vals.data(), 4, vals.size(), f.get()) != vals.size() ||
        std::fread(blend.data(), 4, blend.size(), f.get()) != blend.size())
        throw std::runtime_error("MaterialGrid::load: truncated data in " + path);
    grid.values_.assign(vals.begin(), vals.end());
    grid.blend_.assign(blend.begin(), blend.end());
    return grid;
}

}  // namespace mav
