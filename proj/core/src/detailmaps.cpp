#include "mav/detailmaps.hpp"

#include <cmath>
#include <stdexcept>

namespace mav {

Image ParamMap::to_image() const {
    Image img(width, height, channels);
    for (size_t i = 0; i < data.size(); ++i) img.data[i] = float(data[i]);
    return img;
}

ParamMap ParamMap::from_image(const Image& img) {
    ParamMap map(img.width, img.height, img.channels);
    for (size_t i = 0; i < img.data.size(); ++i) map.data[i] = img.data[i];
    return map;
}

BilinearFootprint bilinear_footprint(const ParamMap& map, double tx, double ty) {
    // Border clamp.
    tx = std::clamp(tx, 0.0, double(map.width - 1));
    ty = std::clamp(ty, 0.0, double(map.height - 1));
    BilinearFootprint fp;
    fp.x0 = std::min(int(tx), map.width - 2 >= 0 ? map.width - 2 : 0);
    fp.y0 = std::min(int(ty), map.height - 2 >= 0 ? map.height - 2 : 0);
    fp.x1 = std::min(fp.x0 + 1, map.width - 1);
    fp.y1 = std::min(fp.y0 + 1, map.height - 1);
    fp.fx = tx - fp.x0;
    fp.fy = ty - fp.y0;
    fp.w00 = (1 - fp.fx) * (1 - fp.fy);
    fp.w10 = fp.fx * (1 - fp.fy);
    fp.w01 = (1 - fp.fx) * fp.fy;
    fp.w11 = fp.fx * fp.fy;
    return fp;
}

void bilinear_sample(const ParamMap& map, double tx, double ty, double* out) {
    BilinearFootprint fp = bilinear_footprint(map, tx, ty);
    const double* p00 = map.at(fp.x0, fp.y0);
    const double* p10 = map.at(fp.x1, fp.y0);
    const double* p01 = map.at(fp.x0, fp.y1);
    const double* p11 = map.at(fp.x1, fp.y1);
    for (int c = 0; c < map.channels; ++c)
        out[c] = fp.w00 * p00[c] + fp.w10 * p10[c] + fp.w01 * p01[c] + fp.w11 * p11[c];
}

void bilinear_spatial_grad(const ParamMap& map, double tx, double ty, double* dtx,
                           double* dty) {
    BilinearFootprint fp = bilinear_footprint(map, tx, ty);
    const double* p00 = map.at(fp.x0, fp.y0);
    const double* p10 = map.at(fp.x1, fp.y0);
    const double* p01 = map.at(fp.x0, fp.y1);
    const double* p11 = map.at(fp.x1, fp.y1);
    bool interior_x = tx > 0 && tx < map.width - 1;
    bool interior_y = ty > 0 && ty < map.height - 1;
    for (int c = 0; c < map.channels; ++c) {
        dtx[c] = interior_x
                     ? (1 - fp.fy) * (p10[c] - p00[c]) + fp.fy * (p11[c] - p01[c])
                     : 0.0;
        dty[c] = interior_y
                     ? (1 - fp.fx) * (p01[c] - p00[c]) + fp.fx * (p11[c] - p10[c])
                     : 0.0;
    }
}

void bilinear_backward(ParamMap& grad_map, double tx, double ty,
                       const double* channel_grads) {
    BilinearFootprint fp = bilinear_footprint(grad_map, tx, ty);
    double* p00 = grad_map.at(fp.x0, fp.y0);
    double* p10 = grad_map.at(fp.x1, fp.y0);
    double* p01 = grad_map.at(fp.x0, fp.y1);
    double* p11 = grad_map.at(fp.x1, fp.y1);
    for (int c = 0; c < grad_map.channels; ++c) {
        p00[c] += fp.w00 * channel_grads[c];
        p10[c] += fp.w10 * channel_grads[c];
        p01[c] += fp.w01 * channel_grads[c];
        p11[c] += fp.w11 * channel_grads[c];
    }
}

void DetailMaps::clamp_offsets(double max_norm) {
    for (ParamMap* map : {&offsets_front, &offsets_back}) {
        for (size_t i = 0; i + 2 < map->data.size() + 1; i += 3) {
            double nx = map->data[i], ny = map->data[i + 1], nz = map->data[i + 2];
            double norm = std::sqrt(nx * nx + ny * ny + nz * nz);
            if (norm > max_norm) {
                double s = max_norm / norm;
                map->data[i] *= s;
                map->data[i + 1] *= s;
                map->data[i + 2] *= s;
            }
        }
    }
}

Vec3 sample_offsets(const Vec3& canonical, const DetailMaps& maps,
                    const CanonicalSquare& square) {
    const ParamMap& map = canonical.z > 0 ? maps.offsets_front : maps.offsets_back;
    Vec2 t = square.to_texture(canonical.x, canonical.y, map.width, map.height);
    double out[3];
    bilinear_sample(map, t.x, t.y, out);
    return {out[0], out[1], out[2]};
}

void sample_offsets_backward(const Vec3& canonical, const Vec3& offset_grad,
                             DetailMaps& grad_maps, const CanonicalSquare& square) {
    ParamMap& map = canonical.z > 0 ? grad_maps.offsets_front : grad_maps.offsets_back;
    Vec2 t = square.to_texture(canonical.x, canonical.y, map.width, map.height);
    double g[3] = {offset_grad.x, offset_grad.y, offset_grad.z};
    bilinear_backward(map, t.x, t.y, g);
}

void sample_offsets_spatial_grad(const Vec3& canonical, const DetailMaps& maps,
                                 const CanonicalSquare& square, Vec3& ddx, Vec3& ddy) {
    const ParamMap& map = canonical.z > 0 ? maps.offsets_front : maps.offsets_back;
    Vec2 t = square.to_texture(canonical.x, canonical.y, map.width, map.height);
    double dtx[3], dty[3];
    bilinear_spatial_grad(map, t.x, t.y, dtx, dty);
    double sx = map.width / square.size;
    double sy = map.height / square.size;
    ddx = Vec3{dtx[0], dtx[1], dtx[2]} * sx;
    ddy = Vec3{dty[0], dty[1], dty[2]} * sy;
}

std::vector<double> sample_feature(const Vec3& canonical, const ParamMap& feature,
                                   const CanonicalSquare& square) {
    Vec2 t = square.to_texture(canonical.x, canonical.y, feature.width, feature.height);
    std::vector<double> out(feature.channels);
    bilinear_sample(feature, t.x, t.y, out.data());
    return out;
}

void sample_feature_backward(const Vec3& canonical, const std::vector<double>& grad,
                             ParamMap& grad_feature, const CanonicalSquare& square) {
    Vec2 t = square.to_texture(canonical.x, canonical.y, grad_feature.width,
                               grad_feature.height);
    bilinear_backward(grad_feature, t.x, t.y, grad.data());
}

void sample_feature_spatial_grad(const Vec3& canonical, const ParamMap& feature,
                                 const CanonicalSquare& square, std::vector<double>& dx,
                                 std::vector<double>& dy) {
    Vec2 t = square.to_texture(canonical.x, canonical.y, feature.width, feature.height);
    dx.resize(feature.channels);
    dy.resize(feature.channels);
    bilinear_spatial_grad(feature, t.x, t.y, dx.data(), dy.data());
    // Chain texel coords back to canonical meters.
    double sx = feature.width / square.size;
    double sy = feature.height / square.size;
    for (int c = 0; c < feature.channels; ++c) {
        dx[c] *= sx;
        dy[c] *= sy;
    }
}

double offset_reg(const std::vector<Vec3>& offsets) {
    if (offsets.empty()) return 0;
    double sum = 0;
    for (const Vec3& dv : offsets) sum += length_sq(dv);
    return sum / double(offsets.size());
}

std::vector<Vec3> offset_reg_backward(const std::vector<Vec3>& offsets) {
    std::vector<Vec3> grads(offsets.size());
    if (offsets.empty()) return grads;
    double scale = 2.0 / double(offsets.size());
    for (size_t i = 0; i < offsets.size(); ++i) grads[i] = offsets[i] * scale;
    return grads;
}

void save_param_map(const std::string& path, const ParamMap& map) {
    if (map.channels == 3) {
        write_pfm(path, map.to_image());
        return;
    }
    // Stack channels as 1-channel planes (height = h * c).
    Image img(map.width, map.height * map.channels, 1);
    for (int c = 0; c < map.channels; ++c)
        for (int y = 0; y < map.height; ++y)
            for (int x = 0; x < map.width; ++x)
                img.at(x, c * map.height + y)[0] = float(map.at(x, y)[c]);
    write_pfm(path, img);
}

ParamMap load_param_map(const std::string& path, int channels_hint) {
    Image img = read_pfm(path);
    if (img.channels == 3) return ParamMap::from_image(img);
    int c = channels_hint > 0 ? channels_hint : 1;
    if (img.height % c != 0)
        throw std::runtime_error("load_param_map: plane-stacked height mismatch in " + path);
    ParamMap map(img.width, img.height / c, c);
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < map.height; ++y)
            for (int x = 0; x < map.width; ++x)
                map.at(x, y)[ch] = img.at(x, ch * map.height + y)[0];
    return map;
}

}  // namespace mav
