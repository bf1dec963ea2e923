#pragma once

#include <string>
#include <vector>

#include "mav/image.hpp"
#include "mav/posmap.hpp"
#include "mav/vecmath.hpp"

namespace mav {

// Double-precision texture used for optimizable maps.
struct ParamMap {
    int width = 0, height = 0, channels = 0;
    std::vector<double> data;

    ParamMap() = default;
    ParamMap(int w, int h, int c, double fill = 0.0)
        : width(w), height(h), channels(c), data(size_t(w) * h * c, fill) {}

    double* at(int x, int y) { return data.data() + (size_t(y) * width + x) * channels; }
    const double* at(int x, int y) const {
        return data.data() + (size_t(y) * width + x) * channels;
    }
    Image to_image() const;
    static ParamMap from_image(const Image& img);
};

// Bilinear footprint (border-clamped) of a continuous texel coordinate.
struct BilinearFootprint {
    int x0, y0, x1, y1;
    double w00, w10, w01, w11;
    double fx, fy;  // fractional position, for spatial derivatives
};
BilinearFootprint bilinear_footprint(const ParamMap& map, double tx, double ty);

void bilinear_sample(const ParamMap& map, double tx, double ty, double* out);
// d(sample)/d(tx, ty), per channel.
void bilinear_spatial_grad(const ParamMap& map, double tx, double ty, double* dtx,
                           double* dty);
// Accumulates channel grads into the 4 touched texels.
void bilinear_backward(ParamMap& grad_map, double tx, double ty, const double* channel_grads);

// Per-pose optimizable detail: front/back vertex offset maps (meters) and the
// auxiliary feature map fed to the material field.
struct DetailMaps {
    ParamMap offsets_front;  // H x W x 3
    ParamMap offsets_back;
    ParamMap feature;        // H x W x C

    DetailMaps() = default;
    DetailMaps(int resolution, int feature_channels)
        : offsets_front(resolution, resolution, 3),
          offsets_back(resolution, resolution, 3),
          feature(resolution, resolution, feature_channels) {}

    // Per-texel offset norm clamp (5 cm), applied after optimizer steps.
    void clamp_offsets(double max_norm = 0.05);
};

// Front/back selection on the canonical z sign (c_z > 0 selects front, c_z <= 0
// back), then bilinear at the canonical (x, y) texture coordinate.
Vec3 sample_offsets(const Vec3& canonical, const DetailMaps& maps,
                    const CanonicalSquare& square);
// Adjoint: routes dL/d(offset) into the touched texels of the selected map.
void sample_offsets_backward(const Vec3& canonical, const Vec3& offset_grad,
                             DetailMaps& grad_maps, const CanonicalSquare& square);
// d(offset)/d(c_x, c_y) in canonical meters, for the canonical-coordinate
// chain.
void sample_offsets_spatial_grad(const Vec3& canonical, const DetailMaps& maps,
                                 const CanonicalSquare& square, Vec3& ddx, Vec3& ddy);

std::vector<double> sample_feature(const Vec3& canonical, const ParamMap& feature,
                                   const CanonicalSquare& square);
void sample_feature_backward(const Vec3& canonical, const std::vector<double>& grad,
                             ParamMap& grad_feature, const CanonicalSquare& square);
// d(feature)/d(c_x, c_y); needed for the canonical-coordinate chain.
void sample_feature_spatial_grad(const Vec3& canonical, const ParamMap& feature,
                                 const CanonicalSquare& square, std::vector<double>& dx,
                                 std::vector<double>& dy);

// Mean squared offset norm: (1/N) * sum |dv_n|^2.
double offset_reg(const std::vector<Vec3>& offsets);
// dL/d(offset_n) for unit upstream gradient.
std::vector<Vec3> offset_reg_backward(const std::vector<Vec3>& offsets);

// PFM round-trip for checkpoints (multi-channel maps are stored as a stack of
// 1-channel planes when channels != 1 or 3).
void save_param_map(const std::string& path, const ParamMap& map);
ParamMap load_param_map(const std::string& path, int channels_hint = 0);

}  // namespace mav
