#pragma once

#include <string>
#include <vector>

#include "mav/vecmath.hpp"

namespace mav {

// Distant illumination as a lat-long radiance image. Directions are y-up:
// dir = (sin t cos p, cos t, sin t sin p), u = p / 2pi, v = t / pi.
struct EnvMap {
    int width = 0, height = 0;
    std::vector<double> radiance;  // [height][width][3], linear

    EnvMap() = default;
    EnvMap(int w, int h, const Vec3& fill = Vec3(0.5));

    double* at(int x, int y) { return radiance.data() + (size_t(y) * width + x) * 3; }
    const double* at(int x, int y) const {
        return radiance.data() + (size_t(y) * width + x) * 3;
    }

    // Bilinear lookup, wrapping in u and clamping in v.
    Vec3 eval(const Vec3& dir) const;
    // Adjoint of eval(): accumulates dL/d(radiance texels).
    void eval_backward(const Vec3& dir, const Vec3& grad,
                       std::vector<double>& grad_radiance) const;

    // Negative radiance is meaningless; called after optimizer steps.
    void clamp_nonnegative();
};

// Importance-sampling table over texel luminance, weighted by texel solid
// angle. Built once and can be held fixed while texel values change, which is
// what the finite-difference gradient checks rely on.
struct EnvCdf {
    int width = 0, height = 0;
    std::vector<double> lum;       // floored per-texel luminance
    std::vector<double> texel_cdf; // cumulative over lum * solid_angle, size w*h
    std::vector<double> row_omega; // solid angle of one texel in each row
    double total_weight = 0;       // sum of lum * solid_angle
};

EnvCdf build_env_cdf(const EnvMap& env);

// Draws a direction from the luminance distribution; the returned pdf is per
// unit solid angle. Within the chosen texel the draw is uniform in
// (azimuth, cos polar), so the pdf is exactly lum / total_weight.
Vec3 env_sample(const EnvCdf& cdf, double u1, double u2, double* pdf);
double env_pdf(const EnvCdf& cdf, const Vec3& dir);

// Mean over texels of (1/3) sum_c |L_c - mean_c(L)|.
double light_whiteness_loss(const EnvMap& env);
void light_whiteness_backward(const EnvMap& env, double upstream,
                              std::vector<double>& grad_radiance);

void save_envmap(const std::string& path, const EnvMap& env);
EnvMap load_envmap(const std::string& path);

}  // namespace mav
