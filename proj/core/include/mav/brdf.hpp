#pragma once

#include <cmath>
#include <stdexcept>

#include "mav/material.hpp"
#include "mav/vecmath.hpp"

namespace mav {

using std::sqrt;

// Dielectric diffuse + GGX specular with Schlick Fresnel at F0 = 0.04 and
// height-correlated Smith visibility. Roughness alpha = ks^2. The diffuse
// lobe is Fresnel-coupled (Ashikhmin-Shirley style): scaling it by
// (1 - F(cos_i)) (1 - F(cos_o)) / (1 - F_avg) keeps the white furnace at
// kd = 1 within a fraction of a percent at any viewing angle, because the
// near-mirror specular reflectance is F(cos_o) and the coupled diffuse
// integrates to kd (1 - F(cos_o)).

inline double schlick_fresnel(double cos_h_o) {
    double m = std::clamp(1.0 - cos_h_o, 0.0, 1.0);
    double m2 = m * m;
    return 0.04 + 0.96 * m2 * m2 * m;
}

// Cosine-weighted hemispherical average of the Schlick term.
inline constexpr double kFresnelAvg = 0.04 + 0.96 / 21.0;

// Integrand core, templated so a Jet can flow through the material parameters
// and the n-dependent cosines. h_dot_o depends only on the fixed sample
// directions and stays a plain double.
template <typename T>
void brdf_eval_core(const T kd[3], const T& ks, const T& cos_i, const T& cos_o,
                    const T& cos_h, double h_dot_o, T f[3]) {
    T alpha = ks * ks;
    T a2 = alpha * alpha;
    T denom = cos_h * cos_h * (a2 - 1.0) + 1.0;
    T D = a2 / (kPi * denom * denom);
    T V = 0.5 / (cos_o * sqrt(a2 + (1.0 - a2) * cos_i * cos_i) +
                 cos_i * sqrt(a2 + (1.0 - a2) * cos_o * cos_o));
    double F = schlick_fresnel(h_dot_o);
    T spec = F * D * V;
    T mi = 1.0 - cos_i;
    T mo = 1.0 - cos_o;
    T fi = 0.04 + 0.96 * (mi * mi * mi * mi * mi);
    T fo = 0.04 + 0.96 * (mo * mo * mo * mo * mo);
    T diff = (1.0 - fi) * (1.0 - fo) / (kPi * (1.0 - kFresnelAvg));
    for (int c = 0; c < 3; ++c) f[c] = diff * kd[c] + spec;
}

// Plain evaluation; zero outside the n-hemisphere.
inline Vec3 brdf_eval(const MaterialSample& mat, const Vec3& wi, const Vec3& wo,
                      const Vec3& n) {
    double cos_i = dot(wi, n);
    double cos_o = dot(wo, n);
    if (cos_i <= 0 || cos_o <= 0) return {};
    Vec3 h = normalize(wi + wo);
    double kd[3] = {mat.kd.x, mat.kd.y, mat.kd.z};
    double f[3];
    brdf_eval_core(kd, mat.ks, cos_i, cos_o, dot(n, h), dot(h, wo), f);
    return {f[0], f[1], f[2]};
}

namespace detail {

inline void tangent_frame(const Vec3& n, Vec3& t, Vec3& b) {
    // Pixar's branchless frame.
    double s = n.z >= 0 ? 1.0 : -1.0;
    double a = -1.0 / (s + n.z);
    t = {1.0 + s * n.x * n.x * a, s * n.x * n.y * a, -s * n.x};
    b = {n.x * n.y * a, s + n.y * n.y * a, -n.y};
}

inline double ggx_d(double alpha, double cos_h) {
    double a2 = alpha * alpha;
    double d = cos_h * cos_h * (a2 - 1.0) + 1.0;
    return a2 / (kPi * d * d);
}

inline double smith_g1(double alpha, double cos_v) {
    double a2 = alpha * alpha;
    return 2.0 * cos_v / (cos_v + std::sqrt(a2 + (1.0 - a2) * cos_v * cos_v));
}

inline double diffuse_weight(const MaterialSample& mat, double /*cos_o*/) {
    return (mat.kd.x + mat.kd.y + mat.kd.z) / 3.0 * 0.96;
}

}  // namespace detail

// Mixture density of the sampler below (cosine diffuse + VNDF specular).
inline double brdf_pdf(const MaterialSample& mat, const Vec3& wi, const Vec3& wo,
                       const Vec3& n) {
    double cos_i = dot(wi, n);
    double cos_o = dot(wo, n);
    if (cos_i <= 0 || cos_o <= 0) return 1e-8;
    double alpha = mat.ks * mat.ks;
    Vec3 h = normalize(wi + wo);
    double pdf_diff = cos_i / kPi;
    double pdf_spec =
        detail::smith_g1(alpha, cos_o) * detail::ggx_d(alpha, dot(n, h)) / (4.0 * cos_o);
    double wd = detail::diffuse_weight(mat, cos_o);
    double ws = schlick_fresnel(cos_o);
    double q = wd / (wd + ws);
    return std::max(q * pdf_diff + (1.0 - q) * pdf_spec, 1e-8);
}

// Draws an incident direction. u_lobe picks the lobe, (u1, u2) place the
// sample inside it; the returned pdf is the full mixture density.
inline Vec3 brdf_sample(const MaterialSample& mat, const Vec3& wo, const Vec3& n,
                        double u1, double u2, double u_lobe, double* pdf) {
    if (std::abs(length_sq(n) - 1.0) > 1e-6)
        throw std::invalid_argument("brdf_sample: normal not unit length");
    double cos_o = dot(wo, n);
    if (cos_o <= 0) {
        if (pdf) *pdf = 1e-8;
        return n;
    }
    Vec3 t, b;
    detail::tangent_frame(n, t, b);
    double alpha = mat.ks * mat.ks;
    double wd = detail::diffuse_weight(mat, cos_o);
    double ws = schlick_fresnel(cos_o);
    double q = wd / (wd + ws);

    Vec3 wi;
    if (u_lobe < q) {
        double r = std::sqrt(u1);
        double phi = 2.0 * kPi * u2;
        double z = std::sqrt(std::max(0.0, 1.0 - u1));
        wi = t * (r * std::cos(phi)) + b * (r * std::sin(phi)) + n * z;
    } else {
        // GGX visible-normal sampling (Heitz 2018), in the tangent frame.
        Vec3 v_local{dot(wo, t), dot(wo, b), cos_o};
        Vec3 vh = normalize(Vec3{alpha * v_local.x, alpha * v_local.y, v_local.z});
        double lensq = vh.x * vh.x + vh.y * vh.y;
        Vec3 t1 = lensq > 1e-18 ? Vec3{-vh.y, vh.x, 0} / std::sqrt(lensq) : Vec3{1, 0, 0};
        Vec3 t2 = cross(vh, t1);
        double r = std::sqrt(u1);
        double phi = 2.0 * kPi * u2;
        double p1 = r * std::cos(phi);
        double p2 = r * std::sin(phi);
        double s = 0.5 * (1.0 + vh.z);
        p2 = (1.0 - s) * std::sqrt(std::max(0.0, 1.0 - p1 * p1)) + s * p2;
        Vec3 nh = t1 * p1 + t2 * p2 +
                  vh * std::sqrt(std::max(0.0, 1.0 - p1 * p1 - p2 * p2));
        Vec3 h_local = normalize(Vec3{alpha * nh.x, alpha * nh.y, std::max(0.0, nh.z)});
        Vec3 h = t * h_local.x + b * h_local.y + n * h_local.z;
        wi = h * (2.0 * dot(wo, h)) - wo;
    }
    wi = normalize(wi);
    if (pdf) *pdf = brdf_pdf(mat, wi, wo, n);
    return wi;
}

}  // namespace mav
