#pragma once

#include <cmath>

#include "mav/vecmath.hpp"

namespace mav {

// sRGB transfer function and its inverse. Training compares in linear space,
// so stored LDR targets are pushed through tonemap_inv first.
inline double tonemap(double linear) {
    if (linear <= 0.0031308) return 12.92 * linear;
    return 1.055 * std::pow(linear, 1.0 / 2.4) - 0.055;
}

inline double tonemap_inv(double srgb) {
    if (srgb <= 0.04045) return srgb / 12.92;
    return std::pow((srgb + 0.055) / 1.055, 2.4);
}

inline Vec3 tonemap(const Vec3& c) {
    return {tonemap(c.x), tonemap(c.y), tonemap(c.z)};
}

inline Vec3 tonemap_inv(const Vec3& c) {
    return {tonemap_inv(c.x), tonemap_inv(c.y), tonemap_inv(c.z)};
}

}  // namespace mav
