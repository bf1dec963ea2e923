#pragma once

#include <cstdint>
#include <cmath>

#include "mav/vecmath.hpp"

namespace mav {

// Counter-based RNG: the stream is fully determined by a (seed, pixel, sample,
// step) key, so renders are reproducible and finite-difference checks can
// freeze the sample sequence exactly.
class Rng {
public:
    Rng() : state_(mix(0x853c49e6748fea9bULL)) {}
    explicit Rng(uint64_t seed) : state_(mix(seed + 0x9e3779b97f4a7c15ULL)) {}

    static Rng keyed(uint64_t seed, uint64_t pixel, uint64_t sample, uint64_t step) {
        uint64_t k = mix(seed + 0x9e3779b97f4a7c15ULL);
        k = mix(k ^ mix(pixel + 0xbf58476d1ce4e5b9ULL));
        k = mix(k ^ mix(sample + 0x94d049bb133111ebULL));
        k = mix(k ^ mix(step + 0xd6e8feb86659fd93ULL));
        Rng r;
        r.state_ = k | 1;
        return r;
    }

    uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    // Uniform in [0, 1).
    double uniform() {
        return double(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    uint32_t uniform_index(uint32_t n) {
        return uint32_t(next_u64() % uint64_t(n));
    }

    Vec3 in_box(const Box3& b) {
        return {uniform(b.lo.x, b.hi.x), uniform(b.lo.y, b.hi.y), uniform(b.lo.z, b.hi.z)};
    }

    // Uniform in the unit ball, by rejection.
    Vec3 in_unit_ball() {
        for (;;) {
            Vec3 p{uniform(-1, 1), uniform(-1, 1), uniform(-1, 1)};
            if (length_sq(p) <= 1.0) return p;
        }
    }

    double gaussian() {
        double u1 = std::max(uniform(), 1e-12);
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

private:
    static uint64_t mix(uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    uint64_t state_;
};

}  // namespace mav
