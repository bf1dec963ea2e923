#pragma once

#include <array>
#include <cmath>

namespace mav {

// Forward-mode dual number carrying N partial derivatives. Used in the shading
// backward pass to get exact integrand partials w.r.t. material parameters and
// the shading normal in a single evaluation.
template <int N>
struct Jet {
    double a = 0;
    std::array<double, N> v{};

    Jet() = default;
    Jet(double a_) : a(a_) {}
    static Jet var(double a_, int slot) {
        Jet j(a_);
        j.v[slot] = 1.0;
        return j;
    }

    Jet operator+(const Jet& o) const {
        Jet r(a + o.a);
        for (int i = 0; i < N; ++i) r.v[i] = v[i] + o.v[i];
        return r;
    }
    Jet operator-(const Jet& o) const {
        Jet r(a - o.a);
        for (int i = 0; i < N; ++i) r.v[i] = v[i] - o.v[i];
        return r;
    }
    Jet operator-() const {
        Jet r(-a);
        for (int i = 0; i < N; ++i) r.v[i] = -v[i];
        return r;
    }
    Jet operator*(const Jet& o) const {
        Jet r(a * o.a);
        for (int i = 0; i < N; ++i) r.v[i] = v[i] * o.a + a * o.v[i];
        return r;
    }
    Jet operator/(const Jet& o) const {
        Jet r(a / o.a);
        double inv2 = 1.0 / (o.a * o.a);
        for (int i = 0; i < N; ++i) r.v[i] = (v[i] * o.a - a * o.v[i]) * inv2;
        return r;
    }
    Jet& operator+=(const Jet& o) { *this = *this + o; return *this; }
    bool operator<(const Jet& o) const { return a < o.a; }
    bool operator>(const Jet& o) const { return a > o.a; }
};

template <int N> Jet<N> operator+(double s, const Jet<N>& j) { return Jet<N>(s) + j; }
template <int N> Jet<N> operator-(double s, const Jet<N>& j) { return Jet<N>(s) - j; }
template <int N> Jet<N> operator*(double s, const Jet<N>& j) { return Jet<N>(s) * j; }
template <int N> Jet<N> operator/(double s, const Jet<N>& j) { return Jet<N>(s) / j; }

template <int N>
Jet<N> sqrt(const Jet<N>& j) {
    Jet<N> r(std::sqrt(j.a));
    double d = 0.5 / std::max(r.a, 1e-12);
    for (int i = 0; i < N; ++i) r.v[i] = j.v[i] * d;
    return r;
}

template <int N>
Jet<N> pow5(const Jet<N>& j) {
    double a2 = j.a * j.a;
    Jet<N> r(a2 * a2 * j.a);
    double d = 5.0 * a2 * a2;
    for (int i = 0; i < N; ++i) r.v[i] = j.v[i] * d;
    return r;
}

template <int N>
Jet<N> clamp_min(const Jet<N>& j, double lo) {
    return j.a < lo ? Jet<N>(lo) : j;
}

inline double value(double x) { return x; }
template <int N> double value(const Jet<N>& j) { return j.a; }

using std::sqrt;

}  // namespace mav
