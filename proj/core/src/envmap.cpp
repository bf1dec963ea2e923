#include "mav/envmap.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mav/image.hpp"

namespace mav {

namespace {

double luminance(const double* rgb) {
    return 0.2126 * rgb[0] + 0.7152 * rgb[1] + 0.0722 * rgb[2];
}

// Bilinear footprint over texel centers, u wraps, v clamps.
struct EnvFootprint {
    int x[2], y[2];
    double w[4];  // (x0,y0) (x1,y0) (x0,y1) (x1,y1)
};

EnvFootprint footprint(int width, int height, const Vec3& dir) {
    double phi = std::atan2(dir.z, dir.x);
    if (phi < 0) phi += 2 * kPi;
    double theta = std::acos(std::clamp(dir.y, -1.0, 1.0));
    double u = phi / (2 * kPi) * width - 0.5;
    double v = theta / kPi * height - 0.5;
    double fu = u - std::floor(u);
    int x0 = int(std::floor(u));
    EnvFootprint fp;
    fp.x[0] = ((x0 % width) + width) % width;
    fp.x[1] = (fp.x[0] + 1) % width;
    double fv;
    if (v <= 0) {
        fp.y[0] = fp.y[1] = 0;
        fv = 0;
    } else if (v >= height - 1) {
        fp.y[0] = fp.y[1] = height - 1;
        fv = 0;
    } else {
        fp.y[0] = int(v);
        fp.y[1] = fp.y[0] + 1;
        fv = v - fp.y[0];
    }
    fp.w[0] = (1 - fu) * (1 - fv);
    fp.w[1] = fu * (1 - fv);
    fp.w[2] = (1 - fu) * fv;
    fp.w[3] = fu * fv;
    return fp;
}

}  // namespace

EnvMap::EnvMap(int w, int h, const Vec3& fill) : width(w), height(h) {
    if (w < 1 || h < 1) throw std::invalid_argument("EnvMap: empty resolution");
    radiance.resize(size_t(w) * h * 3);
    for (size_t i = 0; i < radiance.size(); i += 3) {
        radiance[i] = fill.x;
        radiance[i + 1] = fill.y;
        radiance[i + 2] = fill.z;
    }
}

Vec3 EnvMap::eval(const Vec3& dir) const {
    EnvFootprint fp = footprint(width, height, dir);
    Vec3 out{};
    const int xi[4] = {fp.x[0], fp.x[1], fp.x[0], fp.x[1]};
    const int yi[4] = {fp.y[0], fp.y[0], fp.y[1], fp.y[1]};
    for (int k = 0; k < 4; ++k) {
        const double* t = at(xi[k], yi[k]);
        out += Vec3{t[0], t[1], t[2]} * fp.w[k];
    }
    return out;
}

void EnvMap::eval_backward(const Vec3& dir, const Vec3& grad,
                           std::vector<double>& grad_radiance) const {
    EnvFootprint fp = footprint(width, height, dir);
    const int xi[4] = {fp.x[0], fp.x[1], fp.x[0], fp.x[1]};
    const int yi[4] = {fp.y[0], fp.y[0], fp.y[1], fp.y[1]};
    for (int k = 0; k < 4; ++k) {
        double* g = grad_radiance.data() + (size_t(yi[k]) * width + xi[k]) * 3;
        g[0] += fp.w[k] * grad.x;
        g[1] += fp.w[k] * grad.y;
        g[2] += fp.w[k] * grad.z;
    }
}

void EnvMap::clamp_nonnegative() {
    for (double& v : radiance) v = std::max(v, 0.0);
}

EnvCdf build_env_cdf(const EnvMap& env) {
    EnvCdf cdf;
    cdf.width = env.width;
    cdf.height = env.height;
    size_t n = size_t(env.width) * env.height;
    cdf.lum.resize(n);
    cdf.texel_cdf.resize(n);
    cdf.row_omega.resize(env.height);

    double mean = 0;
    for (size_t t = 0; t < n; ++t) mean += luminance(env.radiance.data() + t * 3);
    mean /= double(n);
    // Keep every texel samplable so MIS weights stay well defined.
    double floor_lum = std::max(mean * 1e-4, 1e-12);

    double dphi = 2 * kPi / env.width;
    for (int y = 0; y < env.height; ++y) {
        double t0 = kPi * y / env.height;
        double t1 = kPi * (y + 1) / env.height;
        cdf.row_omega[y] = dphi * (std::cos(t0) - std::cos(t1));
    }
    double acc = 0;
    for (int y = 0; y < env.height; ++y)
        for (int x = 0; x < env.width; ++x) {
            size_t t = size_t(y) * env.width + x;
            cdf.lum[t] = std::max(luminance(env.radiance.data() + t * 3), floor_lum);
            acc += cdf.lum[t] * cdf.row_omega[y];
            cdf.texel_cdf[t] = acc;
        }
    cdf.total_weight = acc;
    for (double& v : cdf.texel_cdf) v /= acc;
    cdf.texel_cdf.back() = 1.0;
    return cdf;
}

Vec3 env_sample(const EnvCdf& cdf, double u1, double u2, double* pdf) {
    size_t t = std::lower_bound(cdf.texel_cdf.begin(), cdf.texel_cdf.end(), u1) -
               cdf.texel_cdf.begin();
    if (t >= cdf.texel_cdf.size()) t = cdf.texel_cdf.size() - 1;
    int x = int(t % cdf.width);
    int y = int(t / cdf.width);

    // Reuse u1 within the texel interval, keep u2 for the polar axis.
    double lo = t > 0 ? cdf.texel_cdf[t - 1] : 0.0;
    double span = cdf.texel_cdf[t] - lo;
    double ur = span > 0 ? (u1 - lo) / span : 0.5;
    ur = std::clamp(ur, 0.0, 1.0);

    double phi = 2 * kPi * (x + ur) / cdf.width;
    double c0 = std::cos(kPi * y / cdf.height);
    double c1 = std::cos(kPi * (y + 1) / cdf.height);
    double ct = c0 + (c1 - c0) * u2;  // uniform in cos(theta) within the row band
    double st = std::sqrt(std::max(0.0, 1 - ct * ct));
    if (pdf) *pdf = cdf.lum[t] / cdf.total_weight;
    return {st * std::cos(phi), ct, st * std::sin(phi)};
}

double env_pdf(const EnvCdf& cdf, const Vec3& dir) {
    double phi = std::atan2(dir.z, dir.x);
    if (phi < 0) phi += 2 * kPi;
    double theta = std::acos(std::clamp(dir.y, -1.0, 1.0));
    int x = std::min(int(phi / (2 * kPi) * cdf.width), cdf.width - 1);
    int y = std::min(int(theta / kPi * cdf.height), cdf.height - 1);
    return cdf.lum[size_t(y) * cdf.width + x] / cdf.total_weight;
}

double light_whiteness_loss(const EnvMap& env) {
    size_t n = size_t(env.width) * env.height;
    double loss = 0;
    for (size_t t = 0; t < n; ++t) {
        const double* c = env.radiance.data() + t * 3;
        double m = (c[0] + c[1] + c[2]) / 3.0;
        loss += (std::abs(c[0] - m) + std::abs(c[1] - m) + std::abs(c[2] - m)) / 3.0;
    }
    return loss / double(n);
}

void light_whiteness_backward(const EnvMap& env, double upstream,
                              std::vector<double>& grad_radiance) {
    size_t n = size_t(env.width) * env.height;
    double scale = upstream / (3.0 * double(n));
    for (size_t t = 0; t < n; ++t) {
        const double* c = env.radiance.data() + t * 3;
        double* g = grad_radiance.data() + t * 3;
        double m = (c[0] + c[1] + c[2]) / 3.0;
        double sign[3];
        for (int i = 0; i < 3; ++i)
            sign[i] = c[i] > m ? 1.0 : (c[i] < m ? -1.0 : 0.0);
        double mean_sign = (sign[0] + sign[1] + sign[2]) / 3.0;
        for (int i = 0; i < 3; ++i) g[i] += scale * (sign[i] - mean_sign);
    }
}

void save_envmap(const std::string& path, const EnvMap& env) {
    Image img(env.width, env.height, 3);
    for (size_t i = 0; i < env.radiance.size(); ++i) img.data[i] = float(env.radiance[i]);
    write_pfm(path, img);
}

EnvMap load_envmap(const std::string& path) {
    Image img = read_pfm(path);
    if (img.channels != 3)
        throw std::runtime_error("load_envmap: expected 3-channel PFM in " + path);
    EnvMap env(img.width, img.height);
    for (size_t i = 0; i < env.radiance.size(); ++i) env.radiance[i] = img.data[i];
    return env;
}

}  // namespace mav
