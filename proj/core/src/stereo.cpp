#include "mav/stereo.hpp"

#include <cmath>
#include <limits>
#include <algorithm>
#include <stdexcept>
#include <vector>

#include "mav/parallel.hpp"

namespace mav {

namespace {

double window_sad(const Image& a, const Image& b, int ax, int bx, int y, int half) {
    double sad = 0;
    for (int dy = -half; dy <= half; ++dy)
        for (int dx = -half; dx <= half; ++dx)
            sad += std::abs(double(a.at(ax + dx, y + dy)[0]) -
                            double(b.at(bx + dx, y + dy)[0]));
    return sad;
}

// Best disparity per pixel of `base` against `other`. `sign` is the direction
// of the shift in `other` (-1 for left-to-right matching, +1 for the reverse).
Image match_direction(const Image& base, const Image& other, int window, int max_disp,
                      int sign, Image* margin_out) {
    int half = window / 2;
    Image disp(base.width, base.height, 1, -1.f);
    parallel_chunks(half, base.height - half, [&](int64_t y0, int64_t y1, int) {
        for (int64_t y = y0; y < y1; ++y)
            for (int x = half; x < base.width - half; ++x) {
                double best = std::numeric_limits<double>::infinity();
                double second = best;
                int best_d = -1;
                for (int d = 0; d <= max_disp; ++d) {
                    int ox = x + sign * d;
                    if (ox - half < 0 || ox + half >= other.width) break;
                    double sad = window_sad(base, other, x, ox, int(y), half);
                    if (sad < best) {
                        if (best_d >= 0 && std::abs(best_d - d) > 1) second = best;
                        best = sad;
                        best_d = d;
                    } else if (std::abs(d - best_d) > 1 && sad < second) {
                        second = sad;
                    }
                }
                if (best_d >= 0) {
                    // Parabolic subpixel refinement; exact matches stay
                    // integer so the constructed-shift cases are exact.
                    double d = best_d;
                    int om = x + sign * (best_d - 1);
                    int op = x + sign * (best_d + 1);
                    if (best > 0 && best_d > 0 && om - half >= 0 &&
                        om + half < other.width && op - half >= 0 &&
                        op + half < other.width) {
                        double sm = window_sad(base, other, x, om, int(y), half);
                        double sp = window_sad(base, other, x, op, int(y), half);
                        double denom = sm - 2 * best + sp;
                        if (denom > 1e-12) {
                            double off = 0.5 * (sm - sp) / denom;
                            d += std::clamp(off, -0.5, 0.5);
                        }
                    }
                    disp.at(x, int(y))[0] = float(d);
                    if (margin_out)
                        margin_out->at(x, int(y))[0] =
                            std::isinf(second) ? 0.f : float(second - best);
                }
            }
    });
    return disp;
}

}  // namespace

Image to_grayscale(const Image& img) {
    Image gray(img.width, img.height, 1);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const float* p = img.at(x, y);
            gray.at(x, y)[0] = img.channels >= 3
                                   ? 0.2126f * p[0] + 0.7152f * p[1] + 0.0722f * p[2]
                                   : p[0];
        }
    return gray;
}

DisparityMap block_match_disparity(const StereoPair& pair, int window, int max_disp) {
    const Image& L = pair.left;
    const Image& R = pair.right;
    if (L.width != R.width || L.height != R.height || L.channels != 1 || R.channels != 1)
        throw std::invalid_argument("block_match_disparity: mismatched pair");
    if (window < 1 || window % 2 == 0)
        throw std::invalid_argument("block_match_disparity: window must be odd");
    if (window > L.width || window > L.height)
        throw std::invalid_argument("block_match_disparity: window larger than image");

    Image margin(L.width, L.height, 1);
    Image dl = match_direction(L, R, window, max_disp, -1, &margin);
    Image dr = match_direction(R, L, window, max_disp, +1, nullptr);

    DisparityMap out;
    out.disparity = Image(L.width, L.height, 1);
    out.valid = Image(L.width, L.height, 1);
    for (int y = 0; y < L.height; ++y)
        for (int x = 0; x < L.width; ++x) {
            float d = dl.at(x, y)[0];
            if (d < 0) continue;
            int xr = x - int(std::lround(d));
            if (xr < 0) continue;
            float d2 = dr.at(xr, y)[0];
            // Consistency at 1 px, plus a uniqueness margin so textureless
            // regions (flat SAD over all shifts) drop out.
            if (d2 < 0 || std::abs(d - d2) > 1 || margin.at(x, y)[0] <= 1e-6f) continue;
            out.disparity.at(x, y)[0] = d;
            out.valid.at(x, y)[0] = 1.f;
        }

    // 3x3 median over valid pixels knocks out isolated gross mismatches and
    // leaves exact constant-shift fields untouched.
    Image filtered = out.disparity;
    for (int y = 0; y < L.height; ++y)
        for (int x = 0; x < L.width; ++x) {
            if (out.valid.at(x, y)[0] <= 0) continue;
            float vals[9];
            int n = 0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    int xi = x + dx, yi = y + dy;
                    if (xi < 0 || xi >= L.width || yi < 0 || yi >= L.height) continue;
                    if (out.valid.at(xi, yi)[0] <= 0) continue;
                    vals[n++] = out.disparity.at(xi, yi)[0];
                }
            std::nth_element(vals, vals + n / 2, vals + n);
            filtered.at(x, y)[0] = vals[n / 2];
        }
    out.disparity = std::move(filtered);
    return out;
}

Image disparity_to_depth(const DisparityMap& disp, double focal, double baseline) {
    if (focal <= 0 || baseline <= 0)
        throw std::invalid_argument("disparity_to_depth: focal and baseline must be > 0");
    Image depth(disp.disparity.width, disp.disparity.height, 1);
    for (size_t i = 0; i < depth.data.size(); ++i) {
        float d = disp.disparity.data[i];
        if (disp.valid.data[i] > 0 && d > 0) depth.data[i] = float(focal * baseline / d);
    }
    return depth;
}

Image depth_to_normal(const Image& depth, const Camera& intrinsics) {
    // Least-squares plane fit z = a x + b y + c over a window of unprojected
    // points. A 2-px central difference amplifies per-pixel disparity noise
    // by ~z/(2*baseline) rad per px; the window fit averages it down to the
    // level block matching can actually deliver. Exact on planar depth.
    const int r = 7;
    int w = depth.width, h = depth.height;
    Image normals(w, h, 3);
    parallel_chunks(0, h, [&](int64_t y0, int64_t y1, int) {
        for (int64_t y = y0; y < y1; ++y)
            for (int x = 0; x < w; ++x) {
                if (depth.at(x, int(y))[0] <= 0) continue;
                double sxx = 0, sxy = 0, syy = 0, sx = 0, sy = 0, s1 = 0;
                double sxz = 0, syz = 0, sz = 0;
                int count = 0;
                for (int dy = -r; dy <= r; ++dy)
                    for (int dx = -r; dx <= r; ++dx) {
                        int xi = x + dx, yi = int(y) + dy;
                        if (xi < 0 || xi >= w || yi < 0 || yi >= h) continue;
                        double z = depth.at(xi, yi)[0];
                        if (z <= 0) continue;
                        Vec3 p = intrinsics.unproject(xi, yi, z);
                        sxx += p.x * p.x; sxy += p.x * p.y; syy += p.y * p.y;
                        sx += p.x; sy += p.y; s1 += 1;
                        sxz += p.x * p.z; syz += p.y * p.z; sz += p.z;
                        ++count;
                    }
                if (count < 2 * r * r) continue;
                Mat3 A;
                A(0, 0) = sxx; A(0, 1) = sxy; A(0, 2) = sx;
                A(1, 0) = sxy; A(1, 1) = syy; A(1, 2) = sy;
                A(2, 0) = sx;  A(2, 1) = sy;  A(2, 2) = s1;
                double det = A.det();
                double scale = sxx * syy * s1 + 1e-300;
                if (std::abs(det) < 1e-12 * scale) continue;
                Vec3 coeff = A.inverse() * Vec3{sxz, syz, sz};
                Vec3 n{coeff.x, coeff.y, -1.0};
                n = n / length(n);
                if (n.z > 0) n = -n;
                float* p = normals.at(x, int(y));
                p[0] = float(n.x);
                p[1] = float(n.y);
                p[2] = float(n.z);
            }
    });
    return normals;
}

}  // namespace mav
