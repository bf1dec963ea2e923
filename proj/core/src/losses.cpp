#include "mav/losses.hpp"

#include <cmath>
#include <stdexcept>

#include "mav/tonemap.hpp"

namespace mav {

void LossWeights::validate() const {
    for (double v : {lpips, sdf, mat_albedo, mat_rough, offset_start, offset_end, light,
                     normal})
        if (v < 0 || !std::isfinite(v))
            throw std::invalid_argument("LossWeights: weights must be finite and >= 0");
}

double lambda_offset(const LossWeights& weights, uint64_t step, uint64_t total_steps) {
    if (total_steps <= 1) return weights.offset_end;
    double t = double(std::min(step, total_steps - 1)) / double(total_steps - 1);
    return weights.offset_start + (weights.offset_end - weights.offset_start) * t;
}

ImageLossResult image_loss(const RenderOutput& rendered, const Image& target_srgb,
                           const Image& target_mask, const Image* target_normal,
                           double lambda_normal) {
    const Image& rad = rendered.radiance;
    int w = rad.width, h = rad.height;
    if (target_srgb.width != w || target_srgb.height != h || target_srgb.channels != 3)
        throw std::invalid_argument("image_loss: target image shape mismatch");
    if (target_mask.width != w || target_mask.height != h)
        throw std::invalid_argument("image_loss: target mask shape mismatch");
    if (target_normal &&
        (target_normal->width != w || target_normal->height != h ||
         target_normal->channels != 3))
        throw std::invalid_argument("image_loss: target normal shape mismatch");

    ImageLossResult res;
    res.radiance_grads = Image(w, h, 3);
    res.normal_grads = Image(w, h, 3);

    double img_sum = 0, nrm_sum = 0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            bool in_render = rendered.mask.at(x, y)[0] > 0;
            bool in_target = target_mask.at(x, y)[0] > 0;
            if (!in_render && !in_target) continue;
            ++res.union_pixels;

            const float* rp = rad.at(x, y);
            const float* tp = target_srgb.at(x, y);
            float* gp = res.radiance_grads.at(x, y);
            for (int c = 0; c < 3; ++c) {
                double diff = double(rp[c]) - tonemap_inv(double(tp[c]));
                img_sum += std::abs(diff) / 3.0;
                gp[c] = float(diff > 0 ? 1.0 / 3.0 : (diff < 0 ? -1.0 / 3.0 : 0.0));
            }

            if (target_normal && in_render) {
                const float* tn = target_normal->at(x, y);
                if (tn[0] != 0 || tn[1] != 0 || tn[2] != 0) {
                    const float* rn = rendered.normal.at(x, y);
                    float* gn = res.normal_grads.at(x, y);
                    for (int c = 0; c < 3; ++c) {
                        double diff = double(rn[c]) - double(tn[c]);
                        nrm_sum += std::abs(diff) / 3.0;
                        gn[c] = float(diff > 0 ? 1.0 / 3.0 : (diff < 0 ? -1.0 / 3.0 : 0.0));
                    }
                }
            }
        }

    if (res.union_pixels > 0) {
        double inv_n = 1.0 / double(res.union_pixels);
        res.image_l1 = img_sum * inv_n;
        res.normal_l1 = nrm_sum * inv_n;
        for (float& g : res.radiance_grads.data) g = float(g * inv_n);
        for (float& g : res.normal_grads.data)
            g = float(g * inv_n * lambda_normal);
    }
    res.total = res.image_l1 + lambda_normal * res.normal_l1;
    return res;
}

double masked_psnr(const Image& rendered_linear, const Image& target_srgb,
                   const Image& target_mask) {
    double mse = 0;
    long count = 0;
    for (int y = 0; y < rendered_linear.height; ++y)
        for (int x = 0; x < rendered_linear.width; ++x) {
            if (target_mask.at(x, y)[0] <= 0) continue;
            const float* rp = rendered_linear.at(x, y);
            const float* tp = target_srgb.at(x, y);
            for (int c = 0; c < 3; ++c) {
                double r = std::clamp(tonemap(double(rp[c])), 0.0, 1.0);
                double d = r - double(tp[c]);
                mse += d * d;
                ++count;
            }
        }
    if (count == 0) return 0;
    mse /= double(count);
    if (mse < 1e-12) return 120.0;
    return 10.0 * std::log10(1.0 / mse);
}

}  // namespace mav
