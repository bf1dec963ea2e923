#pragma once

#include "mav/image.hpp"
#include "mav/renderer.hpp"

namespace mav {

struct LossWeights {
    double lpips = 0;          // accepted for config parity, ignored with a warning
    double sdf = 0.01;         // eikonal
    double mat_albedo = 0.3;
    double mat_rough = 0.05;
    double offset_start = 1000;
    double offset_end = 10;
    double light = 0.01;
    double normal = 1.0;

    void validate() const;
};

// Linear schedule over the training horizon; hits `offset_start` at step 0 and
// `offset_end` at the final step.
double lambda_offset(const LossWeights& weights, uint64_t step, uint64_t total_steps);

struct ImageLossResult {
    double image_l1 = 0;   // linear-radiance term
    double normal_l1 = 0;  // normal term, unweighted
    double total = 0;      // image_l1 + lambda_normal * normal_l1
    int union_pixels = 0;
    Image radiance_grads;  // dL/d(rendered radiance)
    Image normal_grads;    // dL/d(rendered camera-space normal)
};

// Per-pixel mean-over-channels L1, averaged over the union of the rendered
// and target masks. `target_srgb` goes through the inverse tone curve before
// comparison; the normal term is only evaluated where both sides carry a
// normal (target normals use (0,0,0) as invalid).
ImageLossResult image_loss(const RenderOutput& rendered, const Image& target_srgb,
                           const Image& target_mask, const Image* target_normal,
                           double lambda_normal);

// Peak signal-to-noise ratio between the tonemapped render and the sRGB
// target, over target-mask pixels.
double masked_psnr(const Image& rendered_linear, const Image& target_srgb,
                   const Image& target_mask);

}  // namespace mav
