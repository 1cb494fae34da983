#pragma once

#include "splatfix/image.hpp"

namespace splatfix {

struct LossWeights {
    double l2 = 0.8;
    double ssim = 0.2;
};

struct LossResult {
    double value = 0.0;
    double l2 = 0.0;    // mean squared error
    double ssim = 0.0;  // mean SSIM
    ColorGradient grad;  // dL / d rendered
};

// weights.l2 * MSE + weights.ssim * (1 - SSIM). Per-pixel gradient weights
// are not applied here; they act in the rasterizer backward pass. Throws
// DataError on a size mismatch.
LossResult photometric_loss(const ColorImage& rendered, const ColorImage& target,
                            const LossWeights& weights = {});

}  // namespace splatfix
