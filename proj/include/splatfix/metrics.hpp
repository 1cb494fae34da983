#pragma once

#include "splatfix/image.hpp"

// Image quality metrics on [0, 1] RGB images.
namespace splatfix::metrics {

inline constexpr double kMseFloor = 1e-10;  // caps PSNR at 100 dB

// Mean squared error over all pixels and channels. Throws DataError when the
// sizes differ.
double mse(const ColorImage& a, const ColorImage& b);

// 10 log10(1 / max(MSE, 1e-10)).
double psnr(const ColorImage& a, const ColorImage& b);

// Mean SSIM over pixels and channels with an 11x11 Gaussian window
// (sigma 1.5), zero padding, C1 = 0.01^2 and C2 = 0.03^2.
double ssim(const ColorImage& a, const ColorImage& b);

struct SsimWithGradient {
    double value = 0.0;
    ColorGradient grad;  // d SSIM / d a
};

SsimWithGradient ssim_with_gradient(const ColorImage& a, const ColorImage& b);

}  // namespace splatfix::metrics
