#include "splatfix/loss.hpp"

#include "splatfix/metrics.hpp"

namespace splatfix {

LossResult photometric_loss(const ColorImage& rendered, const ColorImage& target,
                            const LossWeights& weights) {
    LossResult out;
    out.l2 = metrics::mse(rendered, target);
    out.grad = ColorGradient(rendered.width(), rendered.height());
    const auto x = rendered.data();
    const auto y = target.data();
    auto g = out.grad.data();
    const double scale = x.empty() ? 0.0 : 2.0 * weights.l2 / static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        g[i] = scale * (x[i] - y[i]);
    }
    if (weights.ssim != 0.0) {
        const metrics::SsimWithGradient s = metrics::ssim_with_gradient(rendered, target);
        out.ssim = s.value;
        const auto sg = s.grad.data();
        for (std::size_t i = 0; i < x.size(); ++i) {
            g[i] -= weights.ssim * sg[i];
        }
    } else {
        out.ssim = metrics::ssim(rendered, target);
    }
    out.value = weights.l2 * out.l2 + weights.ssim * (1.0 - out.ssim);
    return out;
}

}  // namespace splatfix
