#include "splatfix/metrics.hpp"

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "splatfix/error.hpp"
#include "splatfix/kernels.hpp"

namespace splatfix::metrics {
namespace {

constexpr int kRadius = 5;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

const std::array<double, 2 * kRadius + 1>& window_taps() {
    static const std::array<double, 2 * kRadius + 1> taps = [] {
        std::array<double, 2 * kRadius + 1> t{};
        double sum = 0.0;
        for (int k = -kRadius; k <= kRadius; ++k) {
            t[k + kRadius] = std::exp(-0.5 * k * k / (kSigma * kSigma));
            sum += t[k + kRadius];
        }
        for (double& v : t) {
            v /= sum;
        }
        return t;
    }();
    return taps;
}

void require_same_size(const ColorImage& a, const ColorImage& b, const char* what) {
    if (!a.same_size(b)) {
        throw DataError(std::string(what) + ": image sizes differ (" + std::to_string(a.width()) + "x" +
                        std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                        std::to_string(b.height()) + ")");
    }
}

// Gaussian-window filter of one plane.
class Blur {
public:
    Blur(int width, int height)
        : width_(width), height_(height), tmp_(static_cast<std::size_t>(width) * height) {}

    void operator()(const std::vector<double>& in, std::vector<double>& out) {
        const kernels::KernelTable& kt = kernels::active();
        out.resize(in.size());
        kt.convolve_rows(in.data(), width_, height_, window_taps().data(), kRadius, tmp_.data());
        kt.convolve_cols(tmp_.data(), width_, height_, window_taps().data(), kRadius, out.data());
    }

private:
    int width_;
    int height_;
    std::vector<double> tmp_;
};

std::vector<double> plane(const ColorImage& img, int c) {
    std::vector<double> p(img.pixel_count());
    const auto d = img.data();
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = d[3 * i + c];
    }
    return p;
}

SsimWithGradient ssim_impl(const ColorImage& a, const ColorImage& b, bool with_grad) {
    require_same_size(a, b, "ssim");
    SsimWithGradient out;
    const std::size_t n = a.pixel_count();
    if (n == 0) {
        out.value = 1.0;
        out.grad = ColorGradient(a.width(), a.height());
        return out;
    }
    if (with_grad) {
        out.grad = ColorGradient(a.width(), a.height());
    }
    Blur blur(a.width(), a.height());
    const double inv_count = 1.0 / (3.0 * static_cast<double>(n));
    std::vector<double> xx(n), yy(n), xy(n);
    std::vector<double> mu_x, mu_y, e_xx, e_yy, e_xy;
    std::vector<double> da(n), db(n), dc(n), ca, cb, cc;
    double total = 0.0;

    for (int c = 0; c < 3; ++c) {
        const std::vector<double> x = plane(a, c);
        const std::vector<double> y = plane(b, c);
        for (std::size_t i = 0; i < n; ++i) {
            xx[i] = x[i] * x[i];
            yy[i] = y[i] * y[i];
            xy[i] = x[i] * y[i];
        }
        blur(x, mu_x);
        blur(y, mu_y);
        blur(xx, e_xx);
        blur(yy, e_yy);
        blur(xy, e_xy);

        for (std::size_t i = 0; i < n; ++i) {
            const double mx = mu_x[i], my = mu_y[i];
            const double sxx = e_xx[i] - mx * mx;
            const double syy = e_yy[i] - my * my;
            const double sxy = e_xy[i] - mx * my;
            const double n1 = 2.0 * mx * my + kC1;
            const double n2 = 2.0 * sxy + kC2;
            const double d1 = mx * mx + my * my + kC1;
            const double d2 = sxx + syy + kC2;
            const double den = d1 * d2;
            const double s = n1 * n2 / den;
            total += s;
            if (with_grad) {
                // Partials of s with respect to mu_x, E[x^2] and E[xy].
                const double ds_dmx = (2.0 * my * n2 - 2.0 * my * n1) / den -
                                      s * (2.0 * mx * d2 - 2.0 * mx * d1) / den;
                da[i] = ds_dmx * inv_count;
                db[i] = -s / d2 * inv_count;
                dc[i] = 2.0 * n1 / den * inv_count;
            }
        }
        if (with_grad) {
            // The window is symmetric, so the adjoint of the blur is the blur.
            blur(da, ca);
            blur(db, cb);
            blur(dc, cc);
            auto g = out.grad.data();
            for (std::size_t i = 0; i < n; ++i) {
                g[3 * i + c] = ca[i] + 2.0 * x[i] * cb[i] + y[i] * cc[i];
            }
        }
    }
    out.value = total * inv_count;
    return out;
}

}  // namespace

double mse(const ColorImage& a, const ColorImage& b) {
    require_same_size(a, b, "mse");
    const std::size_t n = a.data().size();
    if (n == 0) {
        return 0.0;
    }
    return kernels::active().squared_diff_sum(a.data().data(), b.data().data(), n) /
           static_cast<double>(n);
}

double psnr(const ColorImage& a, const ColorImage& b) {
    return 10.0 * std::log10(1.0 / std::max(mse(a, b), kMseFloor));
}

double ssim(const ColorImage& a, const ColorImage& b) { return ssim_impl(a, b, false).value; }

SsimWithGradient ssim_with_gradient(const ColorImage& a, const ColorImage& b) {
    return ssim_impl(a, b, true);
}

}  // namespace splatfix::metrics
