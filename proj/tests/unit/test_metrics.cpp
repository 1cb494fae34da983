#include <cmath>

#include "doctest.h"
#include "splatfix/error.hpp"
#include "splatfix/loss.hpp"
#include "splatfix/metrics.hpp"
#include "splatfix/rng.hpp"

using namespace splatfix;

namespace {

ColorImage random_image(Rng& rng, int w, int h) {
    ColorImage img(w, h);
    for (double& v : img.data()) {
        v = rng.uniform();
    }
    return img;
}

// Direct windowed sums, one pixel at a time.
double brute_ssim(const ColorImage& a, const ColorImage& b) {
    double taps[11], norm = 0.0;
    for (int i = 0; i < 11; ++i) {
        taps[i] = std::exp(-(i - 5) * (i - 5) / (2.0 * 1.5 * 1.5));
        norm += taps[i];
    }
    for (double& t : taps) {
        t /= norm;
    }
    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    double total = 0.0;
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < a.height(); ++y) {
            for (int x = 0; x < a.width(); ++x) {
                double mx = 0, my = 0, xx = 0, yy = 0, xy = 0;
                for (int dy = -5; dy <= 5; ++dy) {
                    for (int dx = -5; dx <= 5; ++dx) {
                        const int u = x + dx, v = y + dy;
                        if (u < 0 || v < 0 || u >= a.width() || v >= a.height()) {
                            continue;
                        }
                        const double w = taps[dx + 5] * taps[dy + 5];
                        const double p = a.channel(u, v, c), q = b.channel(u, v, c);
                        mx += w * p;
                        my += w * q;
                        xx += w * p * p;
                        yy += w * q * q;
                        xy += w * p * q;
                    }
                }
                const double sx = xx - mx * mx, sy = yy - my * my, sxy = xy - mx * my;
                total += (2 * mx * my + c1) * (2 * sxy + c2) / ((mx * mx + my * my + c1) * (sx + sy + c2));
            }
        }
    }
    return total / (3.0 * a.pixel_count());
}

}  // namespace

TEST_CASE("identical images") {
    Rng rng(1);
    const ColorImage a = random_image(rng, 17, 9);
    CHECK(metrics::mse(a, a) == 0.0);
    CHECK(metrics::psnr(a, a) == doctest::Approx(100.0));
    CHECK(metrics::ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    const LossResult l = photometric_loss(a, a);
    CHECK(l.value == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("MSE and PSNR arithmetic") {
    const ColorImage black(8, 8), white(8, 8, {1, 1, 1});
    CHECK(metrics::mse(black, white) == 1.0);
    CHECK(metrics::psnr(black, white) == doctest::Approx(0.0));
    const ColorImage grey(8, 8, {0.1, 0.1, 0.1});
    CHECK(metrics::mse(black, grey) == doctest::Approx(0.01));
    CHECK(metrics::psnr(black, grey) == doctest::Approx(20.0));
    CHECK_THROWS_AS(metrics::mse(black, ColorImage(8, 7)), DataError);
}

TEST_CASE("SSIM matches direct window sums") {
    Rng rng(2);
    for (auto [w, h] : {std::pair{5, 5}, std::pair{12, 20}, std::pair{33, 16}}) {
        const ColorImage a = random_image(rng, w, h), b = random_image(rng, w, h);
        CHECK(metrics::ssim(a, b) == doctest::Approx(brute_ssim(a, b)).epsilon(1e-10));
    }
}

TEST_CASE("SSIM of a ramp against its negative is below zero") {
    ColorImage a(32, 32), b(32, 32);
    for (int y = 0; y < 32; ++y) {
        for (int x = 0; x < 32; ++x) {
            const double v = x / 31.0;
            a.set(x, y, {v, v, v});
            b.set(x, y, {1 - v, 1 - v, 1 - v});
        }
    }
    CHECK(metrics::ssim(a, b) < 0.0);
}

TEST_CASE("SSIM gradient matches finite differences") {
    Rng rng(3);
    const ColorImage a = random_image(rng, 14, 11), b = random_image(rng, 14, 11);
    const metrics::SsimWithGradient g = metrics::ssim_with_gradient(a, b);
    CHECK(g.value == doctest::Approx(metrics::ssim(a, b)).epsilon(1e-12));
    const double h = 1e-6;
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t i = rng.uniform_int(a.data().size());
        ColorImage p = a, m = a;
        p.data()[i] += h;
        m.data()[i] -= h;
        const double fd = (metrics::ssim(p, b) - metrics::ssim(m, b)) / (2 * h);
        CHECK(g.grad.data()[i] == doctest::Approx(fd).epsilon(1e-5).scale(1e-3));
    }
}

TEST_CASE("photometric loss value and gradient") {
    Rng rng(4);
    const ColorImage a = random_image(rng, 10, 12), b = random_image(rng, 10, 12);
    const LossWeights w{0.8, 0.2};
    const LossResult l = photometric_loss(a, b, w);
    CHECK(l.l2 == doctest::Approx(metrics::mse(a, b)));
    CHECK(l.ssim == doctest::Approx(metrics::ssim(a, b)));
    CHECK(l.value == doctest::Approx(0.8 * l.l2 + 0.2 * (1 - l.ssim)));
    const double h = 1e-6;
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t i = rng.uniform_int(a.data().size());
        ColorImage p = a, m = a;
        p.data()[i] += h;
        m.data()[i] -= h;
        const double fd = (photometric_loss(p, b, w).value - photometric_loss(m, b, w).value) / (2 * h);
        CHECK(l.grad.data()[i] == doctest::Approx(fd).epsilon(1e-5).scale(1e-3));
    }
    CHECK_THROWS_AS(photometric_loss(a, ColorImage(3, 3)), DataError);
}
