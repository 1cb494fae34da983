#include <algorithm>
#include <cmath>

#include "splatfix/kernels.hpp"

namespace splatfix::kernels {
namespace {

int composite_span_scalar(const SplatParams& s, std::int32_t list_pos, int y, int x0, int count,
                          const CompositeKnobs& k, const SpanForward& span) {
    int hits = 0;
    const double dy = y - s.mean_y;
    for (int i = 0; i < count; ++i) {
        if (span.done[i]) {
            continue;
        }
        const double dx = (x0 + i) - s.mean_x;
        const double power = -0.5 * (s.conic_a * dx * dx + s.conic_c * dy * dy) - s.conic_b * dx * dy;
        if (power > 0.0) {
            continue;
        }
        const double alpha = std::min(k.alpha_cap, s.opacity * std::exp(power));
        if (alpha < k.alpha_threshold) {
            continue;
        }
        const double t = span.transmittance[i];
        const double next_t = t * (1.0 - alpha);
        if (next_t < k.transmittance_floor) {
            span.done[i] = 1;
            continue;
        }
        const double w = alpha * t;
        for (int c = 0; c < 3; ++c) {
            span.color[c][i] += s.color[c] * w;
        }
        span.transmittance[i] = next_t;
        span.last[i] = list_pos + 1;
        ++hits;
    }
    return hits;
}

void backward_span_scalar(const SplatParams& s, std::int32_t list_pos, int y, int x0, int count,
                          const CompositeKnobs& k, const double background[3],
                          const SpanBackward& span, SplatGrad2D& out) {
    const double dy = y - s.mean_y;
    for (int i = 0; i < count; ++i) {
        if (list_pos >= span.last[i]) {
            continue;
        }
        const double dx = (x0 + i) - s.mean_x;
        const double power = -0.5 * (s.conic_a * dx * dx + s.conic_c * dy * dy) - s.conic_b * dx * dy;
        if (power > 0.0) {
            continue;
        }
        const double g = std::exp(power);
        const double og = s.opacity * g;
        const double alpha = std::min(k.alpha_cap, og);
        if (alpha < k.alpha_threshold) {
            continue;
        }
        const double one_minus = 1.0 - alpha;
        const double t = span.transmittance[i] / one_minus;
        span.transmittance[i] = t;

        double dl_dalpha = 0.0;
        double bg_dot = 0.0;
        for (int c = 0; c < 3; ++c) {
            const double dl = span.dl_dcolor[c][i];
            dl_dalpha += (s.color[c] - span.accum[c][i]) * dl;
            out.color[c] += alpha * t * dl;
            bg_dot += background[c] * dl;
            span.accum[c][i] = alpha * s.color[c] + one_minus * span.accum[c][i];
        }
        dl_dalpha = dl_dalpha * t - span.final_transmittance[i] / one_minus * bg_dot;

        if (og < k.alpha_cap) {
            out.opacity += g * dl_dalpha;
            const double dl_dpower = dl_dalpha * og;
            out.mean_x += dl_dpower * (s.conic_a * dx + s.conic_b * dy);
            out.mean_y += dl_dpower * (s.conic_b * dx + s.conic_c * dy);
            out.conic_a += -0.5 * dx * dx * dl_dpower;
            out.conic_b += -dx * dy * dl_dpower;
            out.conic_c += -0.5 * dy * dy * dl_dpower;
        }
    }
}

void convolve_rows_scalar(const double* in, int width, int height, const double* taps, int radius,
                          double* out) {
    for (int y = 0; y < height; ++y) {
        const double* row = in + static_cast<std::size_t>(y) * width;
        double* dst = out + static_cast<std::size_t>(y) * width;
        for (int x = 0; x < width; ++x) {
            double acc = 0.0;
            for (int t = -radius; t <= radius; ++t) {
                const int xx = x + t;
                if (xx >= 0 && xx < width) {
                    acc += taps[t + radius] * row[xx];
                }
            }
            dst[x] = acc;
        }
    }
}

void convolve_cols_scalar(const double* in, int width, int height, const double* taps, int radius,
                          double* out) {
    for (int y = 0; y < height; ++y) {
        double* dst = out + static_cast<std::size_t>(y) * width;
        for (int x = 0; x < width; ++x) {
            double acc = 0.0;
            for (int t = -radius; t <= radius; ++t) {
                const int yy = y + t;
                if (yy >= 0 && yy < height) {
                    acc += taps[t + radius] * in[static_cast<std::size_t>(yy) * width + x];
                }
            }
            dst[x] = acc;
        }
    }
}

double squared_diff_sum_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

}  // namespace

const KernelTable& scalar() {
    static const KernelTable table{
        "scalar",
        &composite_span_scalar,
        &backward_span_scalar,
        &convolve_rows_scalar,
        &convolve_cols_scalar,
        &squared_diff_sum_scalar,
    };
    return table;
}

}  // namespace splatfix::kernels
