#pragma once

// Data-parallel inner loops of the rasterizer and the image metrics.
//
// Every kernel has a scalar reference implementation and, on x86-64, an AVX2
// variant. The active table is chosen once at startup from the CPU features
// and can be forced with the SPLATFIX_KERNELS environment variable ("scalar",
// "avx2") or kernels::select(). Variants agree to floating-point tolerance;
// within one variant results are deterministic.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace splatfix::kernels {

// A projected Gaussian as seen by the pixel loops.
struct SplatParams {
    double mean_x = 0.0;
    double mean_y = 0.0;
    double conic_a = 0.0;  // inverse 2D covariance [[a, b], [b, c]]
    double conic_b = 0.0;
    double conic_c = 0.0;
    double opacity = 0.0;
    double color[3] = {0.0, 0.0, 0.0};
};

struct CompositeKnobs {
    double alpha_threshold = 1.0 / 255.0;
    double alpha_cap = 0.99;
    double transmittance_floor = 1e-4;
};

// Per-pixel forward state of a run of consecutive pixels in one row.
struct SpanForward {
    double* transmittance;
    double* color[3];
    std::uint8_t* done;
    std::int32_t* last;  // one past the list position of the last contributor
};

// Per-pixel backward state. `transmittance` starts at the final forward
// transmittance and is divided back through each contributor; `accum` holds
// the color composited behind the current splat.
struct SpanBackward {
    const std::int32_t* last;
    const double* final_transmittance;
    const double* dl_dcolor[3];
    double* transmittance;
    double* accum[3];
};

// Gradients of the loss with respect to one splat's 2D parameters.
struct SplatGrad2D {
    double color[3] = {0.0, 0.0, 0.0};
    double opacity = 0.0;
    double mean_x = 0.0;
    double mean_y = 0.0;
    double conic_a = 0.0;
    double conic_b = 0.0;
    double conic_c = 0.0;
};

// Front-to-back blend of one splat into `count` pixels starting at column x0
// of row y. Returns the number of pixels the splat contributed to.
using CompositeSpanFn = int (*)(const SplatParams& splat, std::int32_t list_pos, int y, int x0,
                                int count, const CompositeKnobs& knobs, const SpanForward& span);

// Back-to-front gradient step of one splat over the same run of pixels.
// Gradients are added into `out`.
using BackwardSpanFn = void (*)(const SplatParams& splat, std::int32_t list_pos, int y, int x0,
                                int count, const CompositeKnobs& knobs, const double background[3],
                                const SpanBackward& span, SplatGrad2D& out);

// Separable 1D correlation of a row-major width x height plane with zero
// padding; taps has 2 * radius + 1 entries. `in` and `out` must not alias.
//   rows: out(x, y) = sum_k taps[k] * in(x + k - radius, y)
//   cols: out(x, y) = sum_k taps[k] * in(x, y + k - radius)
using ConvolveFn = void (*)(const double* in, int width, int height, const double* taps,
                            int radius, double* out);

// sum_i (a[i] - b[i])^2
using SquaredDiffSumFn = double (*)(const double* a, const double* b, std::size_t n);

struct KernelTable {
    std::string_view name;
    CompositeSpanFn composite_span;
    BackwardSpanFn backward_span;
    ConvolveFn convolve_rows;
    ConvolveFn convolve_cols;
    SquaredDiffSumFn squared_diff_sum;
};

const KernelTable& scalar();

// nullptr when not compiled in or not supported by this CPU.
const KernelTable* avx2();

const KernelTable& active();

// "auto", "scalar" or "avx2". Throws std::invalid_argument for an unknown or
// unavailable variant.
void select(std::string_view name);

}  // namespace splatfix::kernels
