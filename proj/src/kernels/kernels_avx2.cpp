// AVX2 + FMA variants. This translation unit is compiled with -mavx2 -mfma
// and only entered after a runtime CPU check.

#include "splatfix/kernels.hpp"

#if defined(__x86_64__) && defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <algorithm>
#include <bit>
#include <cstring>

namespace splatfix::kernels {
namespace {

// exp(x) for x in [-708.39, 709.78]; inputs outside are clamped. Range
// reduction by ln2 in two parts, then a degree-12 Taylor polynomial on
// |r| <= ln2 / 2. Relative error is below 4e-16.
inline __m256d exp_pd(__m256d x) {
    x = _mm256_min_pd(_mm256_max_pd(x, _mm256_set1_pd(-708.39)), _mm256_set1_pd(709.78));
    const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(1.4426950408889634)),
                                      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(0.693145751953125), x);
    r = _mm256_fnmadd_pd(n, _mm256_set1_pd(1.42860682030941723212e-6), r);

    __m256d p = _mm256_set1_pd(1.0 / 479001600.0);
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 39916800.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 3628800.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 362880.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 40320.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 5040.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 720.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 120.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 24.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 6.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(0.5));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));

    const __m256i e = _mm256_slli_epi64(
        _mm256_add_epi64(_mm256_cvtepi32_epi64(_mm256_cvtpd_epi32(n)), _mm256_set1_epi64x(1023)),
        52);
    return _mm256_mul_pd(p, _mm256_castsi256_pd(e));
}

inline double hsum(__m256d v) {
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, v);
    return ((lanes[0] + lanes[1]) + lanes[2]) + lanes[3];
}

struct SplatVec {
    __m256d mean_x, conic_a, conic_b, conic_c, opacity;
    __m256d color[3];

    explicit SplatVec(const SplatParams& s)
        : mean_x(_mm256_set1_pd(s.mean_x)), conic_a(_mm256_set1_pd(s.conic_a)),
          conic_b(_mm256_set1_pd(s.conic_b)), conic_c(_mm256_set1_pd(s.conic_c)),
          opacity(_mm256_set1_pd(s.opacity)),
          color{_mm256_set1_pd(s.color[0]), _mm256_set1_pd(s.color[1]), _mm256_set1_pd(s.color[2])} {}
};

inline __m256d lane_x(int x) {
    return _mm256_add_pd(_mm256_set1_pd(static_cast<double>(x)), _mm256_set_pd(3.0, 2.0, 1.0, 0.0));
}

inline __m256d gaussian_power(const SplatVec& s, __m256d dx, __m256d dy) {
    const __m256d quad = _mm256_add_pd(_mm256_mul_pd(_mm256_mul_pd(s.conic_a, dx), dx),
                                       _mm256_mul_pd(_mm256_mul_pd(s.conic_c, dy), dy));
    return _mm256_sub_pd(_mm256_mul_pd(_mm256_set1_pd(-0.5), quad),
                         _mm256_mul_pd(_mm256_mul_pd(s.conic_b, dx), dy));
}

// Four full lanes starting at `x`.
int composite_block(const SplatVec& s, std::int32_t list_pos, __m256d dy, int x,
                    const CompositeKnobs& k, double* t, double* c0, double* c1, double* c2,
                    std::uint8_t* done, std::int32_t* last) {
    std::uint32_t done_bits;
    std::memcpy(&done_bits, done, 4);
    if (done_bits == 0x01010101u) {
        return 0;
    }
    const __m256i done64 = _mm256_cvtepu8_epi64(_mm_cvtsi32_si128(static_cast<int>(done_bits)));
    const __m256d alive =
        _mm256_castsi256_pd(_mm256_cmpeq_epi64(done64, _mm256_setzero_si256()));

    const __m256d dx = _mm256_sub_pd(lane_x(x), s.mean_x);
    const __m256d power = gaussian_power(s, dx, dy);
    __m256d valid = _mm256_and_pd(alive, _mm256_cmp_pd(power, _mm256_setzero_pd(), _CMP_LE_OQ));
    const __m256d alpha =
        _mm256_min_pd(_mm256_set1_pd(k.alpha_cap), _mm256_mul_pd(s.opacity, exp_pd(power)));
    valid = _mm256_and_pd(valid,
                          _mm256_cmp_pd(alpha, _mm256_set1_pd(k.alpha_threshold), _CMP_GE_OQ));
    if (_mm256_movemask_pd(valid) == 0) {
        return 0;
    }

    const __m256d tv = _mm256_loadu_pd(t);
    const __m256d next_t = _mm256_mul_pd(tv, _mm256_sub_pd(_mm256_set1_pd(1.0), alpha));
    const __m256d term = _mm256_and_pd(
        valid, _mm256_cmp_pd(next_t, _mm256_set1_pd(k.transmittance_floor), _CMP_LT_OQ));
    const __m256d inc = _mm256_andnot_pd(term, valid);
    const __m256d w = _mm256_mul_pd(alpha, tv);

    double* channels[3] = {c0, c1, c2};
    for (int c = 0; c < 3; ++c) {
        const __m256d cur = _mm256_loadu_pd(channels[c]);
        _mm256_storeu_pd(channels[c], _mm256_blendv_pd(cur, _mm256_fmadd_pd(s.color[c], w, cur), inc));
    }
    _mm256_storeu_pd(t, _mm256_blendv_pd(tv, next_t, inc));

    const int inc_bits = _mm256_movemask_pd(inc);
    const int term_bits = _mm256_movemask_pd(term);
    for (int lane = 0; lane < 4; ++lane) {
        if (term_bits & (1 << lane)) {
            done[lane] = 1;
        }
        if (inc_bits & (1 << lane)) {
            last[lane] = list_pos + 1;
        }
    }
    return std::popcount(static_cast<unsigned>(inc_bits));
}

int composite_span_avx2(const SplatParams& splat, std::int32_t list_pos, int y, int x0, int count,
                        const CompositeKnobs& k, const SpanForward& span) {
    const SplatVec s(splat);
    const __m256d dy = _mm256_set1_pd(y - splat.mean_y);
    int hits = 0;
    int i = 0;
    for (; i + 4 <= count; i += 4) {
        hits += composite_block(s, list_pos, dy, x0 + i, k, span.transmittance + i,
                                span.color[0] + i, span.color[1] + i, span.color[2] + i,
                                span.done + i, span.last + i);
    }
    if (i < count) {
        const int n = count - i;
        double t[4] = {1.0, 1.0, 1.0, 1.0};
        double col[3][4] = {};
        std::uint8_t done[4] = {1, 1, 1, 1};
        std::int32_t last[4] = {};
        for (int j = 0; j < n; ++j) {
            t[j] = span.transmittance[i + j];
            for (int c = 0; c < 3; ++c) {
                col[c][j] = span.color[c][i + j];
            }
            done[j] = span.done[i + j];
            last[j] = span.last[i + j];
        }
        hits += composite_block(s, list_pos, dy, x0 + i, k, t, col[0], col[1], col[2], done, last);
        for (int j = 0; j < n; ++j) {
            span.transmittance[i + j] = t[j];
            for (int c = 0; c < 3; ++c) {
                span.color[c][i + j] = col[c][j];
            }
            span.done[i + j] = done[j];
            span.last[i + j] = last[j];
        }
    }
    return hits;
}

struct GradAccum {
    __m256d color[3] = {_mm256_setzero_pd(), _mm256_setzero_pd(), _mm256_setzero_pd()};
    __m256d opacity = _mm256_setzero_pd();
    __m256d mean_x = _mm256_setzero_pd();
    __m256d mean_y = _mm256_setzero_pd();
    __m256d conic_a = _mm256_setzero_pd();
    __m256d conic_b = _mm256_setzero_pd();
    __m256d conic_c = _mm256_setzero_pd();
};

struct BackwardLanes {
    const std::int32_t* last;
    const double* final_t;
    const double* dl[3];
    double* t;
    double* accum[3];
};

void backward_block(const SplatVec& s, std::int32_t list_pos, __m256d dy, int x,
                    const CompositeKnobs& k, const __m256d bg[3], const BackwardLanes& p,
                    GradAccum& acc) {
    const __m256i last64 =
        _mm256_cvtepi32_epi64(_mm_loadu_si128(reinterpret_cast<const __m128i*>(p.last)));
    const __m256d active =
        _mm256_castsi256_pd(_mm256_cmpgt_epi64(last64, _mm256_set1_epi64x(list_pos)));
    if (_mm256_movemask_pd(active) == 0) {
        return;
    }
    const __m256d dx = _mm256_sub_pd(lane_x(x), s.mean_x);
    const __m256d power = gaussian_power(s, dx, dy);
    __m256d valid = _mm256_and_pd(active, _mm256_cmp_pd(power, _mm256_setzero_pd(), _CMP_LE_OQ));
    const __m256d g = exp_pd(power);
    const __m256d og = _mm256_mul_pd(s.opacity, g);
    const __m256d cap = _mm256_set1_pd(k.alpha_cap);
    const __m256d alpha = _mm256_min_pd(cap, og);
    valid = _mm256_and_pd(valid,
                          _mm256_cmp_pd(alpha, _mm256_set1_pd(k.alpha_threshold), _CMP_GE_OQ));
    if (_mm256_movemask_pd(valid) == 0) {
        return;
    }

    const __m256d one_minus = _mm256_sub_pd(_mm256_set1_pd(1.0), alpha);
    const __m256d t_old = _mm256_loadu_pd(p.t);
    const __m256d t = _mm256_div_pd(t_old, one_minus);
    _mm256_storeu_pd(p.t, _mm256_blendv_pd(t_old, t, valid));

    __m256d dl_dalpha = _mm256_setzero_pd();
    __m256d bg_dot = _mm256_setzero_pd();
    const __m256d alpha_t = _mm256_mul_pd(alpha, t);
    for (int c = 0; c < 3; ++c) {
        const __m256d dl = _mm256_loadu_pd(p.dl[c]);
        const __m256d behind = _mm256_loadu_pd(p.accum[c]);
        dl_dalpha = _mm256_fmadd_pd(_mm256_sub_pd(s.color[c], behind), dl, dl_dalpha);
        acc.color[c] = _mm256_add_pd(acc.color[c], _mm256_and_pd(_mm256_mul_pd(alpha_t, dl), valid));
        bg_dot = _mm256_fmadd_pd(bg[c], dl, bg_dot);
        const __m256d updated = _mm256_fmadd_pd(alpha, s.color[c], _mm256_mul_pd(one_minus, behind));
        _mm256_storeu_pd(p.accum[c], _mm256_blendv_pd(behind, updated, valid));
    }
    const __m256d final_t = _mm256_loadu_pd(p.final_t);
    dl_dalpha = _mm256_sub_pd(_mm256_mul_pd(dl_dalpha, t),
                              _mm256_mul_pd(_mm256_div_pd(final_t, one_minus), bg_dot));

    const __m256d uncapped = _mm256_and_pd(valid, _mm256_cmp_pd(og, cap, _CMP_LT_OQ));
    dl_dalpha = _mm256_and_pd(dl_dalpha, uncapped);
    acc.opacity = _mm256_fmadd_pd(g, dl_dalpha, acc.opacity);
    const __m256d dpow = _mm256_mul_pd(dl_dalpha, og);
    acc.mean_x = _mm256_fmadd_pd(
        dpow, _mm256_fmadd_pd(s.conic_a, dx, _mm256_mul_pd(s.conic_b, dy)), acc.mean_x);
    acc.mean_y = _mm256_fmadd_pd(
        dpow, _mm256_fmadd_pd(s.conic_b, dx, _mm256_mul_pd(s.conic_c, dy)), acc.mean_y);
    const __m256d half_neg = _mm256_set1_pd(-0.5);
    acc.conic_a = _mm256_fmadd_pd(_mm256_mul_pd(_mm256_mul_pd(half_neg, dx), dx), dpow, acc.conic_a);
    acc.conic_b = _mm256_fnmadd_pd(_mm256_mul_pd(dx, dy), dpow, acc.conic_b);
    acc.conic_c = _mm256_fmadd_pd(_mm256_mul_pd(_mm256_mul_pd(half_neg, dy), dy), dpow, acc.conic_c);
}

void backward_span_avx2(const SplatParams& splat, std::int32_t list_pos, int y, int x0, int count,
                        const CompositeKnobs& k, const double background[3],
                        const SpanBackward& span, SplatGrad2D& out) {
    const SplatVec s(splat);
    const __m256d dy = _mm256_set1_pd(y - splat.mean_y);
    const __m256d bg[3] = {_mm256_set1_pd(background[0]), _mm256_set1_pd(background[1]),
                           _mm256_set1_pd(background[2])};
    GradAccum acc;
    int i = 0;
    for (; i + 4 <= count; i += 4) {
        const BackwardLanes lanes{span.last + i,
                                  span.final_transmittance + i,
                                  {span.dl_dcolor[0] + i, span.dl_dcolor[1] + i, span.dl_dcolor[2] + i},
                                  span.transmittance + i,
                                  {span.accum[0] + i, span.accum[1] + i, span.accum[2] + i}};
        backward_block(s, list_pos, dy, x0 + i, k, bg, lanes, acc);
    }
    if (i < count) {
        const int n = count - i;
        std::int32_t last[4] = {};
        double final_t[4] = {1.0, 1.0, 1.0, 1.0};
        double dl[3][4] = {};
        double t[4] = {1.0, 1.0, 1.0, 1.0};
        double behind[3][4] = {};
        for (int j = 0; j < n; ++j) {
            last[j] = span.last[i + j];
            final_t[j] = span.final_transmittance[i + j];
            t[j] = span.transmittance[i + j];
            for (int c = 0; c < 3; ++c) {
                dl[c][j] = span.dl_dcolor[c][i + j];
                behind[c][j] = span.accum[c][i + j];
            }
        }
        const BackwardLanes lanes{last, final_t, {dl[0], dl[1], dl[2]}, t,
                                  {behind[0], behind[1], behind[2]}};
        backward_block(s, list_pos, dy, x0 + i, k, bg, lanes, acc);
        for (int j = 0; j < n; ++j) {
            span.transmittance[i + j] = t[j];
            for (int c = 0; c < 3; ++c) {
                span.accum[c][i + j] = behind[c][j];
            }
        }
    }
    for (int c = 0; c < 3; ++c) {
        out.color[c] += hsum(acc.color[c]);
    }
    out.opacity += hsum(acc.opacity);
    out.mean_x += hsum(acc.mean_x);
    out.mean_y += hsum(acc.mean_y);
    out.conic_a += hsum(acc.conic_a);
    out.conic_b += hsum(acc.conic_b);
    out.conic_c += hsum(acc.conic_c);
}

void convolve_rows_avx2(const double* in, int width, int height, const double* taps, int radius,
                        double* out) {
    for (int y = 0; y < height; ++y) {
        const double* row = in + static_cast<std::size_t>(y) * width;
        double* dst = out + static_cast<std::size_t>(y) * width;
        auto edge = [&](int x) {
            double acc = 0.0;
            for (int t = -radius; t <= radius; ++t) {
                const int xx = x + t;
                if (xx >= 0 && xx < width) {
                    acc += taps[t + radius] * row[xx];
                }
            }
            dst[x] = acc;
        };
        int x = 0;
        for (; x < std::min(radius, width); ++x) {
            edge(x);
        }
        for (; x + 4 + radius <= width; x += 4) {
            __m256d acc = _mm256_setzero_pd();
            for (int t = -radius; t <= radius; ++t) {
                acc = _mm256_fmadd_pd(_mm256_set1_pd(taps[t + radius]), _mm256_loadu_pd(row + x + t),
                                      acc);
            }
            _mm256_storeu_pd(dst + x, acc);
        }
        for (; x < width; ++x) {
            edge(x);
        }
    }
}

void convolve_cols_avx2(const double* in, int width, int height, const double* taps, int radius,
                        double* out) {
    for (int y = 0; y < height; ++y) {
        double* dst = out + static_cast<std::size_t>(y) * width;
        const int t_lo = std::max(-radius, -y);
        const int t_hi = std::min(radius, height - 1 - y);
        int x = 0;
        for (; x + 4 <= width; x += 4) {
            __m256d acc = _mm256_setzero_pd();
            for (int t = t_lo; t <= t_hi; ++t) {
                acc = _mm256_fmadd_pd(_mm256_set1_pd(taps[t + radius]),
                                      _mm256_loadu_pd(in + static_cast<std::size_t>(y + t) * width + x),
                                      acc);
            }
            _mm256_storeu_pd(dst + x, acc);
        }
        for (; x < width; ++x) {
            double acc = 0.0;
            for (int t = t_lo; t <= t_hi; ++t) {
                acc += taps[t + radius] * in[static_cast<std::size_t>(y + t) * width + x];
            }
            dst[x] = acc;
        }
    }
}

double squared_diff_sum_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_fmadd_pd(d, d, acc);
    }
    double total = hsum(acc);
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        total += d * d;
    }
    return total;
}

}  // namespace

const KernelTable* avx2_table() {
    static const KernelTable table{
        "avx2",
        &composite_span_avx2,
        &backward_span_avx2,
        &convolve_rows_avx2,
        &convolve_cols_avx2,
        &squared_diff_sum_avx2,
    };
    return &table;
}

}  // namespace splatfix::kernels

#else

namespace splatfix::kernels {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace splatfix::kernels

#endif
