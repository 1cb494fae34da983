// Equivalence of the SIMD kernel variants against the scalar reference.

#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "splatfix/kernels.hpp"
#include "splatfix/rng.hpp"

using namespace splatfix;
using namespace splatfix::kernels;

namespace {

constexpr double kTol = 1e-12;

bool close(double a, double b, double tol = kTol) {
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

SplatParams random_splat(Rng& rng, int width) {
    SplatParams s;
    s.mean_x = rng.uniform(-2.0, width + 2.0);
    s.mean_y = rng.uniform(-2.0, 6.0);
    const double sx = rng.uniform(0.7, 6.0), sy = rng.uniform(0.7, 6.0);
    const double rho = rng.uniform(-0.8, 0.8);
    const double a = sx * sx, c = sy * sy, b = rho * sx * sy;
    const double det = a * c - b * b;
    s.conic_a = c / det;
    s.conic_b = -b / det;
    s.conic_c = a / det;
    s.opacity = rng.uniform(0.05, 1.0);
    for (double& col : s.color) {
        col = rng.uniform();
    }
    return s;
}

struct ForwardState {
    std::vector<double> t, r, g, b;
    std::vector<std::uint8_t> done;
    std::vector<std::int32_t> last;

    explicit ForwardState(int n) : t(n, 1.0), r(n, 0.0), g(n, 0.0), b(n, 0.0), done(n, 0), last(n, 0) {}
    SpanForward span(int offset) {
        return {t.data() + offset, {r.data() + offset, g.data() + offset, b.data() + offset},
                done.data() + offset, last.data() + offset};
    }
};

}  // namespace

TEST_CASE("scalar table is always present") {
    CHECK(scalar().name == "scalar");
    CHECK(active().composite_span != nullptr);
    CHECK_THROWS(select("sse9"));
}

TEST_CASE("AVX2 variant matches the scalar reference") {
    const KernelTable* simd = avx2();
    if (!simd) {
        MESSAGE("AVX2 not available on this machine; equivalence skipped");
        return;
    }
    const KernelTable& ref = scalar();
    Rng rng(42);

    SUBCASE("composite and backward over random spans") {
        for (int trial = 0; trial < 200; ++trial) {
            const int width = 1 + static_cast<int>(rng.uniform_int(23));
            const int y = static_cast<int>(rng.uniform_int(4));
            const int nsplats = 1 + static_cast<int>(rng.uniform_int(12));
            std::vector<SplatParams> splats;
            for (int i = 0; i < nsplats; ++i) {
                splats.push_back(random_splat(rng, width));
            }
            CompositeKnobs knobs;
            if (trial % 3 == 0) {
                knobs.transmittance_floor = 0.2;  // exercise early termination
            }

            ForwardState a(width), b(width);
            std::vector<int> starts, counts;
            for (int i = 0; i < nsplats; ++i) {
                const int x0 = static_cast<int>(rng.uniform_int(width));
                const int count = 1 + static_cast<int>(rng.uniform_int(width - x0));
                starts.push_back(x0);
                counts.push_back(count);
                const int ha = ref.composite_span(splats[i], i, y, x0, count, knobs, a.span(x0));
                const int hb = simd->composite_span(splats[i], i, y, x0, count, knobs, b.span(x0));
                CHECK(ha == hb);
            }
            for (int x = 0; x < width; ++x) {
                CHECK(close(a.t[x], b.t[x]));
                CHECK(close(a.r[x], b.r[x]));
                CHECK(close(a.g[x], b.g[x]));
                CHECK(close(a.b[x], b.b[x]));
                CHECK(a.done[x] == b.done[x]);
                CHECK(a.last[x] == b.last[x]);
            }

            // Backward replay over the whole row, back to front.
            std::vector<double> dl[3];
            for (auto& d : dl) {
                d.resize(width);
                for (double& v : d) {
                    v = rng.uniform(-1.0, 1.0);
                }
            }
            const double bg[3] = {0.2, 0.5, 0.9};
            std::vector<double> ta = a.t, tb = a.t;
            std::vector<double> acc_a[3] = {std::vector<double>(width), std::vector<double>(width),
                                            std::vector<double>(width)};
            std::vector<double> acc_b[3] = {acc_a[0], acc_a[1], acc_a[2]};
            for (int i = nsplats - 1; i >= 0; --i) {
                SplatGrad2D ga, gb;
                const int o = starts[i];
                const SpanBackward sa{a.last.data() + o, a.t.data() + o,
                                      {dl[0].data() + o, dl[1].data() + o, dl[2].data() + o}, ta.data() + o,
                                      {acc_a[0].data() + o, acc_a[1].data() + o, acc_a[2].data() + o}};
                const SpanBackward sb{a.last.data() + o, a.t.data() + o,
                                      {dl[0].data() + o, dl[1].data() + o, dl[2].data() + o}, tb.data() + o,
                                      {acc_b[0].data() + o, acc_b[1].data() + o, acc_b[2].data() + o}};
                ref.backward_span(splats[i], i, y, o, counts[i], knobs, bg, sa, ga);
                simd->backward_span(splats[i], i, y, o, counts[i], knobs, bg, sb, gb);
                for (int c = 0; c < 3; ++c) {
                    CHECK(close(ga.color[c], gb.color[c], 1e-10));
                }
                CHECK(close(ga.opacity, gb.opacity, 1e-10));
                CHECK(close(ga.mean_x, gb.mean_x, 1e-10));
                CHECK(close(ga.mean_y, gb.mean_y, 1e-10));
                CHECK(close(ga.conic_a, gb.conic_a, 1e-10));
                CHECK(close(ga.conic_b, gb.conic_b, 1e-10));
                CHECK(close(ga.conic_c, gb.conic_c, 1e-10));
            }
            for (int x = 0; x < width; ++x) {
                CHECK(close(ta[x], tb[x], 1e-10));
                // Replaying every contributor restores the initial transmittance.
                CHECK(close(ta[x], 1.0, 1e-9));
            }
        }
    }

    SUBCASE("separable convolution") {
        for (int trial = 0; trial < 30; ++trial) {
            const int w = 1 + static_cast<int>(rng.uniform_int(40));
            const int h = 1 + static_cast<int>(rng.uniform_int(40));
            const int radius = static_cast<int>(rng.uniform_int(6));
            std::vector<double> taps(2 * radius + 1);
            for (double& t : taps) {
                t = rng.uniform();
            }
            std::vector<double> in(static_cast<std::size_t>(w) * h);
            for (double& v : in) {
                v = rng.uniform(-1.0, 1.0);
            }
            std::vector<double> ra(in.size()), rb(in.size()), ca(in.size()), cb(in.size());
            ref.convolve_rows(in.data(), w, h, taps.data(), radius, ra.data());
            simd->convolve_rows(in.data(), w, h, taps.data(), radius, rb.data());
            ref.convolve_cols(in.data(), w, h, taps.data(), radius, ca.data());
            simd->convolve_cols(in.data(), w, h, taps.data(), radius, cb.data());
            for (std::size_t i = 0; i < in.size(); ++i) {
                CHECK(close(ra[i], rb[i]));
                CHECK(close(ca[i], cb[i]));
            }
        }
    }

    SUBCASE("squared difference sum") {
        for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 64u, 1001u}) {
            std::vector<double> a(n), b(n);
            for (std::size_t i = 0; i < n; ++i) {
                a[i] = rng.uniform();
                b[i] = rng.uniform();
            }
            CHECK(close(ref.squared_diff_sum(a.data(), b.data(), n),
                        simd->squared_diff_sum(a.data(), b.data(), n)));
        }
    }
}

TEST_CASE("scalar composite follows the front-to-back rule") {
    // One pixel, one splat centered on it: alpha = opacity.
    SplatParams s;
    s.mean_x = 0.0;
    s.mean_y = 0.0;
    s.conic_a = s.conic_c = 1.0;
    s.opacity = 0.5;
    s.color[0] = 1.0;
    ForwardState st(1);
    CHECK(scalar().composite_span(s, 0, 0, 0, 1, {}, st.span(0)) == 1);
    CHECK(st.r[0] == 0.5);
    CHECK(st.t[0] == 0.5);
    CHECK(st.last[0] == 1);

    // Cap at 0.99 and terminate below the floor.
    s.opacity = 5.0;
    CompositeKnobs k;
    k.transmittance_floor = 0.4;
    CHECK(scalar().composite_span(s, 1, 0, 0, 1, k, st.span(0)) == 0);
    CHECK(st.done[0] == 1);
    CHECK(st.last[0] == 1);
}
