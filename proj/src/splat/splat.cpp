#include "splatfix/splat.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "splatfix/error.hpp"

namespace splatfix::splat {
namespace {

using Mat23 = std::array<double, 6>;  // row-major 2x3

kernels::CompositeKnobs knobs_of(const RasterConfig& cfg) {
    return {cfg.alpha_threshold, cfg.alpha_cap, cfg.transmittance_floor};
}

kernels::SplatParams splat_params(const PixelFootprint& fp, const Gaussian& g) {
    kernels::SplatParams s;
    s.mean_x = fp.mean_x;
    s.mean_y = fp.mean_y;
    s.conic_a = fp.conic_a;
    s.conic_b = fp.conic_b;
    s.conic_c = fp.conic_c;
    s.opacity = g.opacity();
    s.color[0] = g.color.r;
    s.color[1] = g.color.g;
    s.color[2] = g.color.b;
    return s;
}

struct TileBounds {
    int x0, x1, y0, y1;  // inclusive
};

TileBounds tile_bounds(const RenderResult& r, int tile, int tile_size, int width, int height) {
    const int tx = tile % r.tiles_x;
    const int ty = tile / r.tiles_x;
    return {tx * tile_size, std::min(width - 1, (tx + 1) * tile_size - 1), ty * tile_size,
            std::min(height - 1, (ty + 1) * tile_size - 1)};
}

// The Gaussian-to-camera-point chain, shared by projection and its gradient.
struct ViewFrame {
    Mat3 rotation;
    Vec3 translation;
};

ViewFrame view_frame(const CameraView& view) {
    return {quat_to_matrix(view.pose.rotation.normalized()), view.pose.translation};
}

std::optional<PixelFootprint> project_with_frame(const Gaussian& g, const CameraView& view,
                                                 const ViewFrame& frame, const RasterConfig& cfg) {
    const Vec3 t = frame.rotation * g.position + frame.translation;
    if (!(t.z > cfg.near_plane)) {
        return std::nullopt;
    }
    const Intrinsics& k = view.intrinsics;

    PixelFootprint fp;
    fp.camera_point = t;
    fp.depth = t.z;
    fp.rotation_norm = g.rotation.norm();
    fp.unit_rotation = g.rotation.normalized();
    fp.rotation = quat_to_matrix(fp.unit_rotation);
    fp.scale = g.scale();

    Mat3 m = fp.rotation;
    for (int r = 0; r < 3; ++r) {
        m(r, 0) *= fp.scale.x;
        m(r, 1) *= fp.scale.y;
        m(r, 2) *= fp.scale.z;
    }
    fp.covariance3d = m * m.transposed();

    const double iz = 1.0 / t.z;
    const double j00 = k.fx * iz;
    const double j02 = -k.fx * t.x * iz * iz;
    const double j11 = k.fy * iz;
    const double j12 = -k.fy * t.y * iz * iz;
    Mat23& p = fp.projection;
    for (int c = 0; c < 3; ++c) {
        p[c] = j00 * frame.rotation(0, c) + j02 * frame.rotation(2, c);
        p[3 + c] = j11 * frame.rotation(1, c) + j12 * frame.rotation(2, c);
    }

    // cov2d = P * cov3d * P^T
    double pc[6];
    for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 3; ++c) {
            pc[r * 3 + c] = p[r * 3] * fp.covariance3d(0, c) + p[r * 3 + 1] * fp.covariance3d(1, c) +
                            p[r * 3 + 2] * fp.covariance3d(2, c);
        }
    }
    const double a = pc[0] * p[0] + pc[1] * p[1] + pc[2] * p[2];
    const double b = pc[0] * p[3] + pc[1] * p[4] + pc[2] * p[5];
    const double c = pc[3] * p[3] + pc[4] * p[4] + pc[5] * p[5];
    fp.cov_a = a + cfg.covariance_blur;
    fp.cov_b = b;
    fp.cov_c = c + cfg.covariance_blur;
    const double det = fp.cov_a * fp.cov_c - fp.cov_b * fp.cov_b;
    if (!(det > 0.0)) {
        return std::nullopt;
    }
    fp.conic_a = fp.cov_c / det;
    fp.conic_b = -fp.cov_b / det;
    fp.conic_c = fp.cov_a / det;

    fp.mean_x = k.fx * t.x * iz + k.cx;
    fp.mean_y = k.fy * t.y * iz + k.cy;

    const double rx = 3.0 * std::sqrt(fp.cov_a);
    const double ry = 3.0 * std::sqrt(fp.cov_c);
    const double x_lo = std::max(0.0, std::ceil(fp.mean_x - rx));
    const double x_hi = std::min(static_cast<double>(k.width - 1), std::floor(fp.mean_x + rx));
    const double y_lo = std::max(0.0, std::ceil(fp.mean_y - ry));
    const double y_hi = std::min(static_cast<double>(k.height - 1), std::floor(fp.mean_y + ry));
    if (!(x_lo <= x_hi) || !(y_lo <= y_hi)) {
        return std::nullopt;
    }
    fp.x_min = static_cast<int>(x_lo);
    fp.x_max = static_cast<int>(x_hi);
    fp.y_min = static_cast<int>(y_lo);
    fp.y_max = static_cast<int>(y_hi);
    return fp;
}

// dL/dparams of one Gaussian from the gradients on its 2D footprint.
GaussianParams chain_to_parameters(const Gaussian& g, const PixelFootprint& fp,
                                   const CameraView& view, const ViewFrame& frame,
                                   const kernels::SplatGrad2D& d) {
    GaussianParams out{};
    const Intrinsics& k = view.intrinsics;
    const Mat23& p = fp.projection;

    // Conic -> 2D covariance: dL/dCov = -Q G Q with G the symmetric matrix
    // gradient of the conic (off-diagonal scalar counted twice).
    const double qa = fp.conic_a, qb = fp.conic_b, qc = fp.conic_c;
    const double ga = d.conic_a, gb = 0.5 * d.conic_b, gc = d.conic_c;
    // Q G
    const double m00 = qa * ga + qb * gb, m01 = qa * gb + qb * gc;
    const double m10 = qb * ga + qc * gb, m11 = qb * gb + qc * gc;
    // -(Q G) Q
    const double s00 = -(m00 * qa + m01 * qb);
    const double s01 = -(m00 * qb + m01 * qc);
    const double s11 = -(m10 * qb + m11 * qc);
    const double gs2[2][2] = {{s00, s01}, {s01, s11}};

    // dL/dCov3d = P^T G2 P
    Mat3 g3;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            double acc = 0.0;
            for (int r = 0; r < 2; ++r) {
                for (int c = 0; c < 2; ++c) {
                    acc += p[r * 3 + i] * gs2[r][c] * p[c * 3 + j];
                }
            }
            g3(i, j) = acc;
        }
    }

    // dL/dP = 2 G2 P Cov3d
    Mat23 gp{};
    for (int r = 0; r < 2; ++r) {
        for (int j = 0; j < 3; ++j) {
            double acc = 0.0;
            for (int c = 0; c < 2; ++c) {
                for (int l = 0; l < 3; ++l) {
                    acc += gs2[r][c] * p[c * 3 + l] * fp.covariance3d(l, j);
                }
            }
            gp[r * 3 + j] = 2.0 * acc;
        }
    }
    // P = J R_view, so dL/dJ = dL/dP R_view^T
    double gj[2][3];
    for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 3; ++c) {
            gj[r][c] = gp[r * 3] * frame.rotation(c, 0) + gp[r * 3 + 1] * frame.rotation(c, 1) +
                       gp[r * 3 + 2] * frame.rotation(c, 2);
        }
    }

    const Vec3& t = fp.camera_point;
    const double iz = 1.0 / t.z;
    const double iz2 = iz * iz;
    const double iz3 = iz2 * iz;
    Vec3 dt;
    dt.x = gj[0][2] * (-k.fx * iz2) + d.mean_x * k.fx * iz;
    dt.y = gj[1][2] * (-k.fy * iz2) + d.mean_y * k.fy * iz;
    dt.z = gj[0][0] * (-k.fx * iz2) + gj[0][2] * (2.0 * k.fx * t.x * iz3) +
           gj[1][1] * (-k.fy * iz2) + gj[1][2] * (2.0 * k.fy * t.y * iz3) -
           d.mean_x * k.fx * t.x * iz2 - d.mean_y * k.fy * t.y * iz2;
    const Vec3 dpos = frame.rotation.transposed() * dt;
    out[param::position] = dpos.x;
    out[param::position + 1] = dpos.y;
    out[param::position + 2] = dpos.z;

    // Cov3d = M M^T with M = R diag(s): dL/dM = 2 G3 M.
    const double s[3] = {fp.scale.x, fp.scale.y, fp.scale.z};
    Mat3 gr;
    double ds[3] = {0.0, 0.0, 0.0};
    for (int i = 0; i < 3; ++i) {
        for (int c = 0; c < 3; ++c) {
            double gm = 0.0;
            for (int l = 0; l < 3; ++l) {
                gm += g3(i, l) * fp.rotation(l, c) * s[c];
            }
            gm *= 2.0;
            ds[c] += gm * fp.rotation(i, c);
            gr(i, c) = gm * s[c];
        }
    }
    for (int c = 0; c < 3; ++c) {
        out[param::log_scale + c] = ds[c] * s[c];
    }

    const Quaternion& q = fp.unit_rotation;
    const double w = q.w, x = q.x, y = q.y, z = q.z;
    const double dw = 2.0 * (-z * gr(0, 1) + y * gr(0, 2) + z * gr(1, 0) - x * gr(1, 2) -
                             y * gr(2, 0) + x * gr(2, 1));
    const double dx = 2.0 * (y * gr(0, 1) + z * gr(0, 2) + y * gr(1, 0) - 2.0 * x * gr(1, 1) -
                             w * gr(1, 2) + z * gr(2, 0) + w * gr(2, 1) - 2.0 * x * gr(2, 2));
    const double dy = 2.0 * (-2.0 * y * gr(0, 0) + x * gr(0, 1) + w * gr(0, 2) + x * gr(1, 0) +
                             z * gr(1, 2) - w * gr(2, 0) + z * gr(2, 1) - 2.0 * y * gr(2, 2));
    const double dz = 2.0 * (-2.0 * z * gr(0, 0) - w * gr(0, 1) + x * gr(0, 2) + w * gr(1, 0) -
                             2.0 * z * gr(1, 1) + y * gr(1, 2) + x * gr(2, 0) + y * gr(2, 1));
    // Through q / |q|.
    const double radial = w * dw + x * dx + y * dy + z * dz;
    const double inv_n = 1.0 / fp.rotation_norm;
    out[param::rotation] = (dw - w * radial) * inv_n;
    out[param::rotation + 1] = (dx - x * radial) * inv_n;
    out[param::rotation + 2] = (dy - y * radial) * inv_n;
    out[param::rotation + 3] = (dz - z * radial) * inv_n;

    const double o = g.opacity();
    out[param::opacity] = d.opacity * o * (1.0 - o);
    for (int c = 0; c < 3; ++c) {
        out[param::color + c] = d.color[c];
    }
    return out;
}

}  // namespace

void RasterConfig::validate() const {
    if (tile_size < 1) {
        throw std::invalid_argument("tile_size must be at least 1");
    }
    auto in_unit = [](double v) { return v > 0.0 && v < 1.0; };
    if (!in_unit(alpha_threshold) || !in_unit(transmittance_floor) || !(alpha_cap > 0.0) ||
        !(alpha_cap < 1.0)) {
        throw std::invalid_argument("raster thresholds must lie in (0, 1)");
    }
    if (!(covariance_blur >= 0.0) || !(near_plane > 0.0)) {
        throw std::invalid_argument("covariance_blur must be >= 0 and near_plane > 0");
    }
}

std::optional<PixelFootprint> project_gaussian(const Gaussian& g, const CameraView& view,
                                               const RasterConfig& cfg) {
    return project_with_frame(g, view, view_frame(view), cfg);
}

RenderResult render(const GaussianSet& set, const CameraView& view, const RasterConfig& cfg) {
    cfg.validate();
    const int width = view.intrinsics.width;
    const int height = view.intrinsics.height;
    const std::size_t npix = static_cast<std::size_t>(width) * height;
    const ViewFrame frame = view_frame(view);

    RenderResult r;
    r.transmittance.assign(npix, 1.0);
    r.last_contributor.assign(npix, 0);
    r.footprints.resize(set.size());
    r.contributions.assign(set.size(), 0);

    for (std::size_t i = 0; i < set.size(); ++i) {
        r.footprints[i] = project_with_frame(set[i], view, frame, cfg);
        if (r.footprints[i]) {
            r.sorted.push_back(static_cast<std::uint32_t>(i));
        }
    }
    std::stable_sort(r.sorted.begin(), r.sorted.end(), [&](std::uint32_t a, std::uint32_t b) {
        return r.footprints[a]->depth < r.footprints[b]->depth;
    });

    const int ts = cfg.tile_size;
    r.tiles_x = (width + ts - 1) / ts;
    r.tiles_y = (height + ts - 1) / ts;
    r.tile_lists.resize(static_cast<std::size_t>(r.tiles_x) * r.tiles_y);
    for (std::uint32_t gi : r.sorted) {
        const PixelFootprint& fp = *r.footprints[gi];
        for (int ty = fp.y_min / ts; ty <= fp.y_max / ts; ++ty) {
            for (int tx = fp.x_min / ts; tx <= fp.x_max / ts; ++tx) {
                r.tile_lists[static_cast<std::size_t>(ty) * r.tiles_x + tx].push_back(gi);
            }
        }
    }

    std::vector<kernels::SplatParams> params(set.size());
    for (std::uint32_t gi : r.sorted) {
        params[gi] = splat_params(*r.footprints[gi], set[gi]);
    }

    std::vector<double> planes[3] = {std::vector<double>(npix, 0.0), std::vector<double>(npix, 0.0),
                                     std::vector<double>(npix, 0.0)};
    std::vector<std::uint8_t> done(npix, 0);
    const kernels::KernelTable& kt = kernels::active();
    const kernels::CompositeKnobs knobs = knobs_of(cfg);

    for (std::size_t tile = 0; tile < r.tile_lists.size(); ++tile) {
        const auto& list = r.tile_lists[tile];
        if (list.empty()) {
            continue;
        }
        const TileBounds tb = tile_bounds(r, static_cast<int>(tile), ts, width, height);
        for (int y = tb.y0; y <= tb.y1; ++y) {
            const std::size_t row = static_cast<std::size_t>(y) * width;
            for (std::size_t pos = 0; pos < list.size(); ++pos) {
                const std::uint32_t gi = list[pos];
                const PixelFootprint& fp = *r.footprints[gi];
                if (y < fp.y_min || y > fp.y_max) {
                    continue;
                }
                const int x0 = std::max(tb.x0, fp.x_min);
                const int x1 = std::min(tb.x1, fp.x_max);
                if (x0 > x1) {
                    continue;
                }
                const std::size_t o = row + x0;
                const kernels::SpanForward span{r.transmittance.data() + o,
                                                {planes[0].data() + o, planes[1].data() + o,
                                                 planes[2].data() + o},
                                                done.data() + o,
                                                r.last_contributor.data() + o};
                r.contributions[gi] += static_cast<std::uint32_t>(kt.composite_span(
                    params[gi], static_cast<std::int32_t>(pos), y, x0, x1 - x0 + 1, knobs, span));
            }
        }
    }

    r.image = ColorImage(width, height);
    auto data = r.image.data();
    for (std::size_t p = 0; p < npix; ++p) {
        const double t = r.transmittance[p];
        data[3 * p] = planes[0][p] + t * cfg.background.r;
        data[3 * p + 1] = planes[1][p] + t * cfg.background.g;
        data[3 * p + 2] = planes[2][p] + t * cfg.background.b;
    }
    return r;
}

BackwardStats render_backward(GaussianSet& set, const CameraView& view, const RasterConfig& cfg,
                              const ColorGradient& loss_grad, const WeightMap* weights) {
    const RenderResult forward = render(set, view, cfg);
    return render_backward(set, view, cfg, forward, loss_grad, weights);
}

BackwardStats render_backward(GaussianSet& set, const CameraView& view, const RasterConfig& cfg,
                              const RenderResult& forward, const ColorGradient& loss_grad,
                              const WeightMap* weights) {
    const int width = view.intrinsics.width;
    const int height = view.intrinsics.height;
    if (loss_grad.width() != width || loss_grad.height() != height) {
        throw DataError("render_backward: loss gradient is " + std::to_string(loss_grad.width()) +
                        "x" + std::to_string(loss_grad.height()) + ", view '" + view.id + "' is " +
                        std::to_string(width) + "x" + std::to_string(height));
    }
    if (weights && (weights->width() != width || weights->height() != height)) {
        throw DataError("render_backward: weight map size does not match view '" + view.id + "'");
    }
    if (forward.footprints.size() != set.size() ||
        forward.transmittance.size() != static_cast<std::size_t>(width) * height) {
        throw DataError("render_backward: forward result does not match the inputs");
    }

    const std::size_t npix = static_cast<std::size_t>(width) * height;
    std::vector<double> dl[3] = {std::vector<double>(npix), std::vector<double>(npix),
                                 std::vector<double>(npix)};
    const auto grad = loss_grad.data();
    for (std::size_t p = 0; p < npix; ++p) {
        for (int c = 0; c < 3; ++c) {
            dl[c][p] = weights ? grad[3 * p + c] * weights->values()[p] : grad[3 * p + c];
        }
    }

    std::vector<kernels::SplatParams> params(set.size());
    for (std::uint32_t gi : forward.sorted) {
        params[gi] = splat_params(*forward.footprints[gi], set[gi]);
    }

    std::vector<double> t_back = forward.transmittance;
    std::vector<double> accum[3] = {std::vector<double>(npix, 0.0), std::vector<double>(npix, 0.0),
                                    std::vector<double>(npix, 0.0)};
    std::vector<kernels::SplatGrad2D> gradsplatfix(set.size());
    const double background[3] = {cfg.background.r, cfg.background.g, cfg.background.b};
    const kernels::KernelTable& kt = kernels::active();
    const kernels::CompositeKnobs knobs = knobs_of(cfg);
    const int ts = cfg.tile_size;

    for (std::size_t tile = 0; tile < forward.tile_lists.size(); ++tile) {
        const auto& list = forward.tile_lists[tile];
        if (list.empty()) {
            continue;
        }
        const TileBounds tb = tile_bounds(forward, static_cast<int>(tile), ts, width, height);
        for (int y = tb.y0; y <= tb.y1; ++y) {
            const std::size_t row = static_cast<std::size_t>(y) * width;
            std::int32_t max_last = 0;
            for (int x = tb.x0; x <= tb.x1; ++x) {
                max_last = std::max(max_last, forward.last_contributor[row + x]);
            }
            for (std::int32_t pos = max_last - 1; pos >= 0; --pos) {
                const std::uint32_t gi = list[static_cast<std::size_t>(pos)];
                const PixelFootprint& fp = *forward.footprints[gi];
                if (y < fp.y_min || y > fp.y_max) {
                    continue;
                }
                const int x0 = std::max(tb.x0, fp.x_min);
                const int x1 = std::min(tb.x1, fp.x_max);
                if (x0 > x1) {
                    continue;
                }
                const std::size_t o = row + x0;
                const kernels::SpanBackward span{
                    forward.last_contributor.data() + o,
                    forward.transmittance.data() + o,
                    {dl[0].data() + o, dl[1].data() + o, dl[2].data() + o},
                    t_back.data() + o,
                    {accum[0].data() + o, accum[1].data() + o, accum[2].data() + o}};
                kt.backward_span(params[gi], pos, y, x0, x1 - x0 + 1, knobs, background, span,
                                 gradsplatfix[gi]);
            }
        }
    }

    BackwardStats stats;
    stats.mean2d_grad_norm.assign(set.size(), 0.0);
    stats.visible.assign(set.size(), 0);
    const ViewFrame frame = view_frame(view);
    auto all_grads = set.grads();
    for (std::uint32_t gi : forward.sorted) {
        const std::uint32_t n = forward.contributions[gi];
        if (n == 0) {
            continue;
        }
        stats.visible[gi] = 1;
        kernels::SplatGrad2D d = gradsplatfix[gi];
        if (cfg.normalize_by_footprint) {
            const double inv = 1.0 / static_cast<double>(n);
            for (double& c : d.color) {
                c *= inv;
            }
            d.opacity *= inv;
            d.mean_x *= inv;
            d.mean_y *= inv;
            d.conic_a *= inv;
            d.conic_b *= inv;
            d.conic_c *= inv;
        }
        stats.mean2d_grad_norm[gi] = std::hypot(d.mean_x, d.mean_y);
        const GaussianParams g = chain_to_parameters(set[gi], *forward.footprints[gi], view, frame, d);
        for (std::size_t k = 0; k < kParamsPerGaussian; ++k) {
            all_grads[gi][k] += g[k];
        }
    }
    return stats;
}

WeightMap compute_view_weights(const CameraView& view, const pcrender::ConfidenceMask& mask,
                               double beta) {
    if (!(beta >= 0.0 && beta <= 1.0)) {
        throw std::invalid_argument("beta must lie in [0, 1]");
    }
    const int width = view.intrinsics.width;
    const int height = view.intrinsics.height;
    WeightMap w(width, height, 1.0);
    if (view.role == ViewRole::reference) {
        return w;
    }
    if (mask.width() != width || mask.height() != height) {
        throw DataError("compute_view_weights: mask size does not match view '" + view.id + "'");
    }
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            w.set(x, y, beta + (1.0 - beta) * (mask.at(x, y) ? 1.0 : 0.0));
        }
    }
    return w;
}

ColorImage transmittance_image(const RenderResult& result) {
    ColorImage out(result.image.width(), result.image.height());
    auto data = out.data();
    for (std::size_t p = 0; p < result.transmittance.size(); ++p) {
        data[3 * p] = data[3 * p + 1] = data[3 * p + 2] = result.transmittance[p];
    }
    return out;
}

}  // namespace splatfix::splat
