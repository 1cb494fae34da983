#include "splatfix/pcrender.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "splatfix/error.hpp"

namespace splatfix::pcrender {

void GuidancePointCloud::validate() const {
    if (!(point_radius_px > 0.0)) {
        throw DataError("point cloud: point radius must be positive");
    }
    for (const auto& p : points) {
        for (int c = 0; c < 3; ++c) {
            if (!(p.color[c] >= 0.0 && p.color[c] <= 1.0)) {
                throw DataError("point cloud: color channel outside [0, 1]");
            }
        }
    }
}

ConfidenceMask::ConfidenceMask(int width, int height, bool fill)
    : width_(width), height_(height),
      bits_(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0), fill ? 1 : 0) {}

std::size_t ConfidenceMask::popcount() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::pair<ColorImage, ConfidenceMask> render_points(const GuidancePointCloud& cloud,
                                                    const CameraView& view, double near_plane) {
    const int w = view.intrinsics.width;
    const int h = view.intrinsics.height;
    ColorImage image(w, h);
    ConfidenceMask mask(w, h);
    if (cloud.empty()) {
        return {std::move(image), std::move(mask)};
    }

    const Mat3 rot = quat_to_matrix(view.pose.rotation.normalized());
    const Intrinsics& k = view.intrinsics;
    const int radius = std::max(0, static_cast<int>(std::floor(cloud.point_radius_px + 0.5)));
    std::vector<double> depth(static_cast<std::size_t>(w) * h, std::numeric_limits<double>::infinity());

    for (const auto& point : cloud.points) {
        const Vec3 p = rot * point.position + view.pose.translation;
        if (p.z <= near_plane) {
            continue;
        }
        const double u = k.fx * p.x / p.z + k.cx;
        const double v = k.fy * p.y / p.z + k.cy;
        if (!std::isfinite(u) || !std::isfinite(v)) {
            continue;
        }
        const double px = std::floor(u + 0.5);
        const double py = std::floor(v + 0.5);
        if (px + radius < 0.0 || px - radius > w - 1 || py + radius < 0.0 || py - radius > h - 1) {
            continue;
        }
        const int cx = static_cast<int>(px);
        const int cy = static_cast<int>(py);
        for (int y = std::max(0, cy - radius); y <= std::min(h - 1, cy + radius); ++y) {
            for (int x = std::max(0, cx - radius); x <= std::min(w - 1, cx + radius); ++x) {
                double& zb = depth[static_cast<std::size_t>(y) * w + x];
                if (p.z < zb) {
                    zb = p.z;
                    image.set(x, y, point.color);
                    mask.set(x, y, true);
                }
            }
        }
    }
    return {std::move(image), std::move(mask)};
}

double mask_coverage(const ConfidenceMask& mask) {
    const std::size_t n = static_cast<std::size_t>(mask.width()) * mask.height();
    return n == 0 ? 0.0 : static_cast<double>(mask.popcount()) / static_cast<double>(n);
}

}  // namespace splatfix::pcrender
