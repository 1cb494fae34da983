#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "splatfix/camera.hpp"
#include "splatfix/core.hpp"
#include "splatfix/image.hpp"

// Guidance rendering of a colored point cloud and the per-view confidence
// mask derived from its coverage.
namespace splatfix::pcrender {

struct GuidancePoint {
    Vec3 position;
    Rgb color;
};

struct GuidancePointCloud {
    std::vector<GuidancePoint> points;
    double point_radius_px = 1.0;

    bool empty() const { return points.empty(); }
    // Throws DataError on out-of-range colors or a non-positive radius.
    void validate() const;
};

class ConfidenceMask {
public:
    ConfidenceMask() = default;
    ConfidenceMask(int width, int height, bool fill = false);

    int width() const { return width_; }
    int height() const { return height_; }
    bool at(int x, int y) const { return bits_[static_cast<std::size_t>(y) * width_ + x] != 0; }
    void set(int x, int y, bool v) { bits_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0; }
    std::size_t popcount() const;

    bool operator==(const ConfidenceMask&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> bits_;
};

// Z-buffered square splats of side 2 * round(radius) + 1 around each projected
// point on a black background. The mask is set exactly where at least one
// point landed. For equal depths the earlier point wins.
std::pair<ColorImage, ConfidenceMask> render_points(const GuidancePointCloud& cloud,
                                                    const CameraView& view,
                                                    double near_plane = kDefaultNearPlane);

double mask_coverage(const ConfidenceMask& mask);

}  // namespace splatfix::pcrender
