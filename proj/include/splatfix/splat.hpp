#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "splatfix/camera.hpp"
#include "splatfix/gaussian.hpp"
#include "splatfix/image.hpp"
#include "splatfix/kernels.hpp"
#include "splatfix/pcrender.hpp"

// Tile-based forward rasterization of a GaussianSet and its confidence-weighted
// backward pass.
namespace splatfix::splat {

struct RasterConfig {
    int tile_size = 16;
    double alpha_threshold = 1.0 / 255.0;
    double alpha_cap = 0.99;
    double transmittance_floor = 1e-4;
    double covariance_blur = 0.3;  // px^2 added to the 2D covariance diagonal
    double near_plane = kDefaultNearPlane;
    Rgb background{0.0, 0.0, 0.0};
    // Divide each Gaussian's per-view gradient by the number of pixels it
    // contributed to.
    bool normalize_by_footprint = true;

    // Throws std::invalid_argument.
    void validate() const;
};

// Everything the backward pass needs about one projected Gaussian.
struct PixelFootprint {
    double mean_x = 0.0;
    double mean_y = 0.0;
    double cov_a = 0.0;  // regularized 2D covariance [[a, b], [b, c]], px^2
    double cov_b = 0.0;
    double cov_c = 0.0;
    double conic_a = 0.0;
    double conic_b = 0.0;
    double conic_c = 0.0;
    double depth = 0.0;
    int x_min = 0;  // inclusive pixel bounds of the 3-sigma ellipse, clipped
    int x_max = 0;
    int y_min = 0;
    int y_max = 0;

    Vec3 camera_point;   // Gaussian center in the camera frame
    Quaternion unit_rotation;
    double rotation_norm = 1.0;
    Mat3 rotation;       // of the Gaussian
    Vec3 scale;
    Mat3 covariance3d;
    std::array<double, 6> projection{};  // 2x3 row-major Jacobian times view rotation

    std::size_t pixel_count() const {
        return static_cast<std::size_t>(x_max - x_min + 1) * static_cast<std::size_t>(y_max - y_min + 1);
    }
};

// EWA projection. nullopt when the center is at or behind the near plane or
// the clipped bounding box is empty.
std::optional<PixelFootprint> project_gaussian(const Gaussian& g, const CameraView& view,
                                               const RasterConfig& cfg);

// Forward output plus the state the backward pass replays.
struct RenderResult {
    ColorImage image;
    std::vector<double> transmittance;  // final per-pixel transmittance

    std::vector<std::optional<PixelFootprint>> footprints;  // per Gaussian
    std::vector<std::uint32_t> contributions;  // pixels each Gaussian contributed to
    std::vector<std::uint32_t> sorted;         // visible Gaussians, front to back
    int tiles_x = 0;
    int tiles_y = 0;
    std::vector<std::vector<std::uint32_t>> tile_lists;  // Gaussian indices, front to back
    std::vector<std::int32_t> last_contributor;          // per pixel, within its tile list
};

RenderResult render(const GaussianSet& set, const CameraView& view, const RasterConfig& cfg);

struct BackwardStats {
    // Norm of the (normalized, weighted) gradient on each projected 2D mean.
    std::vector<double> mean2d_grad_norm;
    // Gaussians that contributed to at least one pixel.
    std::vector<std::uint8_t> visible;
};

// Accumulates dL/dparams into set.grads(). Each pixel's dL/dColor is scaled by
// weights(x, y) before it flows to any Gaussian; nullptr means unweighted.
// Throws DataError on a size mismatch.
BackwardStats render_backward(GaussianSet& set, const CameraView& view, const RasterConfig& cfg,
                              const ColorGradient& loss_grad, const WeightMap* weights);

// Same, replaying a forward result computed from the same inputs.
BackwardStats render_backward(GaussianSet& set, const CameraView& view, const RasterConfig& cfg,
                              const RenderResult& forward, const ColorGradient& loss_grad,
                              const WeightMap* weights);

// All ones for reference views; beta + (1 - beta) * mask for novel views.
WeightMap compute_view_weights(const CameraView& view, const pcrender::ConfidenceMask& mask,
                               double beta);

// Renders the final transmittance as a grayscale image.
ColorImage transmittance_image(const RenderResult& result);

}  // namespace splatfix::splat
