#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "splatfix/core.hpp"
#include "splatfix/image.hpp"

namespace splatfix {

struct Intrinsics {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 1;
    int height = 1;

    bool operator==(const Intrinsics&) const = default;
};

// World-to-camera rigid transform: p_cam = R(rotation) * p_world + translation.
struct Pose {
    Quaternion rotation;
    Vec3 translation;

    Vec3 to_camera(const Vec3& world) const;
    Vec3 camera_center() const;

    bool operator==(const Pose&) const = default;
};

enum class ViewRole { reference, novel };

std::string_view to_string(ViewRole role);

struct CameraView {
    std::string id;
    Intrinsics intrinsics;
    Pose pose;
    ViewRole role = ViewRole::reference;
    std::optional<ColorImage> target;
    std::optional<WeightMap> weight_map;

    // Throws DataError when an invariant is broken.
    void validate() const;
};

inline constexpr double kDefaultNearPlane = 1e-4;

struct Projection {
    double u = 0.0;
    double v = 0.0;
    double depth = 0.0;
};

// Pinhole projection with pixel centers at integer coordinates. Returns
// nullopt when the camera-frame depth is at or below `near_plane`.
std::optional<Projection> project_point(const CameraView& view, const Vec3& world,
                                        double near_plane = kDefaultNearPlane);

// Pose whose camera sits at `eye` and looks at `target`; camera frame is
// x right, y down, z forward.
Pose look_at(const Vec3& eye, const Vec3& target, const Vec3& up);

}  // namespace splatfix
