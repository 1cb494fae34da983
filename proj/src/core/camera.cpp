#include "splatfix/camera.hpp"

#include <cmath>

#include "splatfix/error.hpp"

namespace splatfix {

Vec3 Pose::to_camera(const Vec3& world) const {
    return quat_to_matrix(rotation.normalized()) * world + translation;
}

Vec3 Pose::camera_center() const {
    const Mat3 r = quat_to_matrix(rotation.normalized());
    return -(r.transposed() * translation);
}

std::string_view to_string(ViewRole role) {
    return role == ViewRole::reference ? "reference" : "novel";
}

void CameraView::validate() const {
    const Intrinsics& k = intrinsics;
    if (!(k.fx > 0.0) || !(k.fy > 0.0)) {
        throw DataError("camera '" + id + "': fx and fy must be positive");
    }
    if (k.width < 1 || k.height < 1) {
        throw DataError("camera '" + id + "': width and height must be at least 1");
    }
    if (role == ViewRole::reference && !target) {
        throw DataError("camera '" + id + "': reference view has no target image");
    }
    if (target && (target->width() != k.width || target->height() != k.height)) {
        throw DataError("camera '" + id + "': target image size does not match intrinsics");
    }
    if (weight_map && (weight_map->width() != k.width || weight_map->height() != k.height)) {
        throw DataError("camera '" + id + "': weight map size does not match intrinsics");
    }
}

std::optional<Projection> project_point(const CameraView& view, const Vec3& world,
                                        double near_plane) {
    const Vec3 p = view.pose.to_camera(world);
    if (p.z <= near_plane) {
        return std::nullopt;
    }
    const Intrinsics& k = view.intrinsics;
    return Projection{k.fx * p.x / p.z + k.cx, k.fy * p.y / p.z + k.cy, p.z};
}

Pose look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
    const Vec3 fwd = (target - eye) * (1.0 / (target - eye).norm());
    Vec3 right = fwd.cross(up);
    right = right * (1.0 / right.norm());
    const Vec3 down = fwd.cross(right);
    // Rows of the world-to-camera rotation are the camera axes in world space.
    Mat3 r{{right.x, right.y, right.z, down.x, down.y, down.z, fwd.x, fwd.y, fwd.z}};

    // Matrix to quaternion (Shepperd).
    Quaternion q;
    const double tr = r(0, 0) + r(1, 1) + r(2, 2);
    if (tr > 0.0) {
        const double s = 2.0 * std::sqrt(tr + 1.0);
        q = {0.25 * s, (r(2, 1) - r(1, 2)) / s, (r(0, 2) - r(2, 0)) / s, (r(1, 0) - r(0, 1)) / s};
    } else if (r(0, 0) > r(1, 1) && r(0, 0) > r(2, 2)) {
        const double s = 2.0 * std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2));
        q = {(r(2, 1) - r(1, 2)) / s, 0.25 * s, (r(0, 1) + r(1, 0)) / s, (r(0, 2) + r(2, 0)) / s};
    } else if (r(1, 1) > r(2, 2)) {
        const double s = 2.0 * std::sqrt(1.0 + r(1, 1) - r(0, 0) - r(2, 2));
        q = {(r(0, 2) - r(2, 0)) / s, (r(0, 1) + r(1, 0)) / s, 0.25 * s, (r(1, 2) + r(2, 1)) / s};
    } else {
        const double s = 2.0 * std::sqrt(1.0 + r(2, 2) - r(0, 0) - r(1, 1));
        q = {(r(1, 0) - r(0, 1)) / s, (r(0, 2) + r(2, 0)) / s, (r(1, 2) + r(2, 1)) / s, 0.25 * s};
    }
    q = q.normalized();
    const Mat3 rq = quat_to_matrix(q);
    return {q, -(rq * eye)};
}

}  // namespace splatfix
