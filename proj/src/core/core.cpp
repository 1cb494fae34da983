#include "splatfix/core.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace splatfix {

Quaternion Quaternion::from_axis_angle(const Vec3& axis, double angle) {
    const double h = 0.5 * angle;
    const double s = std::sin(h);
    return {std::cos(h), axis.x * s, axis.y * s, axis.z * s};
}

Quaternion Quaternion::normalized() const {
    const double n = norm();
    if (n == 0.0) {
        throw std::invalid_argument("cannot normalize a zero quaternion");
    }
    return {w / n, x / n, y / n, z / n};
}

Quaternion quat_mul(const Quaternion& a, const Quaternion& b) {
    return {
        a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
        a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
        a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
        a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
    };
}

double geodesic_angle(const Quaternion& a, const Quaternion& b) {
    const double d = std::clamp(std::abs(a.dot(b)), 0.0, 1.0);
    return 2.0 * std::acos(d);
}

Mat3 Mat3::operator*(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            r(i, j) = (*this)(i, 0) * o(0, j) + (*this)(i, 1) * o(1, j) + (*this)(i, 2) * o(2, j);
        }
    }
    return r;
}

Vec3 Mat3::operator*(const Vec3& v) const {
    return {
        m[0] * v.x + m[1] * v.y + m[2] * v.z,
        m[3] * v.x + m[4] * v.y + m[5] * v.z,
        m[6] * v.x + m[7] * v.y + m[8] * v.z,
    };
}

Mat3 Mat3::transposed() const {
    return {{m[0], m[3], m[6], m[1], m[4], m[7], m[2], m[5], m[8]}};
}

double Mat3::determinant() const {
    return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
}

Mat3 quat_to_matrix(const Quaternion& q, double tolerance) {
    const double n = q.norm();
    if (!(std::abs(n - 1.0) <= tolerance)) {
        throw std::invalid_argument("quat_to_matrix: quaternion norm " + std::to_string(n) +
                                    " is not unit");
    }
    const double w = q.w, x = q.x, y = q.y, z = q.z;
    return {{
        1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y),
        2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x),
        2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y),
    }};
}

}  // namespace splatfix
