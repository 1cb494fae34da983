#pragma once

#include <array>
#include <cmath>

namespace splatfix {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    constexpr Vec3& operator+=(const Vec3& o) {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    constexpr bool operator==(const Vec3&) const = default;

    constexpr double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    constexpr Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }
};

// Hamilton-convention quaternion, scalar part first.
struct Quaternion {
    double w = 1.0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    static constexpr Quaternion identity() { return {}; }
    // Rotation by `angle` radians about the unit vector `axis`.
    static Quaternion from_axis_angle(const Vec3& axis, double angle);

    constexpr bool operator==(const Quaternion&) const = default;

    double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
    Quaternion normalized() const;
    constexpr Quaternion conjugate() const { return {w, -x, -y, -z}; }
    constexpr double dot(const Quaternion& o) const {
        return w * o.w + x * o.x + y * o.y + z * o.z;
    }
};

inline constexpr double kUnitQuaternionTolerance = 1e-6;

Quaternion quat_mul(const Quaternion& a, const Quaternion& b);

// Rotation angle in [0, pi] taking unit quaternion a to unit quaternion b.
double geodesic_angle(const Quaternion& a, const Quaternion& b);

struct Mat3 {
    std::array<double, 9> m{};  // row-major

    static constexpr Mat3 identity() { return {{1, 0, 0, 0, 1, 0, 0, 0, 1}}; }

    constexpr double& operator()(int r, int c) { return m[r * 3 + c]; }
    constexpr double operator()(int r, int c) const { return m[r * 3 + c]; }

    Mat3 operator*(const Mat3& o) const;
    Vec3 operator*(const Vec3& v) const;
    Mat3 transposed() const;
    double determinant() const;

    bool operator==(const Mat3&) const = default;
};

// Rotation matrix of a unit quaternion. Throws std::invalid_argument when
// |q| deviates from 1 by more than `tolerance`.
Mat3 quat_to_matrix(const Quaternion& q, double tolerance = kUnitQuaternionTolerance);

struct Rgb {
    double r = 0.0;
    double g = 0.0;
    double b = 0.0;

    constexpr bool operator==(const Rgb&) const = default;
    constexpr double operator[](int c) const { return c == 0 ? r : (c == 1 ? g : b); }
};

}  // namespace splatfix
