#pragma once

// Minimal 3-vector / 3x3-matrix linear algebra for frame rotations and
// trajectory bookkeeping. Hand-rolled (no Eigen) to keep the numeric core
// dependency-free and bit-reproducible across toolchains.

#include <array>
#include <cmath>

namespace fanet {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3& operator+=(const Vec3& o) {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    constexpr double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(dot(*this)); }
};

inline constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

// Row-major 3x3 matrix.
struct Mat3 {
    std::array<std::array<double, 3>, 3> m{};

    static constexpr Mat3 identity() {
        Mat3 r;
        r.m = {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
        return r;
    }

    constexpr Vec3 operator*(const Vec3& v) const {
        return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
                m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
                m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
    }

    constexpr Mat3 operator*(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double s = 0.0;
                for (int k = 0; k < 3; ++k) s += m[i][k] * o.m[k][j];
                r.m[i][j] = s;
            }
        return r;
    }

    constexpr Mat3 transpose() const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r.m[i][j] = m[j][i];
        return r;
    }

    // max |a_ij - b_ij|, used by orthonormality checks
    double max_abs_diff(const Mat3& o) const {
        double w = 0.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) w = std::max(w, std::fabs(m[i][j] - o.m[i][j]));
        return w;
    }
};

}  // namespace fanet
