#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "c2lt/util.hpp"

namespace c2lt {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3() = default;
    Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3& operator+=(const Vec3& o) {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    Vec3& operator-=(const Vec3& o) {
        x -= o.x;
        y -= o.y;
        z -= o.z;
        return *this;
    }
    Vec3& operator*=(double s) {
        x *= s;
        y *= s;
        z *= s;
        return *this;
    }

    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm2() const { return x * x + y * y + z * z; }
    double norm() const { return std::sqrt(norm2()); }
    Vec3 normalized() const {
        double n = norm();
        if (n < 1e-300) return {0.0, 0.0, 0.0};
        return {x / n, y / n, z / n};
    }
    bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
    void set(int i, double v) {
        if (i == 0)
            x = v;
        else if (i == 1)
            y = v;
        else
            z = v;
    }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

// Single shared squared-distance kernel. Both the accelerated index and the
// serial reference go through this so distances compare bitwise equal.
inline double squared_dist(const Vec3& a, const Vec3& b) {
    double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
    return dx * dx + dy * dy + dz * dz;
}

// Right-handed 3x3 rotation, row-major storage.
struct Rotation {
    std::array<double, 9> m = {1, 0, 0, 0, 1, 0, 0, 0, 1};

    static Rotation identity() { return Rotation{}; }
    static Rotation from_columns(const Vec3& cx, const Vec3& cy, const Vec3& cz);
    static Rotation axis_angle(const Vec3& axis, double angle);

    Vec3 apply(const Vec3& v) const {
        return {m[0] * v.x + m[1] * v.y + m[2] * v.z, m[3] * v.x + m[4] * v.y + m[5] * v.z,
                m[6] * v.x + m[7] * v.y + m[8] * v.z};
    }
    Vec3 apply_transposed(const Vec3& v) const {
        return {m[0] * v.x + m[3] * v.y + m[6] * v.z, m[1] * v.x + m[4] * v.y + m[7] * v.z,
                m[2] * v.x + m[5] * v.y + m[8] * v.z};
    }
    Rotation transposed() const;
    Rotation operator*(const Rotation& o) const;

    Vec3 column(int c) const { return {m[c], m[3 + c], m[6 + c]}; }
    double det() const;
    // Max abs deviation of R^T R from identity.
    double orthonormality_error() const;
    // Rotation angle-axis encoding; zero vector for identity.
    Vec3 to_axis_angle() const;
};

struct Pose {
    Rotation rotation;
    Vec3 translation;
    double scale = 1.0;

    static Pose identity() { return Pose{}; }

    Vec3 apply(const Vec3& v) const { return translation + rotation.apply(v) * scale; }
    Pose inverse() const;
};

// Applying the result equals applying inner then outer; scale multiplies.
Pose compose(const Pose& outer, const Pose& inner);

// Cyclic Jacobi eigendecomposition for small symmetric matrices (row-major
// n x n). Eigenvalues returned descending with matching eigenvector columns.
// Deterministic sweep order; eigenvector sign fixed so the entry of largest
// magnitude is positive.
void jacobi_eigen_sym(int n, const std::vector<double>& a, std::vector<double>& eigenvalues,
                      std::vector<double>& eigenvectors);

// Principal axis (largest-eigenvalue direction) of a 3x3 covariance built
// from the given points about their mean.
Vec3 principal_direction(const std::vector<Vec3>& points);

}  // namespace c2lt
