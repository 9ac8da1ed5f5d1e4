#include "c2lt/geom.hpp"

#include <algorithm>
#include <cmath>

namespace c2lt {

Rotation Rotation::from_columns(const Vec3& cx, const Vec3& cy, const Vec3& cz) {
    Rotation r;
    r.m = {cx.x, cy.x, cz.x, cx.y, cy.y, cz.y, cx.z, cy.z, cz.z};
    return r;
}

Rotation Rotation::axis_angle(const Vec3& axis, double angle) {
    Vec3 k = axis.normalized();
    double c = std::cos(angle), s = std::sin(angle), t = 1.0 - c;
    Rotation r;
    r.m = {t * k.x * k.x + c,       t * k.x * k.y - s * k.z, t * k.x * k.z + s * k.y,
           t * k.x * k.y + s * k.z, t * k.y * k.y + c,       t * k.y * k.z - s * k.x,
           t * k.x * k.z - s * k.y, t * k.y * k.z + s * k.x, t * k.z * k.z + c};
    return r;
}

Rotation Rotation::transposed() const {
    Rotation r;
    r.m = {m[0], m[3], m[6], m[1], m[4], m[7], m[2], m[5], m[8]};
    return r;
}

Rotation Rotation::operator*(const Rotation& o) const {
    Rotation r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += m[i * 3 + k] * o.m[k * 3 + j];
            r.m[i * 3 + j] = s;
        }
    return r;
}

double Rotation::det() const {
    return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
}

double Rotation::orthonormality_error() const {
    double err = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += m[k * 3 + i] * m[k * 3 + j];
            err = std::max(err, std::abs(s - (i == j ? 1.0 : 0.0)));
        }
    return err;
}

Vec3 Rotation::to_axis_angle() const {
    double tr = m[0] + m[4] + m[8];
    double c = std::clamp((tr - 1.0) * 0.5, -1.0, 1.0);
    double angle = std::acos(c);
    if (angle < 1e-12) return {0.0, 0.0, 0.0};
    Vec3 w{m[7] - m[5], m[2] - m[6], m[3] - m[1]};
    double s = w.norm();
    if (s > 1e-9) return w * (angle / s);
    // angle near pi: extract axis from R + I diagonal.
    Vec3 axis{std::sqrt(std::max(0.0, (m[0] + 1.0) * 0.5)),
              std::sqrt(std::max(0.0, (m[4] + 1.0) * 0.5)),
              std::sqrt(std::max(0.0, (m[8] + 1.0) * 0.5))};
    // Fix signs using off-diagonal sums.
    if (axis.x >= axis.y && axis.x >= axis.z) {
        if (m[1] + m[3] < 0.0) axis.y = -axis.y;
        if (m[2] + m[6] < 0.0) axis.z = -axis.z;
    } else if (axis.y >= axis.z) {
        if (m[1] + m[3] < 0.0) axis.x = -axis.x;
        if (m[5] + m[7] < 0.0) axis.z = -axis.z;
    } else {
        if (m[2] + m[6] < 0.0) axis.x = -axis.x;
        if (m[5] + m[7] < 0.0) axis.y = -axis.y;
    }
    return axis.normalized() * angle;
}

Pose Pose::inverse() const {
    Pose inv;
    inv.rotation = rotation.transposed();
    inv.scale = 1.0 / scale;
    inv.translation = inv.rotation.apply(translation) * (-inv.scale);
    return inv;
}

Pose compose(const Pose& outer, const Pose& inner) {
    Pose r;
    r.rotation = outer.rotation * inner.rotation;
    r.translation = outer.translation + outer.rotation.apply(inner.translation) * outer.scale;
    r.scale = outer.scale * inner.scale;
    return r;
}

void jacobi_eigen_sym(int n, const std::vector<double>& a_in, std::vector<double>& eigenvalues,
                      std::vector<double>& eigenvectors) {
    std::vector<double> a = a_in;
    std::vector<double> v(size_t(n) * n, 0.0);
    for (int i = 0; i < n; ++i) v[size_t(i) * n + i] = 1.0;

    auto at = [&](int i, int j) -> double& { return a[size_t(i) * n + j]; };
    auto vt = [&](int i, int j) -> double& { return v[size_t(i) * n + j]; };

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += at(p, q) * at(p, q);
        if (off < 1e-28) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                double apq = at(p, q);
                if (std::abs(apq) < 1e-300) continue;
                double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
                double t = (theta >= 0.0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (int k = 0; k < n; ++k) {
                    double akp = at(k, p), akq = at(k, q);
                    at(k, p) = c * akp - s * akq;
                    at(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    double apk = at(p, k), aqk = at(q, k);
                    at(p, k) = c * apk - s * aqk;
                    at(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    double vkp = vt(k, p), vkq = vt(k, q);
                    vt(k, p) = c * vkp - s * vkq;
                    vt(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](int i, int j) { return at(i, i) > at(j, j); });

    eigenvalues.assign(n, 0.0);
    eigenvectors.assign(size_t(n) * n, 0.0);
    for (int c = 0; c < n; ++c) {
        int src = order[c];
        eigenvalues[c] = at(src, src);
        // Sign convention: largest-magnitude entry positive.
        int arg = 0;
        double best = 0.0;
        for (int r = 0; r < n; ++r) {
            double mag = std::abs(vt(r, src));
            if (mag > best + 1e-15) {
                best = mag;
                arg = r;
            }
        }
        double sign = vt(arg, src) < 0.0 ? -1.0 : 1.0;
        for (int r = 0; r < n; ++r) eigenvectors[size_t(r) * n + c] = sign * vt(r, src);
    }
}

Vec3 principal_direction(const std::vector<Vec3>& points) {
    if (points.empty()) return {1.0, 0.0, 0.0};
    Vec3 mean{0, 0, 0};
    for (const auto& p : points) mean += p;
    mean = mean / double(points.size());
    std::vector<double> cov(9, 0.0);
    for (const auto& p : points) {
        Vec3 d = p - mean;
        double dd[3] = {d.x, d.y, d.z};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) cov[size_t(i) * 3 + j] += dd[i] * dd[j];
    }
    for (auto& c : cov) c /= double(points.size());
    std::vector<double> evals, evecs;
    jacobi_eigen_sym(3, cov, evals, evecs);
    return Vec3{evecs[0], evecs[3], evecs[6]};
}

}  // namespace c2lt
