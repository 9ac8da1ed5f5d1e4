#include "c2lt/nn_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace c2lt {

NNIndex::NNIndex(std::vector<Vec3> points) : points_(std::move(points)) {
    if (points_.empty()) return;
    lo_ = hi_ = points_[0];
    for (const auto& p : points_) {
        lo_.x = std::min(lo_.x, p.x);
        lo_.y = std::min(lo_.y, p.y);
        lo_.z = std::min(lo_.z, p.z);
        hi_.x = std::max(hi_.x, p.x);
        hi_.y = std::max(hi_.y, p.y);
        hi_.z = std::max(hi_.z, p.z);
    }
    int target = std::max(1, int(std::cbrt(double(points_.size()))));
    target = std::min(target, 64);
    for (int a = 0; a < 3; ++a) {
        double span = (a == 0 ? hi_.x - lo_.x : a == 1 ? hi_.y - lo_.y : hi_.z - lo_.z);
        dims_[a] = span > 0.0 ? target : 1;
        cell_[a] = dims_[a] > 0 && span > 0.0 ? span / dims_[a] : 1.0;
    }
    cells_.assign(size_t(dims_[0]) * dims_[1] * dims_[2], {});
    for (size_t i = 0; i < points_.size(); ++i) {
        int c[3];
        locate(points_[i], c);
        cells_[cell_index(c[0], c[1], c[2])].push_back(i);
    }
    // Ascending ids within each cell (insertion order already ascending).
}

void NNIndex::locate(const Vec3& q, int out[3]) const {
    double qa[3] = {q.x, q.y, q.z};
    double la[3] = {lo_.x, lo_.y, lo_.z};
    for (int a = 0; a < 3; ++a) {
        int c = int(std::floor((qa[a] - la[a]) / cell_[a]));
        out[a] = std::clamp(c, 0, dims_[a] - 1);
    }
}

double NNIndex::cell_box_dist2(const Vec3& q, int cx, int cy, int cz) const {
    int c[3] = {cx, cy, cz};
    double qa[3] = {q.x, q.y, q.z};
    double la[3] = {lo_.x, lo_.y, lo_.z};
    double d2 = 0.0;
    for (int a = 0; a < 3; ++a) {
        double b0 = la[a] + c[a] * cell_[a];
        double b1 = la[a] + (c[a] + 1) * cell_[a];
        double d = qa[a] < b0 ? b0 - qa[a] : (qa[a] > b1 ? qa[a] - b1 : 0.0);
        d2 += d * d;
    }
    return d2;
}

NNIndex::Hit NNIndex::nearest_sq(const Vec3& q) const {
    if (points_.empty()) throw DataError("empty point set");
    int start[3];
    locate(q, start);
    double best_d2 = std::numeric_limits<double>::infinity();
    size_t best_id = 0;
    bool found = false;
    int max_ring = std::max({dims_[0], dims_[1], dims_[2]});
    for (int r = 0; r <= max_ring; ++r) {
        double ring_min = std::numeric_limits<double>::infinity();
        bool any_cell = false;
        int x0 = start[0] - r, x1 = start[0] + r;
        int y0 = start[1] - r, y1 = start[1] + r;
        int z0 = start[2] - r, z1 = start[2] + r;
        for (int cz = z0; cz <= z1; ++cz) {
            if (cz < 0 || cz >= dims_[2]) continue;
            for (int cy = y0; cy <= y1; ++cy) {
                if (cy < 0 || cy >= dims_[1]) continue;
                for (int cx = x0; cx <= x1; ++cx) {
                    if (cx < 0 || cx >= dims_[0]) continue;
                    // Shell only: skip interior cells already visited.
                    if (r > 0 && cx != x0 && cx != x1 && cy != y0 && cy != y1 && cz != z0 &&
                        cz != z1)
                        continue;
                    any_cell = true;
                    double box_d2 = cell_box_dist2(q, cx, cy, cz);
                    ring_min = std::min(ring_min, box_d2);
                    if (found && box_d2 > best_d2) continue;
                    for (size_t id : cells_[cell_index(cx, cy, cz)]) {
                        double d2 = squared_dist(q, points_[id]);
                        if (!found || d2 < best_d2 || (d2 == best_d2 && id < best_id)) {
                            best_d2 = d2;
                            best_id = id;
                            found = true;
                        }
                    }
                }
            }
        }
        if (found && (!any_cell || ring_min > best_d2)) break;
    }
    return {best_d2, best_id};
}

NNIndex::Hit NNIndex::nearest(const Vec3& q) const {
    Hit h = nearest_sq(q);
    h.distance = std::sqrt(h.distance);
    return h;
}

std::vector<size_t> NNIndex::radius_query(const Vec3& q, double radius) const {
    std::vector<size_t> out;
    if (points_.empty() || radius < 0.0) return out;
    double r2 = radius * radius;
    int clo[3], chi[3];
    locate({q.x - radius, q.y - radius, q.z - radius}, clo);
    locate({q.x + radius, q.y + radius, q.z + radius}, chi);
    for (int cz = clo[2]; cz <= chi[2]; ++cz)
        for (int cy = clo[1]; cy <= chi[1]; ++cy)
            for (int cx = clo[0]; cx <= chi[0]; ++cx) {
                if (cell_box_dist2(q, cx, cy, cz) > r2) continue;
                for (size_t id : cells_[cell_index(cx, cy, cz)])
                    if (squared_dist(q, points_[id]) <= r2) out.push_back(id);
            }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<size_t> NNIndex::knn(const Vec3& q, size_t k) const {
    std::vector<std::pair<double, size_t>> all;
    all.reserve(points_.size());
    for (size_t i = 0; i < points_.size(); ++i) all.emplace_back(squared_dist(q, points_[i]), i);
    k = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + k, all.end());
    std::vector<size_t> out(k);
    for (size_t i = 0; i < k; ++i) out[i] = all[i].second;
    return out;
}

namespace ref {

NNIndex::Hit nearest_exhaustive(const std::vector<Vec3>& points, const Vec3& q) {
    if (points.empty()) throw DataError("empty point set");
    double best = std::numeric_limits<double>::infinity();
    size_t best_id = 0;
    for (size_t i = 0; i < points.size(); ++i) {
        double d2 = squared_dist(q, points[i]);
        if (d2 < best) {
            best = d2;
            best_id = i;
        }
    }
    return {std::sqrt(best), best_id};
}

}  // namespace ref

}  // namespace c2lt
