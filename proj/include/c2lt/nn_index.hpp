#pragma once

#include <cstddef>
#include <vector>

#include "c2lt/geom.hpp"

namespace c2lt {

// Exact nearest-neighbor index over an immutable point set (uniform grid).
// Contract: nearest() returns exactly the distance an exhaustive scan would,
// with ties broken by smallest point index. Safe for concurrent reads.
class NNIndex {
public:
    NNIndex() = default;
    explicit NNIndex(std::vector<Vec3> points);

    bool empty() const { return points_.empty(); }
    size_t size() const { return points_.size(); }
    const std::vector<Vec3>& points() const { return points_; }

    struct Hit {
        double distance = 0.0;
        size_t id = 0;
    };

    // Throws DataError("empty point set") on an empty index.
    Hit nearest(const Vec3& q) const;

    // Squared-distance variant used by the metric kernels.
    Hit nearest_sq(const Vec3& q) const;

    // All point ids with distance <= radius, ascending id order.
    std::vector<size_t> radius_query(const Vec3& q, double radius) const;

    // k smallest by (distance, id); exhaustive, used only on sparse fallbacks.
    std::vector<size_t> knn(const Vec3& q, size_t k) const;

private:
    std::vector<Vec3> points_;
    Vec3 lo_, hi_;
    int dims_[3] = {1, 1, 1};
    double cell_[3] = {1.0, 1.0, 1.0};
    std::vector<std::vector<size_t>> cells_;

    size_t cell_index(int cx, int cy, int cz) const {
        return (size_t(cz) * dims_[1] + cy) * dims_[0] + cx;
    }
    void locate(const Vec3& q, int out[3]) const;
    double cell_box_dist2(const Vec3& q, int cx, int cy, int cz) const;
};

// Serial exhaustive reference path. Kept deliberately simple; the test suite
// holds the grid index to bitwise agreement with these scans.
namespace ref {

NNIndex::Hit nearest_exhaustive(const std::vector<Vec3>& points, const Vec3& q);

}  // namespace ref

}  // namespace c2lt
