#include "c2lt/chart.hpp"

#include <algorithm>
#include <cmath>

#include "c2lt/util.hpp"

namespace c2lt {

namespace {
constexpr double kProjectionFloor = 1e-3;

// Projects v into the plane orthogonal to unit z; returns false when the
// projection is too short to be stable.
bool project_tangent(const Vec3& v, const Vec3& z, Vec3& out) {
    Vec3 t = v - z * v.dot(z);
    if (t.norm() < kProjectionFloor) return false;
    out = t.normalized();
    return true;
}
}  // namespace

Rotation canonical_frame(const Vec3& normal, const std::vector<Vec3>& local_points,
                         const Vec3& reference) {
    Vec3 z = normal.normalized();
    Vec3 x;
    if (!project_tangent(reference, z, x)) {
        Vec3 principal = principal_direction(local_points);
        if (!project_tangent(principal, z, x)) {
            // Smallest-index canonical axis not parallel to the normal.
            for (int axis = 0; axis < 3; ++axis) {
                Vec3 e{axis == 0 ? 1.0 : 0.0, axis == 1 ? 1.0 : 0.0, axis == 2 ? 1.0 : 0.0};
                if (project_tangent(e, z, x)) break;
            }
        }
    }
    // Re-orthogonalize and complete right-handed.
    x = (x - z * x.dot(z)).normalized();
    Vec3 y = z.cross(x);
    return Rotation::from_columns(x, y, z);
}

Chart build_chart(const SurfaceObject& obj, const NNIndex& index, size_t anchor_id, double radius,
                  const Partition& partition, const ChartConfig& cfg) {
    if (anchor_id >= obj.size()) throw DataError("chart anchor out of range");
    const Vec3 anchor = obj.points[anchor_id];

    std::vector<size_t> neighbors;
    for (size_t id : index.radius_query(anchor, radius))
        if (id != anchor_id) neighbors.push_back(id);
    if (neighbors.size() < cfg.min_neighbors) {
        neighbors.clear();
        for (size_t id : index.knn(anchor, cfg.min_neighbors + 1))
            if (id != anchor_id && neighbors.size() < cfg.min_neighbors) neighbors.push_back(id);
        std::sort(neighbors.begin(), neighbors.end());
    }
    if (neighbors.empty()) throw DataError("empty chart");

    std::vector<Vec3> offsets;
    offsets.reserve(neighbors.size());
    double max_r = 0.0;
    for (size_t id : neighbors) {
        Vec3 d = obj.points[id] - anchor;
        max_r = std::max(max_r, d.norm());
        offsets.push_back(d);
    }
    if (max_r <= 0.0) throw DataError("empty chart");

    Chart chart;
    chart.anchor_id = anchor_id;
    chart.anchor = anchor;
    chart.normal = obj.normals[anchor_id].normalized();
    chart.scale = max_r;
    chart.frame = canonical_frame(chart.normal, offsets, cfg.reference_axis);
    chart.partition = partition.assign.empty() ? 0 : partition.assign[anchor_id];
    chart.neighbor_ids = neighbors;

    double inv_s = 1.0 / chart.scale;
    chart.local_points.reserve(neighbors.size());
    chart.local_normals.reserve(neighbors.size());
    for (size_t i = 0; i < neighbors.size(); ++i) {
        chart.local_points.push_back(chart.frame.apply_transposed(offsets[i]) * inv_s);
        chart.local_normals.push_back(chart.frame.apply_transposed(obj.normals[neighbors[i]]));
    }

    // 6D pose residual: frame as axis-angle plus anchor offset from the
    // partition centroid.
    Vec3 aa = chart.frame.to_axis_angle();
    Vec3 centroid{0, 0, 0};
    size_t count = 0;
    for (size_t i = 0; i < obj.size(); ++i) {
        if (!partition.assign.empty() && partition.assign[i] != chart.partition) continue;
        centroid += obj.points[i];
        ++count;
    }
    if (count > 0) centroid = centroid / double(count);
    Vec3 off = anchor - centroid;
    chart.pose_residual = {aa.x, aa.y, aa.z, off.x, off.y, off.z};
    return chart;
}

Vec3 place_back(const Chart& chart, const Vec3& local_point) {
    return chart.anchor + chart.frame.apply(local_point) * chart.scale;
}

std::vector<Chart> build_charts(const SurfaceObject& obj, const Partition& partition,
                                size_t anchors_per_component, const ChartConfig& cfg) {
    NNIndex index(obj.points);
    std::vector<Chart> charts;
    int components = obj.component_count();
    for (int c = 0; c < components; ++c) {
        std::vector<size_t> anchors = fps_sample(obj, c, anchors_per_component);
        for (size_t a : anchors) {
            Chart chart = build_chart(obj, index, a, cfg.radius, partition, cfg);
            chart.id = int(charts.size());
            charts.push_back(std::move(chart));
        }
    }
    return charts;
}

}  // namespace c2lt
