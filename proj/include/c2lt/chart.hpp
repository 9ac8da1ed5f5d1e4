#pragma once

#include <array>
#include <optional>
#include <vector>

#include "c2lt/geom.hpp"
#include "c2lt/nn_index.hpp"
#include "c2lt/partition.hpp"
#include "c2lt/surface.hpp"
#include "c2lt/tokenizer_types.hpp"

namespace c2lt {

// One localized surface neighborhood in its canonical local frame.
struct Chart {
    int id = -1;
    size_t anchor_id = 0;
    Vec3 anchor;
    Vec3 normal;
    double scale = 0.0;  // max neighbor distance before normalization
    Rotation frame;      // columns x,y,z; z = anchor normal
    int partition = 0;
    std::vector<size_t> neighbor_ids;     // object point ids of the support
    std::vector<Vec3> local_points;       // s^-1 R^T (X - a)
    std::vector<Vec3> local_normals;      // R^T n
    std::optional<TokenPair> token;
    std::array<double, 6> pose_residual = {0, 0, 0, 0, 0, 0};

    Pose pose() const { return Pose{frame, anchor, scale}; }
};

struct ChartConfig {
    double radius = 0.15;
    size_t min_neighbors = 8;
    Vec3 reference_axis{1.0, 0.0, 0.0};
};

// Deterministic right-handed frame: z follows the normal; the tangent comes
// from the reference projected into the tangent plane, falling back to the
// principal covariance direction of the local points, then to the
// smallest-index canonical axis not parallel to the normal.
Rotation canonical_frame(const Vec3& normal, const std::vector<Vec3>& local_points,
                         const Vec3& reference);

// Neighborhood = points within radius of the anchor (anchor excluded),
// expanded to min_neighbors nearest points when the ball is sparse.
Chart build_chart(const SurfaceObject& obj, const NNIndex& index, size_t anchor_id, double radius,
                  const Partition& partition, const ChartConfig& cfg = {});

// q = a + s R q~  (exact inverse of the chart normalization).
Vec3 place_back(const Chart& chart, const Vec3& local_point);

// All charts of an object: FPS anchors per component, charts built per
// anchor. anchors_per_component bounds the per-component chart count.
std::vector<Chart> build_charts(const SurfaceObject& obj, const Partition& partition,
                                size_t anchors_per_component, const ChartConfig& cfg);

}  // namespace c2lt
