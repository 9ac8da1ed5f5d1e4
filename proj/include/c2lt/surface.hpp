#pragma once

#include <cstdint>
#include <vector>

#include "c2lt/geom.hpp"
#include "c2lt/mesh.hpp"

namespace c2lt {

// Normalized point-normal samples with per-point component ownership.
// Points live in [-1,1]^3; extent is the max axis span after normalization.
struct SurfaceObject {
    std::vector<Vec3> points;
    std::vector<Vec3> normals;
    std::vector<int> component_of;
    double extent = 2.0;

    size_t size() const { return points.size(); }
    int component_count() const;
    std::vector<size_t> component_points(int component) const;
};

// Center at the bounding-box center and uniformly scale so the max axis span
// becomes 2. Normals are recomputed from triangles when absent. Throws
// DataError("degenerate object") on zero-extent input.
SurfaceObject normalize(const RawMesh& mesh);
SurfaceObject normalize(const std::vector<Vec3>& points, const std::vector<Vec3>& normals,
                        const std::vector<int>& component_of);

// Farthest point sampling within one component. First anchor: component point
// farthest from the component centroid (ties by lowest index); each later
// anchor maximizes min distance to the chosen set. k beyond the component
// size returns the whole component. The seed is reserved for optional jitter
// and does not affect the deterministic path.
std::vector<size_t> fps_sample(const SurfaceObject& obj, int component, size_t k,
                               uint64_t seed = 0);

}  // namespace c2lt
