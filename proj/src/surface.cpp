#include "c2lt/surface.hpp"

#include <algorithm>
#include <limits>

#include "c2lt/util.hpp"

namespace c2lt {

int SurfaceObject::component_count() const {
    int n = 0;
    for (int c : component_of) n = std::max(n, c + 1);
    return n;
}

std::vector<size_t> SurfaceObject::component_points(int component) const {
    std::vector<size_t> out;
    for (size_t i = 0; i < component_of.size(); ++i)
        if (component_of[i] == component) out.push_back(i);
    return out;
}

namespace {

SurfaceObject normalize_impl(std::vector<Vec3> points, std::vector<Vec3> normals,
                             std::vector<int> component_of) {
    if (points.empty()) throw DataError("degenerate object");
    Vec3 lo = points[0], hi = points[0];
    for (const auto& p : points) {
        lo.x = std::min(lo.x, p.x);
        lo.y = std::min(lo.y, p.y);
        lo.z = std::min(lo.z, p.z);
        hi.x = std::max(hi.x, p.x);
        hi.y = std::max(hi.y, p.y);
        hi.z = std::max(hi.z, p.z);
    }
    double span = std::max({hi.x - lo.x, hi.y - lo.y, hi.z - lo.z});
    if (span <= 0.0) throw DataError("degenerate object");
    Vec3 center = (lo + hi) * 0.5;
    double scale = 2.0 / span;
    for (auto& p : points) p = (p - center) * scale;

    SurfaceObject obj;
    obj.points = std::move(points);
    obj.normals = std::move(normals);
    obj.component_of = std::move(component_of);
    obj.extent = 2.0;
    for (auto& n : obj.normals) n = n.normalized();
    return obj;
}

}  // namespace

SurfaceObject normalize(const RawMesh& mesh_in) {
    RawMesh mesh = prune_mesh(mesh_in);
    if (mesh.vertices.empty()) throw DataError("degenerate object");
    std::vector<Vec3> normals =
        mesh.has_normals() ? mesh.vertex_normals : compute_vertex_normals(mesh);
    return normalize_impl(mesh.vertices, normals, mesh_components(mesh));
}

SurfaceObject normalize(const std::vector<Vec3>& points, const std::vector<Vec3>& normals,
                        const std::vector<int>& component_of) {
    std::vector<Vec3> n = normals;
    if (n.size() != points.size()) n.assign(points.size(), Vec3{0, 0, 1});
    std::vector<int> comp = component_of;
    if (comp.size() != points.size()) comp.assign(points.size(), 0);
    return normalize_impl(points, n, comp);
}

std::vector<size_t> fps_sample(const SurfaceObject& obj, int component, size_t k,
                               uint64_t /*seed*/) {
    std::vector<size_t> ids = obj.component_points(component);
    if (ids.empty()) throw DataError("unknown component " + std::to_string(component));
    if (k == 0) throw DataError("fps_sample requires k >= 1");
    if (k >= ids.size()) return ids;

    Vec3 centroid{0, 0, 0};
    for (size_t id : ids) centroid += obj.points[id];
    centroid = centroid / double(ids.size());

    // Farthest from centroid, ties toward the lowest point index.
    size_t first = 0;
    double best = -1.0;
    for (size_t i = 0; i < ids.size(); ++i) {
        double d2 = squared_dist(obj.points[ids[i]], centroid);
        if (d2 > best) {
            best = d2;
            first = i;
        }
    }

    std::vector<size_t> chosen = {ids[first]};
    std::vector<double> min_d2(ids.size(), std::numeric_limits<double>::infinity());
    for (size_t i = 0; i < ids.size(); ++i)
        min_d2[i] = squared_dist(obj.points[ids[i]], obj.points[ids[first]]);

    while (chosen.size() < k) {
        size_t arg = 0;
        double far = -1.0;
        for (size_t i = 0; i < ids.size(); ++i) {
            if (min_d2[i] > far) {
                far = min_d2[i];
                arg = i;
            }
        }
        chosen.push_back(ids[arg]);
        for (size_t i = 0; i < ids.size(); ++i)
            min_d2[i] = std::min(min_d2[i], squared_dist(obj.points[ids[i]], obj.points[ids[arg]]));
    }
    return chosen;
}

}  // namespace c2lt
