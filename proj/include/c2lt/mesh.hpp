#pragma once

#include <array>
#include <istream>
#include <string>
#include <vector>

#include "c2lt/geom.hpp"

namespace c2lt {

struct RawMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::vector<Vec3> vertex_normals;  // empty when the file carries none

    bool has_normals() const { return vertex_normals.size() == vertices.size(); }
};

// ASCII OBJ subset: v, vn, f (f with v, v//vn or v/vt/vn forms, 1-based or
// negative indices). Unknown line types are skipped. Polygon faces are
// fan-triangulated. Malformed faces raise DataError naming the line.
RawMesh parse_obj(std::istream& in);
RawMesh parse_obj_text(const std::string& text);

// Drop edges shared by more than two triangles together with their incident
// triangles, drop degenerate triangles, then drop isolated vertices.
RawMesh prune_mesh(const RawMesh& mesh);

// Area-weighted vertex normals from triangle geometry.
std::vector<Vec3> compute_vertex_normals(const RawMesh& mesh);

// Connected components over the triangle edge graph; isolated vertices get
// their own singleton components. Ids contiguous from 0, ordered by the
// smallest vertex index in each component.
std::vector<int> mesh_components(const RawMesh& mesh);

}  // namespace c2lt
