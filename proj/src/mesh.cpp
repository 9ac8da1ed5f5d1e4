#include "c2lt/mesh.hpp"

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>

#include "c2lt/util.hpp"

namespace c2lt {

namespace {

// Resolves an OBJ index (1-based, or negative meaning from-the-end) against
// the current vertex count. Returns -1 when out of range.
int resolve_index(long idx, size_t count) {
    if (idx > 0) return idx <= long(count) ? int(idx - 1) : -1;
    if (idx < 0) return -idx <= long(count) ? int(long(count) + idx) : -1;
    return -1;
}

bool parse_double(const std::string& tok, double& out) {
    char* end = nullptr;
    out = std::strtod(tok.c_str(), &end);
    return end && *end == '\0' && end != tok.c_str();
}

}  // namespace

RawMesh parse_obj(std::istream& in) {
    RawMesh mesh;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag)) continue;
        if (tag == "v") {
            double x, y, z;
            std::string tx, ty, tz;
            if (!(ls >> tx >> ty >> tz) || !parse_double(tx, x) || !parse_double(ty, y) ||
                !parse_double(tz, z))
                throw DataError("obj parse error at line " + std::to_string(line_no) +
                                ": bad vertex");
            mesh.vertices.push_back({x, y, z});
        } else if (tag == "vn") {
            double x, y, z;
            std::string tx, ty, tz;
            if (!(ls >> tx >> ty >> tz) || !parse_double(tx, x) || !parse_double(ty, y) ||
                !parse_double(tz, z))
                throw DataError("obj parse error at line " + std::to_string(line_no) +
                                ": bad normal");
            mesh.vertex_normals.push_back({x, y, z});
        } else if (tag == "f") {
            std::vector<int> corners;
            std::string tok;
            while (ls >> tok) {
                // Take the leading vertex index of v, v/vt, v//vn, v/vt/vn.
                size_t slash = tok.find('/');
                std::string head = slash == std::string::npos ? tok : tok.substr(0, slash);
                char* end = nullptr;
                long idx = std::strtol(head.c_str(), &end, 10);
                if (!end || *end != '\0' || head.empty())
                    throw DataError("obj parse error at line " + std::to_string(line_no) +
                                    ": bad face index '" + tok + "'");
                int v = resolve_index(idx, mesh.vertices.size());
                if (v < 0)
                    throw DataError("obj parse error at line " + std::to_string(line_no) +
                                    ": face index out of range '" + tok + "'");
                corners.push_back(v);
            }
            if (corners.size() < 3)
                throw DataError("obj parse error at line " + std::to_string(line_no) +
                                ": face with fewer than 3 vertices");
            for (size_t i = 1; i + 1 < corners.size(); ++i)
                mesh.triangles.push_back({corners[0], corners[i], corners[i + 1]});
        }
        // Anything else (vt, o, g, s, usemtl, comments) is skipped.
    }
    if (mesh.vertices.empty()) throw DataError("obj parse error: empty mesh");
    if (!mesh.vertex_normals.empty() && mesh.vertex_normals.size() != mesh.vertices.size())
        mesh.vertex_normals.clear();  // partial normals are useless; recompute later
    return mesh;
}

RawMesh parse_obj_text(const std::string& text) {
    std::istringstream in(text);
    return parse_obj(in);
}

RawMesh prune_mesh(const RawMesh& mesh) {
    // Count triangle incidence per undirected edge.
    std::map<std::pair<int, int>, int> edge_count;
    auto edge_key = [](int a, int b) { return std::make_pair(std::min(a, b), std::max(a, b)); };
    std::vector<bool> degenerate(mesh.triangles.size(), false);
    for (size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) {
            degenerate[t] = true;
            continue;
        }
        Vec3 e1 = mesh.vertices[tri[1]] - mesh.vertices[tri[0]];
        Vec3 e2 = mesh.vertices[tri[2]] - mesh.vertices[tri[0]];
        if (e1.cross(e2).norm() < 1e-14) {
            degenerate[t] = true;
            continue;
        }
        for (int e = 0; e < 3; ++e) ++edge_count[edge_key(tri[e], tri[(e + 1) % 3])];
    }

    std::vector<bool> keep_tri(mesh.triangles.size(), false);
    for (size_t t = 0; t < mesh.triangles.size(); ++t) {
        if (degenerate[t]) continue;
        const auto& tri = mesh.triangles[t];
        bool ok = true;
        for (int e = 0; e < 3; ++e)
            if (edge_count[edge_key(tri[e], tri[(e + 1) % 3])] > 2) ok = false;
        keep_tri[t] = ok;
    }

    std::vector<bool> used(mesh.vertices.size(), false);
    for (size_t t = 0; t < mesh.triangles.size(); ++t)
        if (keep_tri[t])
            for (int v : mesh.triangles[t]) used[v] = true;

    RawMesh out;
    std::vector<int> remap(mesh.vertices.size(), -1);
    for (size_t v = 0; v < mesh.vertices.size(); ++v) {
        if (!used[v]) continue;
        remap[v] = int(out.vertices.size());
        out.vertices.push_back(mesh.vertices[v]);
        if (mesh.has_normals()) out.vertex_normals.push_back(mesh.vertex_normals[v]);
    }
    for (size_t t = 0; t < mesh.triangles.size(); ++t)
        if (keep_tri[t])
            out.triangles.push_back({remap[mesh.triangles[t][0]], remap[mesh.triangles[t][1]],
                                     remap[mesh.triangles[t][2]]});
    return out;
}

std::vector<Vec3> compute_vertex_normals(const RawMesh& mesh) {
    std::vector<Vec3> acc(mesh.vertices.size(), {0, 0, 0});
    for (const auto& tri : mesh.triangles) {
        Vec3 e1 = mesh.vertices[tri[1]] - mesh.vertices[tri[0]];
        Vec3 e2 = mesh.vertices[tri[2]] - mesh.vertices[tri[0]];
        Vec3 area_normal = e1.cross(e2);  // magnitude = 2 * area
        for (int v : tri) acc[v] += area_normal;
    }
    for (auto& n : acc) {
        Vec3 u = n.normalized();
        n = (u.norm2() > 0.0) ? u : Vec3{0, 0, 1};
    }
    return acc;
}

std::vector<int> mesh_components(const RawMesh& mesh) {
    size_t n = mesh.vertices.size();
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    auto unite = [&](int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    };
    for (const auto& tri : mesh.triangles) {
        unite(tri[0], tri[1]);
        unite(tri[1], tri[2]);
    }
    std::vector<int> label(n, -1);
    int next = 0;
    for (size_t v = 0; v < n; ++v) {
        int root = find(int(v));
        if (label[root] < 0) label[root] = next++;
        label[v] = label[root];
    }
    return label;
}

}  // namespace c2lt
