#include "c2lt/archive.hpp"

#include <fstream>

#include <json.hpp>

#include "c2lt/tokenizer.hpp"
#include "c2lt/util.hpp"

namespace c2lt {

using nlohmann::json;

namespace {

json vec3_to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

Vec3 vec3_from_json(const json& j) { return {j.at(0), j.at(1), j.at(2)}; }

json pose_to_json(const Pose& p) {
    json j;
    j["r"] = p.rotation.m;
    j["t"] = vec3_to_json(p.translation);
    j["s"] = p.scale;
    return j;
}

Pose pose_from_json(const json& j) {
    Pose p;
    for (int i = 0; i < 9; ++i) p.rotation.m[i] = j.at("r").at(i);
    p.translation = vec3_from_json(j.at("t"));
    p.scale = j.at("s");
    return p;
}

json object_to_json(const ArchiveObject& obj) {
    json j;
    j["id"] = obj.id;
    j["extent"] = obj.surface.extent;
    json pts = json::array(), nrm = json::array();
    for (const auto& p : obj.surface.points) pts.push_back(vec3_to_json(p));
    for (const auto& n : obj.surface.normals) nrm.push_back(vec3_to_json(n));
    j["points"] = std::move(pts);
    j["normals"] = std::move(nrm);
    j["component"] = obj.surface.component_of;
    if (!obj.partition.assign.empty()) j["partition"] = obj.partition.assign;

    if (!obj.charts.empty()) {
        json charts = json::array();
        for (const auto& c : obj.charts) {
            json cj;
            cj["id"] = c.id;
            cj["anchor"] = c.anchor_id;
            cj["scale"] = c.scale;
            cj["frame"] = c.frame.m;
            cj["part"] = c.partition;
            cj["nbrs"] = c.neighbor_ids;
            cj["residual"] = c.pose_residual;
            if (c.token) {
                cj["geo"] = c.token->geo_levels;
                cj["bnd"] = c.token->bnd_levels;
            }
            charts.push_back(std::move(cj));
        }
        j["charts"] = std::move(charts);
    }
    if (!obj.seams.empty()) {
        json seams = json::array();
        for (const auto& s : obj.seams) {
            json sj;
            sj["src"] = s.source;
            sj["dst"] = s.dest;
            sj["rel"] = pose_to_json(s.coarse_rel);
            sj["ratio"] = s.scale_ratio;
            sj["dist"] = s.support_dist;
            sj["target"] = s.target;
            sj["coll"] = s.collision_label;
            sj["valid"] = s.validity_label;
            sj["pose_t"] = s.pose_target;
            seams.push_back(std::move(sj));
        }
        j["seams"] = std::move(seams);
    }
    if (!obj.valid_chart_edges.empty()) {
        json edges = json::array();
        for (const auto& [c, p] : obj.valid_chart_edges) edges.push_back(json::array({c, p}));
        j["valid_edges"] = std::move(edges);
    }
    if (obj.has_gt) {
        json g;
        json contacts = json::array();
        for (const auto& c : obj.gt.contacts) {
            json cj;
            cj["parent"] = c.parent;
            cj["child"] = c.child;
            cj["center"] = vec3_to_json(c.center);
            cj["radius"] = c.radius;
            cj["gap"] = c.gap;
            cj["axis"] = vec3_to_json(c.axis);
            contacts.push_back(std::move(cj));
        }
        g["contacts"] = std::move(contacts);
        g["decoys"] = obj.gt.decoy_components;
        json colls = json::array();
        for (const auto& [a, b] : obj.gt.collision_pairs) colls.push_back(json::array({a, b}));
        g["collisions"] = std::move(colls);
        j["gt"] = std::move(g);
    }
    return j;
}

ArchiveObject object_from_json(const json& j) {
    ArchiveObject obj;
    obj.id = j.at("id");
    obj.surface.extent = j.at("extent");
    for (const auto& p : j.at("points")) obj.surface.points.push_back(vec3_from_json(p));
    for (const auto& n : j.at("normals")) obj.surface.normals.push_back(vec3_from_json(n));
    obj.surface.component_of = j.at("component").get<std::vector<int>>();
    if (j.contains("partition")) {
        obj.partition.assign = j.at("partition").get<std::vector<int>>();
        int mx = -1;
        for (int a : obj.partition.assign) mx = std::max(mx, a);
        obj.partition.count = mx + 1;
    }
    if (j.contains("charts")) {
        for (const auto& cj : j.at("charts")) {
            Chart c;
            c.id = cj.at("id");
            c.anchor_id = cj.at("anchor");
            c.scale = cj.at("scale");
            for (int i = 0; i < 9; ++i) c.frame.m[i] = cj.at("frame").at(i);
            c.partition = cj.at("part");
            c.neighbor_ids = cj.at("nbrs").get<std::vector<size_t>>();
            for (int i = 0; i < 6; ++i) c.pose_residual[i] = cj.at("residual").at(i);
            c.anchor = obj.surface.points[c.anchor_id];
            c.normal = obj.surface.normals[c.anchor_id].normalized();
            // Recompute canonical-frame coordinates (bit-exact).
            double inv_s = 1.0 / c.scale;
            for (size_t id : c.neighbor_ids) {
                Vec3 off = obj.surface.points[id] - c.anchor;
                c.local_points.push_back(c.frame.apply_transposed(off) * inv_s);
                c.local_normals.push_back(c.frame.apply_transposed(obj.surface.normals[id]));
            }
            if (cj.contains("geo")) {
                TokenPair t;
                for (int i = 0; i < kGeoSlots; ++i) {
                    t.geo_levels[i] = cj.at("geo").at(i);
                    t.geo_values[i] = -1.0 + t.geo_levels[i] * (2.0 / (kFsqLevels - 1));
                }
                for (int i = 0; i < kBndSlots; ++i) {
                    t.bnd_levels[i] = cj.at("bnd").at(i);
                    t.bnd_values[i] = -1.0 + t.bnd_levels[i] * (2.0 / (kFsqLevels - 1));
                }
                t.geo_index = pack_levels(
                    std::vector<int>(t.geo_levels.begin(), t.geo_levels.end()));
                t.bnd_index = pack_levels(
                    std::vector<int>(t.bnd_levels.begin(), t.bnd_levels.end()));
                c.token = t;
            }
            obj.charts.push_back(std::move(c));
        }
    }
    if (j.contains("seams")) {
        for (const auto& sj : j.at("seams")) {
            SeamCandidate s;
            s.source = sj.at("src");
            s.dest = sj.at("dst");
            s.coarse_rel = pose_from_json(sj.at("rel"));
            s.scale_ratio = sj.at("ratio");
            s.support_dist = sj.at("dist");
            s.target = sj.at("target");
            s.collision_label = sj.at("coll");
            s.validity_label = sj.at("valid");
            for (int i = 0; i < 7; ++i) s.pose_target[i] = sj.at("pose_t").at(i);
            obj.seams.push_back(s);
        }
    }
    if (j.contains("valid_edges")) {
        for (const auto& e : j.at("valid_edges"))
            obj.valid_chart_edges.emplace_back(int(e.at(0)), int(e.at(1)));
    }
    if (j.contains("gt")) {
        obj.has_gt = true;
        const auto& g = j.at("gt");
        for (const auto& cj : g.at("contacts")) {
            ContactSpec c;
            c.parent = cj.at("parent");
            c.child = cj.at("child");
            c.center = vec3_from_json(cj.at("center"));
            c.radius = cj.at("radius");
            c.gap = cj.at("gap");
            c.axis = vec3_from_json(cj.at("axis"));
            obj.gt.contacts.push_back(c);
        }
        obj.gt.decoy_components = g.at("decoys").get<std::vector<int>>();
        for (const auto& e : g.at("collisions"))
            obj.gt.collision_pairs.emplace_back(int(e.at(0)), int(e.at(1)));
    }
    return obj;
}

}  // namespace

void write_archive(const std::string& path, const std::vector<ArchiveObject>& objects) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open archive for writing: " + path);
    json header;
    header["format"] = kArchiveFormat;
    header["version"] = kArchiveVersion;
    out << header.dump() << "\n";
    for (const auto& obj : objects) out << object_to_json(obj).dump() << "\n";
    if (!out) throw DataError("archive write failed: " + path);
}

std::vector<ArchiveObject> read_archive(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open archive: " + path);
    std::string line;
    size_t line_no = 0;
    std::vector<ArchiveObject> objects;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw DataError("archive record " + std::to_string(line_no) +
                            " is corrupt: " + e.what());
        }
        if (line_no == 1) {
            if (!j.contains("format") || j.at("format") != kArchiveFormat)
                throw DataError("archive record 1: unknown format");
            if (!j.contains("version") || int(j.at("version")) != kArchiveVersion)
                throw DataError("archive record 1: version mismatch");
            continue;
        }
        try {
            objects.push_back(object_from_json(j));
        } catch (const json::exception& e) {
            throw DataError("archive record " + std::to_string(line_no) +
                            " is malformed: " + e.what());
        }
    }
    if (line_no == 0) throw DataError("archive is empty (missing header): " + path);
    return objects;
}

}  // namespace c2lt
