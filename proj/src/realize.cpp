#include "c2lt/realize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace c2lt {

std::vector<char> realize_component_owned(const std::vector<Vec3>& points,
                                          const std::vector<int>& owner,
                                          const std::vector<NNIndex>& partition_supports,
                                          double margin, double keep_floor) {
    size_t n = points.size();
    int parts = int(partition_supports.size());
    std::vector<char> keep(n, 0);
    std::vector<double> own_minus_other(n, 0.0);

    for (size_t i = 0; i < n; ++i) {
        int p = owner[i];
        if (p < 0 || p >= parts)
            throw DataError("realize: point " + std::to_string(i) + " has unknown partition " +
                            std::to_string(p));
        double d_own = std::sqrt(partition_supports[p].nearest_sq(points[i]).distance);
        double d_other = std::numeric_limits<double>::infinity();
        for (int q = 0; q < parts; ++q) {
            if (q == p || partition_supports[q].empty()) continue;
            d_other = std::min(d_other, std::sqrt(partition_supports[q].nearest_sq(points[i]).distance));
        }
        if (std::isinf(d_other)) {
            keep[i] = 1;  // single-partition convention: keep everything
            own_minus_other[i] = -std::numeric_limits<double>::infinity();
            continue;
        }
        own_minus_other[i] = d_own - d_other;
        keep[i] = d_own <= d_other + margin ? 1 : 0;
    }

    // Per-partition keep floor: retain smallest-margin dropped points.
    for (int p = 0; p < parts; ++p) {
        std::vector<size_t> members;
        for (size_t i = 0; i < n; ++i)
            if (owner[i] == p) members.push_back(i);
        if (members.empty()) continue;
        size_t target = size_t(std::ceil(keep_floor * double(members.size()) - 1e-9));
        size_t kept = 0;
        for (size_t i : members) kept += keep[i];
        if (kept >= target) continue;
        std::vector<size_t> dropped;
        for (size_t i : members)
            if (!keep[i]) dropped.push_back(i);
        std::stable_sort(dropped.begin(), dropped.end(), [&](size_t a, size_t b) {
            if (own_minus_other[a] != own_minus_other[b])
                return own_minus_other[a] < own_minus_other[b];
            return a < b;
        });
        for (size_t k = 0; k < dropped.size() && kept < target; ++k) {
            keep[dropped[k]] = 1;
            ++kept;
        }
    }
    return keep;
}

double decoding_energy(const DecodingCandidate& cand, double lambda, double epsilon) {
    if (epsilon <= 0.0) throw ConfigError("decoding energy requires epsilon > 0");
    double e = -cand.log_p_ar;
    for (double c : cand.compats) e += lambda * (-std::log(std::max(c, epsilon)));
    return e;
}

std::vector<Pose> accumulate_transforms(const AssemblyGraph& graph) {
    int n = graph.node_count;
    std::vector<int> parent(n, -1);
    std::vector<const AssemblyGraph::Edge*> parent_edge(n, nullptr);
    for (const auto& e : graph.edges) {
        if (e.parent < 0 || e.parent >= n || e.child < 0 || e.child >= n)
            throw DataError("assembly edge references unknown node");
        if (parent[e.child] >= 0)
            throw DataError("assembly graph is not a forest: node " + std::to_string(e.child) +
                            " has two parents");
        parent[e.child] = e.parent;
        parent_edge[e.child] = &e;
    }

    std::vector<Pose> global(n);
    std::vector<int> state(n, 0);  // 0 unvisited, 1 on stack, 2 done
    std::vector<int> depth(n, 0);

    for (int start = 0; start < n; ++start) {
        if (state[start] == 2) continue;
        // Walk up to a resolved node or a root, detecting cycles.
        std::vector<int> path;
        int cur = start;
        while (true) {
            if (state[cur] == 2) break;
            if (state[cur] == 1) {
                // Cycle: collect it from the current walk.
                std::vector<int> cycle;
                auto it = std::find(path.begin(), path.end(), cur);
                for (; it != path.end(); ++it) cycle.push_back(*it);
                std::string msg = "cycle detected in assembly graph:";
                for (int v : cycle) msg += " " + std::to_string(v);
                throw CycleError(std::move(cycle), msg);
            }
            state[cur] = 1;
            path.push_back(cur);
            if (parent[cur] < 0) break;
            cur = parent[cur];
        }
        // Resolve the walked path top-down.
        for (auto it = path.rbegin(); it != path.rend(); ++it) {
            int v = *it;
            if (parent[v] < 0) {
                global[v] = Pose::identity();
                depth[v] = 0;
            } else {
                global[v] = compose(global[parent[v]], parent_edge[v]->rel);
                depth[v] = depth[parent[v]] + 1;
                if (depth[v] > graph.d_max)
                    throw DataError("assembly depth " + std::to_string(depth[v]) +
                                    " exceeds d_max " + std::to_string(graph.d_max));
            }
            state[v] = 2;
        }
    }
    return global;
}

CollisionReport collision_audit(const AssemblyGraph& graph,
                                const std::vector<std::vector<Vec3>>& local_samples,
                                const std::vector<Pose>& global_poses, double support_band) {
    int n = graph.node_count;
    if (support_band <= 0.0) support_band = 0.1 * graph.r_max;
    std::vector<std::vector<char>> adjacent(n, std::vector<char>(n, 0));
    for (const auto& e : graph.edges) adjacent[e.parent][e.child] = adjacent[e.child][e.parent] = 1;

    // Posed samples and per-node indices.
    std::vector<std::vector<Vec3>> posed(n);
    std::vector<NNIndex> index(n);
    for (int i = 0; i < n; ++i) {
        posed[i].reserve(local_samples[i].size());
        for (const auto& p : local_samples[i]) posed[i].push_back(global_poses[i].apply(p));
        index[i] = NNIndex(posed[i]);
    }

    CollisionReport report;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            auto frac_inside = [&](int a, int b) {
                if (posed[a].empty() || posed[b].empty()) return 0.0;
                Vec3 center_b = global_poses[b].translation;
                size_t hits = 0;
                for (const auto& p : posed[a]) {
                    if ((p - center_b).norm() > graph.r_max) continue;
                    if (std::sqrt(index[b].nearest_sq(p).distance) <= support_band) ++hits;
                }
                return double(hits) / double(posed[a].size());
            };
            double pen = 0.5 * (frac_inside(i, j) + frac_inside(j, i));
            report.max_penetration = std::max(report.max_penetration, pen);
            if (pen > graph.delta_coll) {
                if (adjacent[i][j])
                    report.local_violations.push_back({i, j, pen});
                else
                    report.nonlocal_violations.push_back({i, j, pen});
            }
        }
    }
    return report;
}

std::vector<int> support_violation(const std::vector<std::vector<Vec3>>& component_points,
                                   double ground_z, double delta_support) {
    double budget = 4.0 * delta_support;
    std::vector<int> flagged;
    for (size_t k = 0; k < component_points.size(); ++k) {
        bool grounded = false;
        for (const auto& x : component_points[k]) {
            if (x.z - ground_z <= budget) {
                grounded = true;
                break;
            }
            for (size_t o = 0; o < component_points.size() && !grounded; ++o) {
                if (o == k) continue;
                for (const auto& p : component_points[o]) {
                    if (p.z >= x.z) continue;
                    double lateral = std::hypot(p.x - x.x, p.y - x.y);
                    if (lateral <= delta_support && (x.z - p.z) <= budget) {
                        grounded = true;
                        break;
                    }
                }
            }
            if (grounded) break;
        }
        if (!grounded) flagged.push_back(int(k));
    }
    return flagged;
}

}  // namespace c2lt
