#include "c2lt/partition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "c2lt/nn_index.hpp"
#include "c2lt/util.hpp"

namespace c2lt {

std::vector<std::vector<size_t>> Partition::groups() const {
    std::vector<std::vector<size_t>> g(count);
    for (size_t i = 0; i < assign.size(); ++i) g[assign[i]].push_back(i);
    return g;
}

Partition compact_partition(const std::vector<int>& assign) {
    // Order labels by smallest member point index.
    std::vector<int> order;
    std::vector<int> remap(assign.empty() ? 0 : *std::max_element(assign.begin(), assign.end()) + 1,
                           -1);
    int next = 0;
    for (int a : assign) {
        if (a >= 0 && remap[a] < 0) {
            remap[a] = next++;
            order.push_back(a);
        }
    }
    Partition p;
    p.assign.reserve(assign.size());
    for (int a : assign) p.assign.push_back(remap[a]);
    p.count = next;
    return p;
}

namespace {

// Splits group members along their longest axis at the median (stable order by
// coordinate then index). Returns the two halves; the first holds the lower
// coordinates.
std::pair<std::vector<size_t>, std::vector<size_t>> median_bisect(const SurfaceObject& obj,
                                                                  const std::vector<size_t>& ids) {
    Vec3 lo = obj.points[ids[0]], hi = lo;
    for (size_t id : ids) {
        const Vec3& p = obj.points[id];
        lo.x = std::min(lo.x, p.x);
        lo.y = std::min(lo.y, p.y);
        lo.z = std::min(lo.z, p.z);
        hi.x = std::max(hi.x, p.x);
        hi.y = std::max(hi.y, p.y);
        hi.z = std::max(hi.z, p.z);
    }
    double span[3] = {hi.x - lo.x, hi.y - lo.y, hi.z - lo.z};
    int axis = 0;
    if (span[1] > span[axis]) axis = 1;
    if (span[2] > span[axis]) axis = 2;

    std::vector<size_t> sorted = ids;
    std::stable_sort(sorted.begin(), sorted.end(), [&](size_t a, size_t b) {
        double ca = obj.points[a][axis], cb = obj.points[b][axis];
        if (ca != cb) return ca < cb;
        return a < b;
    });
    size_t half = sorted.size() / 2;
    return {std::vector<size_t>(sorted.begin(), sorted.begin() + half),
            std::vector<size_t>(sorted.begin() + half, sorted.end())};
}

}  // namespace

Partition partition_hints(const SurfaceObject& obj, double link_radius, double max_frac,
                          size_t min_count) {
    if (link_radius <= 0.0) throw ConfigError("partition.link_radius must be > 0");
    if (max_frac <= 0.0 || max_frac > 1.0) throw ConfigError("partition.max_frac out of (0,1]");
    if (min_count < 1) throw ConfigError("partition.min_count must be >= 1");
    size_t n = obj.size();
    if (n == 0) throw DataError("empty object");

    // 1) Connected components of the radius graph.
    NNIndex index(obj.points);
    std::vector<int> label(n, -1);
    std::vector<size_t> stack;
    int next = 0;
    for (size_t s = 0; s < n; ++s) {
        if (label[s] >= 0) continue;
        label[s] = next;
        stack.push_back(s);
        while (!stack.empty()) {
            size_t cur = stack.back();
            stack.pop_back();
            for (size_t nb : index.radius_query(obj.points[cur], link_radius)) {
                if (label[nb] < 0) {
                    label[nb] = next;
                    stack.push_back(nb);
                }
            }
        }
        ++next;
    }

    // 2) Split oversized groups by recursive longest-axis median bisection.
    std::vector<std::vector<size_t>> groups(next);
    for (size_t i = 0; i < n; ++i) groups[label[i]].push_back(i);
    size_t cap = size_t(std::floor(max_frac * double(n) + 1e-9));
    cap = std::max<size_t>(cap, 1);
    std::vector<std::vector<size_t>> done;
    std::vector<std::vector<size_t>> work = std::move(groups);
    while (!work.empty()) {
        std::vector<size_t> g = std::move(work.back());
        work.pop_back();
        if (g.size() > cap && g.size() > 1) {
            auto [a, b] = median_bisect(obj, g);
            work.push_back(std::move(a));
            work.push_back(std::move(b));
        } else {
            done.push_back(std::move(g));
        }
    }

    std::vector<int> assign(n, -1);
    for (size_t gi = 0; gi < done.size(); ++gi)
        for (size_t id : done[gi]) assign[id] = int(gi);

    // 3) Absorb undersized groups into the group of their nearest foreign
    // point. Smallest group first; ties by smallest member index.
    while (true) {
        Partition p = compact_partition(assign);
        if (p.count <= 1) break;
        auto gs = p.groups();
        int victim = -1;
        for (int g = 0; g < p.count; ++g) {
            if (gs[g].size() >= min_count) continue;
            if (victim < 0 || gs[g].size() < gs[victim].size() ||
                (gs[g].size() == gs[victim].size() && gs[g][0] < gs[victim][0]))
                victim = g;
        }
        if (victim < 0) break;
        // Nearest foreign point over all members; ties by (distance, index).
        double best_d2 = std::numeric_limits<double>::infinity();
        size_t best_foreign = 0;
        bool found = false;
        for (size_t id : gs[victim]) {
            for (size_t other = 0; other < n; ++other) {
                if (p.assign[other] == victim) continue;
                double d2 = squared_dist(obj.points[id], obj.points[other]);
                if (!found || d2 < best_d2 || (d2 == best_d2 && other < best_foreign)) {
                    best_d2 = d2;
                    best_foreign = other;
                    found = true;
                }
            }
        }
        int target = p.assign[best_foreign];
        for (size_t id : gs[victim]) p.assign[id] = target;
        assign = p.assign;
    }

    return compact_partition(assign);
}

Partition inject_noise(const SurfaceObject& obj, const Partition& p, NoiseMode mode,
                       double strength, uint64_t seed) {
    if (strength <= 0.0) return compact_partition(p.assign);
    auto gs = p.groups();
    int k = p.count;

    if (mode == NoiseMode::Merge) {
        if (k < 2) return compact_partition(p.assign);
        std::vector<Vec3> centroids(k, {0, 0, 0});
        for (int g = 0; g < k; ++g) {
            for (size_t id : gs[g]) centroids[g] += obj.points[id];
            if (!gs[g].empty()) centroids[g] = centroids[g] / double(gs[g].size());
        }
        struct PairD {
            double d2;
            int a, b;
        };
        std::vector<PairD> pairs;
        for (int a = 0; a < k; ++a)
            for (int b = a + 1; b < k; ++b)
                pairs.push_back({squared_dist(centroids[a], centroids[b]), a, b});
        std::stable_sort(pairs.begin(), pairs.end(), [](const PairD& x, const PairD& y) {
            if (x.d2 != y.d2) return x.d2 < y.d2;
            if (x.a != y.a) return x.a < y.a;
            return x.b < y.b;
        });
        size_t take = size_t(std::llround(strength * double(pairs.size())));
        take = std::min(take, pairs.size());
        std::vector<int> parent(k);
        std::iota(parent.begin(), parent.end(), 0);
        auto find = [&](int x) {
            while (parent[x] != x) x = parent[x] = parent[parent[x]];
            return x;
        };
        for (size_t i = 0; i < take; ++i) {
            int a = find(pairs[i].a), b = find(pairs[i].b);
            if (a != b) parent[std::max(a, b)] = std::min(a, b);
        }
        std::vector<int> assign(p.assign.size());
        for (size_t i = 0; i < p.assign.size(); ++i) assign[i] = find(p.assign[i]);
        return compact_partition(assign);
    }

    if (mode == NoiseMode::Split) {
        // Largest partitions first; ties by partition id.
        std::vector<int> order(k);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            if (gs[a].size() != gs[b].size()) return gs[a].size() > gs[b].size();
            return a < b;
        });
        size_t take = size_t(std::llround(strength * double(k)));
        take = std::min(take, size_t(k));
        std::vector<int> assign = p.assign;
        int next = k;
        for (size_t i = 0; i < take; ++i) {
            int g = order[i];
            if (gs[g].size() < 2) continue;
            auto [a, b] = median_bisect(obj, gs[g]);
            for (size_t id : b) assign[id] = next;
            ++next;
        }
        return compact_partition(assign);
    }

    // Random: reassign points uniformly over the original id set. A point is
    // touched with probability = strength, so strength 1 reassigns every point.
    Rng rng(seed);
    std::vector<int> assign = p.assign;
    for (size_t i = 0; i < assign.size(); ++i) {
        double u = rng.uniform();
        int fresh = int(rng.index(uint64_t(std::max(k, 1))));
        if (u < strength) assign[i] = fresh;
    }
    return compact_partition(assign);
}

}  // namespace c2lt
