#pragma once

#include <cstdint>
#include <vector>

#include "c2lt/surface.hpp"

namespace c2lt {

// Unsupervised macro-component labels, contiguous from 0.
struct Partition {
    std::vector<int> assign;  // point id -> partition id
    int count = 0;

    std::vector<std::vector<size_t>> groups() const;
};

// Relabels to contiguous ids ordered by the smallest member point index.
Partition compact_partition(const std::vector<int>& assign);

// Connected components of the radius graph, then recursive longest-axis
// median bisection of any group holding more than max_frac of all points,
// then absorption of groups below min_count into the group containing their
// nearest foreign point.
Partition partition_hints(const SurfaceObject& obj, double link_radius, double max_frac,
                          size_t min_count);

enum class NoiseMode { Merge, Split, Random };

// merge: a strength-fraction of partition pairs (nearest centroids first) are
// unioned. split: a strength-fraction of partitions (largest first) are
// median-bisected once. random: every point reassigned uniformly over the
// original partition-id set using the seed.
Partition inject_noise(const SurfaceObject& obj, const Partition& p, NoiseMode mode,
                       double strength, uint64_t seed);

}  // namespace c2lt
