#pragma once

#include <vector>

#include "c2lt/geom.hpp"
#include "c2lt/nn_index.hpp"

namespace c2lt {

// Component-owned realization: a point is kept iff d_own <= d_other + margin,
// where d_own is the distance to its own partition's support and d_other the
// distance to any foreign support (+inf for single-partition objects). When a
// partition's kept fraction falls below keep_floor, its dropped points with
// the smallest (d_own - d_other) are retained until the floor holds.
// Returns a keep mask aligned with `points`.
std::vector<char> realize_component_owned(const std::vector<Vec3>& points,
                                          const std::vector<int>& owner,
                                          const std::vector<NNIndex>& partition_supports,
                                          double margin, double keep_floor);

// E(s) = -log p_AR(s) + lambda * sum_ij -log max(C_ij, eps).
struct DecodingCandidate {
    double log_p_ar = 0.0;          // externally supplied sequence log-likelihood
    std::vector<double> compats;    // predicted seam compatibilities
};

double decoding_energy(const DecodingCandidate& cand, double lambda, double epsilon);

struct AssemblyGraph {
    struct Edge {
        int parent = -1;
        int child = -1;
        Pose rel;  // child pose in parent frame
    };
    int node_count = 0;
    std::vector<Edge> edges;
    double delta_coll = 0.05;  // penetration-proxy tolerance (fraction)
    double r_max = 0.5;        // local radius bound
    int d_max = 64;            // max derivation depth
};

struct CycleError : DataError {
    std::vector<int> cycle;
    explicit CycleError(std::vector<int> c, const std::string& msg)
        : DataError(msg), cycle(std::move(c)) {}
};

// Global pose per node = composition of relative poses along the unique root
// path (roots at identity). Throws CycleError listing the cycle; throws
// DataError when a node has two parents or depth exceeds d_max.
std::vector<Pose> accumulate_transforms(const AssemblyGraph& graph);

struct PairViolation {
    int a = 0, b = 0;
    double penetration = 0.0;  // symmetric sample-overlap fraction
};

struct CollisionReport {
    std::vector<PairViolation> local_violations;     // adjacent (edge) pairs
    std::vector<PairViolation> nonlocal_violations;  // all other pairs
    double max_penetration = 0.0;
};

// Penetration proxy per pair: symmetric fraction of one node's posed samples
// inside the other's r_max ball and within support_band of its samples.
// support_band <= 0 defaults to 0.1 * r_max.
CollisionReport collision_audit(const AssemblyGraph& graph,
                                const std::vector<std::vector<Vec3>>& local_samples,
                                const std::vector<Pose>& global_poses,
                                double support_band = -1.0);

// Downward-ray grounding check. A component is flagged iff no sample point
// sees a foreign support point (lateral distance <= delta_support, vertical
// gap <= 4 * delta_support) or the ground plane below it. Returns flagged
// component ids.
std::vector<int> support_violation(const std::vector<std::vector<Vec3>>& component_points,
                                   double ground_z, double delta_support);

}  // namespace c2lt
