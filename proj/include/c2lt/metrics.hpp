#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "c2lt/geom.hpp"
#include "c2lt/nn_index.hpp"

namespace c2lt {

// tau = max(0.02 * extent, 1e-3).
double adaptive_tau(double extent);

struct DistancePair {
    double chamfer = 0.0;
    double hausdorff = 0.0;
};

// CD = 0.5 * (mean_a d(a,B) + mean_b d(b,A)); HD = max directional max.
// Conventions: both empty -> 0; exactly one empty -> 1. The query loops are
// OpenMP-parallel with a fixed-order serial reduction, so results are
// byte-identical across thread counts.
DistancePair chamfer_hausdorff(const std::vector<Vec3>& a, const std::vector<Vec3>& b);

// 1 - mean pairwise band-overlap over nonempty component pairs. No components
// -> 0; components but no pair -> 1.
double separation_score(const std::vector<std::vector<Vec3>>& predicted_components, double tau);

// Fraction of predicted points leaking toward a foreign ground-truth support.
// No predicted points -> 1; no cross-component comparison (single GT support)
// -> 0.
double contamination_rate(const std::vector<std::vector<Vec3>>& predicted_components,
                          const std::vector<std::vector<Vec3>>& gt_supports, double tau);

// Mean cosine with denominators floored at 1e-6.
double normal_consistency(const std::vector<Vec3>& predicted, const std::vector<Vec3>& reference);

struct StructFeatures {
    std::array<double, 11> values = {};
    double iq_raw = 1.0;
    double bc_raw = 0.0;
    bool degenerate = false;  // single-unit object

    static constexpr int kDim = 11;
};

struct StructScores {
    double iq = 1.0;
    double bc = 1.0;
};

// 11-dim structural feature vector over an object's units plus the raw
// intersection/boundary statistics on a k-NN unit graph (k = min(3, units-1)).
StructFeatures struct_features(const std::vector<std::vector<Vec3>>& units);

// IQ = exp(-|IQ_raw - mu_iq_ref| / 0.15), BC = exp(-|BC_raw - mu_bc_ref| / 0.05).
StructScores struct_scores(const StructFeatures& f, double mu_iq_ref, double mu_bc_ref);

// Frechet distance between Gaussian fits of the two feature batches.
// Covariances are regularized by 1e-9 I; matrix square roots use symmetric
// eigendecomposition with negative eigenvalues clamped to zero.
double structural_fid(const std::vector<StructFeatures>& generated,
                      const std::vector<StructFeatures>& reference);

struct BootstrapSummary {
    double mean = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double win_rate = 0.0;
};

// Percentile bootstrap over per-object improvements (resampling indices with
// replacement, seeded). CI bounds are the empirical 2.5/97.5 percentiles.
BootstrapSummary paired_bootstrap(const std::vector<double>& improvements, int resamples,
                                  uint64_t seed);

struct StructuralReport {
    double chamfer = 0.0;
    double hausdorff = 0.0;
    double contamination = 0.0;
    double separation = 1.0;
    double normal_consistency = 0.0;
    int support_violations = 0;
    double tau = 0.0;
};

// Serial O(n^2) reference evaluator. No spatial index, no OpenMP; the test
// suite and the benchmark hold the fast path to this one.
namespace serial_ref {

double nearest_distance(const std::vector<Vec3>& points, const Vec3& q);
DistancePair chamfer_hausdorff(const std::vector<Vec3>& a, const std::vector<Vec3>& b);
double separation_score(const std::vector<std::vector<Vec3>>& predicted_components, double tau);
double contamination_rate(const std::vector<std::vector<Vec3>>& predicted_components,
                          const std::vector<std::vector<Vec3>>& gt_supports, double tau);
double normal_consistency(const std::vector<Vec3>& predicted, const std::vector<Vec3>& reference);

}  // namespace serial_ref

}  // namespace c2lt
