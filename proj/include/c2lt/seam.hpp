#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "c2lt/chart.hpp"
#include "c2lt/context.hpp"
#include "c2lt/geom.hpp"
#include "c2lt/nn_index.hpp"

namespace c2lt {

// Object-space support point sets per chart, with per-chart indices.
struct ChartSupports {
    std::vector<std::vector<Vec3>> points;
    std::vector<std::vector<Vec3>> normals;
    std::vector<NNIndex> index;
};

ChartSupports build_supports(const SurfaceObject& obj, const std::vector<Chart>& charts);

// Exact min distance between two chart supports.
double support_distance(const ChartSupports& s, int i, int j);

// Directed chart pair with coarse relative pose and analytic labels.
struct SeamCandidate {
    int source = -1;
    int dest = -1;
    Pose coarse_rel;  // dest pose expressed in source frame
    double scale_ratio = 1.0;
    double support_dist = 0.0;
    double target = 0.0;  // C* in [0,1]
    int collision_label = 0;
    int validity_label = 0;
    std::array<double, 7> pose_target = {0, 0, 0, 0, 0, 0, 0};
};

// A candidate (i,j) exists iff min support distance < eps_contact; proposals
// are symmetric (both directions emitted).
std::vector<SeamCandidate> propose_candidates(const std::vector<Chart>& charts,
                                              const ChartSupports& supports, double eps_contact);

// Weighted analytic compatibility blend:
//   0.35*S_ov + 0.25*S_CD + 0.20*N_cons + 0.20*Q_occ, clipped to [0,1].
// S_CD = exp(-D_CD / (0.15*min(s_i,s_j))). Boundary bands are points within
// tau_band of the other support; empty bands fall back to the full support.
double compat_target(const Chart& ci, const Chart& cj, const ChartSupports& supports,
                     double tau_band);

// Refinement target: residual between the coarse relative pose and the pose
// improved by a one-step point-to-point rigid fit of the source band onto the
// dest support. Encoded axis-angle(3) + translation(3) + log scale(1).
std::array<double, 7> pose_refine_target(const Chart& ci, const Chart& cj,
                                         const ChartSupports& supports, double tau_band);

struct SeamPrediction {
    double compat = 0.5;  // logistic-squashed, in (0,1)
    std::array<double, 7> refine = {0, 0, 0, 0, 0, 0, 0};
    double p_coll = 0.5;
    double p_invalid = 0.5;
};

// 2-layer perceptron: shared tanh trunk, four linear heads.
struct SeamHead {
    int input_dim = 0;
    int hidden = 32;
    std::vector<double> theta;

    static SeamHead seeded(int input_dim, int hidden, uint64_t seed);
    size_t param_count() const { return theta.size(); }
};

// Input layout: [h_i, h_j, coarse pose (axis-angle 3, translation 3,
// log scale 1), scale ratio].
std::vector<double> seam_input(const std::vector<double>& h_i, const std::vector<double>& h_j,
                               const Pose& coarse_rel, double scale_ratio);

SeamPrediction seam_forward(const SeamHead& head, const std::vector<double>& input);

struct SeamExample {
    std::vector<double> input;
    double target = 0.0;
    std::array<double, 7> pose_target = {0, 0, 0, 0, 0, 0, 0};
    int collision_label = 0;
    int invalid_label = 0;  // 1 - validity
};

struct TrainSchedule {
    double lr = 0.1;
    int epochs = 200;
    double lambda_compat = 1.0;
    double lambda_pose = 0.05;
    double lambda_coll = 0.05;
    double lambda_sep = 0.05;
    double lambda_inv = 0.05;
    double positive_threshold = 0.55;
    double negative_threshold = 0.35;
    double separation_margin = 0.2;
    double pose_mask_threshold = 0.5;
};

// Full loss over the bank; fills d_theta when non-null. Shared by training
// and the finite-difference checks.
double seam_loss(const SeamHead& head, const std::vector<SeamExample>& bank,
                 const TrainSchedule& sched, std::vector<double>* d_theta);

struct TrainResult {
    std::vector<double> loss_trace;
};

// Plain full-batch gradient descent. Requires at least one positive
// (C* >= positive_threshold) and one negative (C* <= negative_threshold).
TrainResult train_seam_head(SeamHead& head, const std::vector<SeamExample>& bank,
                            const TrainSchedule& sched);

struct SeamMetrics {
    std::optional<double> auc;  // undefined when labels are one-class
    double average_precision = 0.0;
    double collision_brier = 0.0;
    double top1_precision = 0.0;
    double top3_recall = 0.0;
};

SeamMetrics seam_metrics(const std::vector<double>& scores, const std::vector<int>& valid_labels,
                         const std::vector<double>& coll_probs,
                         const std::vector<int>& coll_labels,
                         const std::vector<int>& source_chart);

// Rank-statistic AUC with tied ranks averaged; nullopt for one-class input.
std::optional<double> rank_auc(const std::vector<double>& scores,
                               const std::vector<int>& labels);

struct RepairTask {
    int child = -1;
    std::vector<int> candidates;  // chart ids, ascending
    std::vector<int> valid_set;   // V_m
    int reference_parent = -1;    // r_m
    bool hard = false;
    bool heuristic_fail = false;
};

enum class BankMode { EdgeBank, Prefix };

// One task per valid cross-partition edge (child side of the edge). Pool =
// cross-partition charts within candidate_radius plus all valid parents.
// Hard: some invalid candidate outranks every valid one under the geometric
// nearest-neighbor score. Heuristic-fail: the NN top-1 is invalid. In prefix
// mode candidates are restricted to charts earlier in serial_order.
std::vector<RepairTask> build_repair_bank(const std::vector<Chart>& charts,
                                          const ChartSupports& supports,
                                          const std::vector<std::pair<int, int>>& valid_edges,
                                          BankMode mode, double candidate_radius,
                                          const std::vector<int>& serial_order = {});

enum class RepairScorer { NearestNeighbor, DenseSupport, SeamHead, Policy };

struct RepairScoringContext {
    const std::vector<Chart>* charts = nullptr;
    const ChartSupports* supports = nullptr;
    const std::vector<std::vector<double>>* tokens = nullptr;  // h per chart
    const SeamHead* head = nullptr;
    double tau_band_scale = 0.1;  // tau_band = scale * min(s_i, s_j)
};

struct RankedRepair {
    std::vector<int> ranked;  // best first
    double valid_at1 = 0.0, valid_at3 = 0.0;
    double parent_at1 = 0.0, parent_at3 = 0.0;
    double valid_mrr = 0.0, parent_mrr = 0.0;
};

RankedRepair repair_rank(const RepairTask& task, RepairScorer scorer,
                         const RepairScoringContext& ctx);

}  // namespace c2lt
