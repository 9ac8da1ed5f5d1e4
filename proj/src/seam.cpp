#include "c2lt/seam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "c2lt/util.hpp"

namespace c2lt {

// Seam supports are ownership-filtered: the anchor plus the chart's
// own-partition neighbors. The full (partition-agnostic) neighborhood stays on
// the chart itself for tokenization and realization.
ChartSupports build_supports(const SurfaceObject& obj, const std::vector<Chart>& charts) {
    ChartSupports s;
    s.points.resize(charts.size());
    s.normals.resize(charts.size());
    s.index.resize(charts.size());
    for (size_t c = 0; c < charts.size(); ++c) {
        s.points[c].push_back(charts[c].anchor);
        s.normals[c].push_back(charts[c].normal);
        for (size_t id : charts[c].neighbor_ids) {
            // component_of carries ownership; hint partitions follow it 1:1
            // for synthetic corpora and the chart partition otherwise.
            bool own = obj.component_of.empty()
                           ? true
                           : obj.component_of[id] == obj.component_of[charts[c].anchor_id];
            if (!own) continue;
            s.points[c].push_back(obj.points[id]);
            s.normals[c].push_back(obj.normals[id]);
        }
        s.index[c] = NNIndex(s.points[c]);
    }
    return s;
}

double support_distance(const ChartSupports& s, int i, int j) {
    const auto& pi = s.points[i];
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : pi) best = std::min(best, s.index[j].nearest_sq(p).distance);
    return std::sqrt(best);
}

std::vector<SeamCandidate> propose_candidates(const std::vector<Chart>& charts,
                                              const ChartSupports& supports, double eps_contact) {
    if (eps_contact <= 0.0) throw ConfigError("seam.eps_contact must be > 0");
    std::vector<SeamCandidate> out;
    size_t n = charts.size();
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = i + 1; j < n; ++j) {
            double d = support_distance(supports, int(i), int(j));
            if (!(d < eps_contact)) continue;
            for (int dir = 0; dir < 2; ++dir) {
                size_t a = dir == 0 ? i : j;
                size_t b = dir == 0 ? j : i;
                SeamCandidate cand;
                cand.source = int(a);
                cand.dest = int(b);
                cand.coarse_rel = compose(charts[a].pose().inverse(), charts[b].pose());
                cand.scale_ratio = charts[a].scale / charts[b].scale;
                cand.support_dist = d;
                out.push_back(cand);
            }
        }
    }
    return out;
}

namespace {

// Indices of support points within tau_band of the other support.
std::vector<size_t> boundary_band(const ChartSupports& s, int i, int j, double tau_band) {
    std::vector<size_t> band;
    const auto& pts = s.points[i];
    for (size_t m = 0; m < pts.size(); ++m) {
        double d = std::sqrt(s.index[j].nearest_sq(pts[m]).distance);
        if (d <= tau_band) band.push_back(m);
    }
    return band;
}

std::vector<size_t> all_indices(size_t n) {
    std::vector<size_t> v(n);
    for (size_t i = 0; i < n; ++i) v[i] = i;
    return v;
}

double directional_chamfer(const std::vector<Vec3>& pts, const std::vector<size_t>& ids,
                           const NNIndex& other) {
    double acc = 0.0;
    for (size_t id : ids) acc += std::sqrt(other.nearest_sq(pts[id]).distance);
    return acc / double(ids.size());
}

}  // namespace

double compat_target(const Chart& ci, const Chart& cj, const ChartSupports& supports,
                     double tau_band) {
    int i = ci.id, j = cj.id;
    const auto& si = supports.points[i];
    const auto& sj = supports.points[j];
    if (si.empty() || sj.empty()) throw DataError("compat_target: empty support");

    std::vector<size_t> band_i = boundary_band(supports, i, j, tau_band);
    std::vector<size_t> band_j = boundary_band(supports, j, i, tau_band);

    double s_ov = 0.5 * (double(band_i.size()) / double(si.size()) +
                         double(band_j.size()) / double(sj.size()));

    std::vector<size_t> use_i = band_i.empty() ? all_indices(si.size()) : band_i;
    std::vector<size_t> use_j = band_j.empty() ? all_indices(sj.size()) : band_j;

    // Boundary-band Chamfer between band samples (full support when a band is
    // empty, which keeps far-apart pairs scoring near zero).
    NNIndex idx_use_i, idx_use_j;
    {
        std::vector<Vec3> bi, bj;
        for (size_t m : use_i) bi.push_back(si[m]);
        for (size_t m : use_j) bj.push_back(sj[m]);
        idx_use_i = NNIndex(std::move(bi));
        idx_use_j = NNIndex(std::move(bj));
    }
    double d_cd = 0.5 * (directional_chamfer(si, use_i, idx_use_j) +
                         directional_chamfer(sj, use_j, idx_use_i));
    double s_min = std::min(ci.scale, cj.scale);
    double s_cd = std::exp(-d_cd / (0.15 * std::max(s_min, 1e-12)));

    // Normal consistency over paired nearest normals, mapped to [0,1].
    auto directional_ncons = [&](const std::vector<Vec3>& pts, const std::vector<Vec3>& nrm,
                                 const std::vector<size_t>& ids, const NNIndex& other,
                                 const std::vector<Vec3>& other_nrm) {
        double acc = 0.0;
        for (size_t id : ids) {
            size_t nn = other.nearest_sq(pts[id]).id;
            double c = nrm[id].normalized().dot(other_nrm[nn].normalized());
            acc += 0.5 * (1.0 + std::clamp(c, -1.0, 1.0));
        }
        return acc / double(ids.size());
    };
    double n_cons = 0.5 * (directional_ncons(si, supports.normals[i], use_i, supports.index[j],
                                             supports.normals[j]) +
                           directional_ncons(sj, supports.normals[j], use_j, supports.index[i],
                                             supports.normals[i]));

    // Occupancy agreement proxy: membership agreement of contact-zone midpoint
    // samples against both support bands.
    auto directional_qocc = [&](const std::vector<Vec3>& pts, const std::vector<size_t>& ids,
                                const NNIndex& self, const NNIndex& other) {
        double acc = 0.0;
        for (size_t id : ids) {
            Vec3 y = other.points()[other.nearest_sq(pts[id]).id];
            Vec3 z = (pts[id] + y) * 0.5;
            bool in_self = std::sqrt(self.nearest_sq(z).distance) <= tau_band;
            bool in_other = std::sqrt(other.nearest_sq(z).distance) <= tau_band;
            acc += (in_self == in_other) ? 1.0 : 0.0;
        }
        return acc / double(ids.size());
    };
    double q_occ =
        0.5 * (directional_qocc(si, use_i, supports.index[i], supports.index[j]) +
               directional_qocc(sj, use_j, supports.index[j], supports.index[i]));

    double target = 0.35 * s_ov + 0.25 * s_cd + 0.20 * n_cons + 0.20 * q_occ;
    return std::clamp(target, 0.0, 1.0);
}

std::array<double, 7> pose_refine_target(const Chart& ci, const Chart& cj,
                                         const ChartSupports& supports, double tau_band) {
    int i = ci.id, j = cj.id;
    const auto& si = supports.points[i];
    std::vector<size_t> band_i = boundary_band(supports, i, j, tau_band);
    std::vector<size_t> use_i = band_i.empty() ? all_indices(si.size()) : band_i;

    // Matched pairs source band -> nearest dest support point.
    Vec3 cx{0, 0, 0}, cy{0, 0, 0};
    std::vector<std::pair<Vec3, Vec3>> pairs;
    for (size_t m : use_i) {
        Vec3 y = supports.points[j][supports.index[j].nearest_sq(si[m]).id];
        pairs.emplace_back(si[m], y);
        cx += si[m];
        cy += y;
    }
    double n = double(pairs.size());
    cx = cx / n;
    cy = cy / n;

    // One linearized point-to-point step: solve A w = b with
    // A = sum(|p|^2 I - p p^T), b = sum(p x r).
    double A[9] = {0, 0, 0, 0, 0, 0, 0, 0, 0};
    Vec3 b{0, 0, 0};
    for (const auto& [x, y] : pairs) {
        Vec3 p = x - cx;
        Vec3 r = y - cy;
        double p2 = p.norm2();
        double pv[3] = {p.x, p.y, p.z};
        for (int r_ = 0; r_ < 3; ++r_)
            for (int c_ = 0; c_ < 3; ++c_)
                A[r_ * 3 + c_] += (r_ == c_ ? p2 : 0.0) - pv[r_] * pv[c_];
        b += p.cross(r);
    }
    for (int d = 0; d < 3; ++d) A[d * 3 + d] += 1e-9;
    // Cramer solve.
    auto det3 = [](const double m[9]) {
        return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
               m[2] * (m[3] * m[7] - m[4] * m[6]);
    };
    double det = det3(A);
    Vec3 w{0, 0, 0};
    if (std::abs(det) > 1e-18) {
        double m[9];
        for (int c = 0; c < 3; ++c) {
            std::copy(A, A + 9, m);
            m[c] = b.x;
            m[3 + c] = b.y;
            m[6 + c] = b.z;
            w.set(c, det3(m) / det);
        }
    }

    Pose correction;
    double angle = w.norm();
    correction.rotation =
        angle > 1e-12 ? Rotation::axis_angle(w * (1.0 / angle), angle) : Rotation::identity();
    correction.translation = cy - correction.rotation.apply(cx);
    correction.scale = 1.0;

    // Residual between coarse relative pose and the fit-improved pose,
    // expressed in the dest chart frame: T_j^-1 C^-1 T_j.
    Pose tj = cj.pose();
    Pose residual = compose(tj.inverse(), compose(correction.inverse(), tj));
    Vec3 aa = residual.rotation.to_axis_angle();
    return {aa.x, aa.y, aa.z, residual.translation.x, residual.translation.y,
            residual.translation.z, std::log(residual.scale)};
}

// ---------------------------------------------------------------------------
// Seam head
// ---------------------------------------------------------------------------

namespace {

struct HeadLayout {
    size_t w1, b1, wc, bc, wp, bp, wcoll, bcoll, winv, binv, total;
};

HeadLayout head_layout(int input_dim, int hidden) {
    HeadLayout L;
    size_t in = size_t(input_dim), h = size_t(hidden);
    L.w1 = 0;
    L.b1 = L.w1 + h * in;
    L.wc = L.b1 + h;
    L.bc = L.wc + h;
    L.wp = L.bc + 1;
    L.bp = L.wp + 7 * h;
    L.wcoll = L.bp + 7;
    L.bcoll = L.wcoll + h;
    L.winv = L.bcoll + 1;
    L.binv = L.winv + h;
    L.total = L.binv + 1;
    return L;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct HeadActivation {
    std::vector<double> t;  // tanh trunk
    double compat_logit = 0.0, coll_logit = 0.0, inv_logit = 0.0;
    std::array<double, 7> pose = {0, 0, 0, 0, 0, 0, 0};
};

HeadActivation head_forward(const SeamHead& head, const std::vector<double>& input) {
    if (int(input.size()) != head.input_dim)
        throw DataError("seam_forward: input dimension mismatch");
    HeadLayout L = head_layout(head.input_dim, head.hidden);
    const double* th = head.theta.data();
    HeadActivation act;
    act.t.resize(head.hidden);
    for (int r = 0; r < head.hidden; ++r) {
        double a = th[L.b1 + r];
        const double* w = th + L.w1 + size_t(r) * head.input_dim;
        for (int c = 0; c < head.input_dim; ++c) a += w[c] * input[c];
        act.t[r] = std::tanh(a);
    }
    auto dot_head = [&](size_t w_off, size_t b_off) {
        double a = th[b_off];
        const double* w = th + w_off;
        for (int c = 0; c < head.hidden; ++c) a += w[c] * act.t[c];
        return a;
    };
    act.compat_logit = dot_head(L.wc, L.bc);
    act.coll_logit = dot_head(L.wcoll, L.bcoll);
    act.inv_logit = dot_head(L.winv, L.binv);
    for (int r = 0; r < 7; ++r) {
        double a = th[L.bp + r];
        const double* w = th + L.wp + size_t(r) * head.hidden;
        for (int c = 0; c < head.hidden; ++c) a += w[c] * act.t[c];
        act.pose[r] = a;
    }
    return act;
}

}  // namespace

SeamHead SeamHead::seeded(int input_dim, int hidden, uint64_t seed) {
    SeamHead head;
    head.input_dim = input_dim;
    head.hidden = hidden;
    HeadLayout L = head_layout(input_dim, hidden);
    head.theta.assign(L.total, 0.0);
    Rng rng(derive_seed(seed, 0x5ea11ULL));
    double s1 = 1.0 / std::sqrt(double(input_dim));
    for (size_t i = L.w1; i < L.b1; ++i) head.theta[i] = rng.normal() * s1;
    double s2 = 1.0 / std::sqrt(double(hidden));
    for (size_t i = L.wc; i < L.total; ++i) head.theta[i] = rng.normal() * s2;
    // Biases start at zero.
    head.theta[L.bc] = 0.0;
    for (int r = 0; r < 7; ++r) head.theta[L.bp + r] = 0.0;
    head.theta[L.bcoll] = 0.0;
    head.theta[L.binv] = 0.0;
    return head;
}

std::vector<double> seam_input(const std::vector<double>& h_i, const std::vector<double>& h_j,
                               const Pose& coarse_rel, double scale_ratio) {
    std::vector<double> u;
    u.reserve(h_i.size() + h_j.size() + 8);
    u.insert(u.end(), h_i.begin(), h_i.end());
    u.insert(u.end(), h_j.begin(), h_j.end());
    Vec3 aa = coarse_rel.rotation.to_axis_angle();
    u.push_back(aa.x);
    u.push_back(aa.y);
    u.push_back(aa.z);
    u.push_back(coarse_rel.translation.x);
    u.push_back(coarse_rel.translation.y);
    u.push_back(coarse_rel.translation.z);
    u.push_back(std::log(std::max(coarse_rel.scale, 1e-12)));
    u.push_back(scale_ratio);
    return u;
}

SeamPrediction seam_forward(const SeamHead& head, const std::vector<double>& input) {
    HeadActivation act = head_forward(head, input);
    SeamPrediction pred;
    pred.compat = sigmoid(act.compat_logit);
    pred.refine = act.pose;
    pred.p_coll = sigmoid(act.coll_logit);
    pred.p_invalid = sigmoid(act.inv_logit);
    return pred;
}

double seam_loss(const SeamHead& head, const std::vector<SeamExample>& bank,
                 const TrainSchedule& sched, std::vector<double>* d_theta) {
    if (bank.empty()) throw DataError("seam_loss: empty bank");
    HeadLayout L = head_layout(head.input_dim, head.hidden);
    if (d_theta) d_theta->assign(L.total, 0.0);

    size_t n = bank.size();
    std::vector<HeadActivation> acts(n);
    std::vector<double> compat(n);
    size_t n_pose = 0;
    std::vector<size_t> pos_ids, neg_ids;
    for (size_t m = 0; m < n; ++m) {
        acts[m] = head_forward(head, bank[m].input);
        compat[m] = sigmoid(acts[m].compat_logit);
        if (bank[m].target >= sched.pose_mask_threshold) ++n_pose;
        if (bank[m].target >= sched.positive_threshold) pos_ids.push_back(m);
        if (bank[m].target <= sched.negative_threshold) neg_ids.push_back(m);
    }

    double l_compat = 0.0, l_pose = 0.0, l_coll = 0.0, l_inv = 0.0;
    for (size_t m = 0; m < n; ++m) {
        double diff = compat[m] - bank[m].target;
        l_compat += diff * diff;
        double pc = std::clamp(sigmoid(acts[m].coll_logit), 1e-12, 1.0 - 1e-12);
        l_coll -= bank[m].collision_label ? std::log(pc) : std::log(1.0 - pc);
        double pi = std::clamp(sigmoid(acts[m].inv_logit), 1e-12, 1.0 - 1e-12);
        l_inv -= bank[m].invalid_label ? std::log(pi) : std::log(1.0 - pi);
        if (bank[m].target >= sched.pose_mask_threshold) {
            double acc = 0.0;
            for (int r = 0; r < 7; ++r) {
                double d = acts[m].pose[r] - bank[m].pose_target[r];
                acc += d * d;
            }
            l_pose += acc / 7.0;
        }
    }
    l_compat /= double(n);
    l_coll /= double(n);
    l_inv /= double(n);
    if (n_pose > 0) l_pose /= double(n_pose);

    double mean_pos = 0.0, mean_neg = 0.0;
    for (size_t m : pos_ids) mean_pos += compat[m];
    for (size_t m : neg_ids) mean_neg += compat[m];
    if (!pos_ids.empty()) mean_pos /= double(pos_ids.size());
    if (!neg_ids.empty()) mean_neg /= double(neg_ids.size());
    double hinge = 0.0;
    bool hinge_active = false;
    if (!pos_ids.empty() && !neg_ids.empty()) {
        hinge = std::max(0.0, sched.separation_margin - (mean_pos - mean_neg));
        hinge_active = hinge > 0.0;
    }

    double loss = sched.lambda_compat * l_compat + sched.lambda_pose * l_pose +
                  sched.lambda_coll * l_coll + sched.lambda_sep * hinge + sched.lambda_inv * l_inv;
    if (!d_theta) return loss;

    std::vector<double>& g = *d_theta;
    const double* th = head.theta.data();
    std::vector<double> dt(head.hidden);
    for (size_t m = 0; m < n; ++m) {
        std::fill(dt.begin(), dt.end(), 0.0);
        // Compat head: MSE through the logistic plus the hinge contribution.
        double d_compat = sched.lambda_compat * 2.0 * (compat[m] - bank[m].target) / double(n);
        if (hinge_active) {
            if (bank[m].target >= sched.positive_threshold)
                d_compat -= sched.lambda_sep / double(pos_ids.size());
            if (bank[m].target <= sched.negative_threshold)
                d_compat += sched.lambda_sep / double(neg_ids.size());
        }
        double d_clogit = d_compat * compat[m] * (1.0 - compat[m]);
        double pc = sigmoid(acts[m].coll_logit);
        double d_colllogit =
            sched.lambda_coll * (pc - double(bank[m].collision_label)) / double(n);
        double pi = sigmoid(acts[m].inv_logit);
        double d_invlogit = sched.lambda_inv * (pi - double(bank[m].invalid_label)) / double(n);

        if (d_clogit != 0.0) {
            g[L.bc] += d_clogit;
            for (int c = 0; c < head.hidden; ++c) {
                g[L.wc + c] += d_clogit * acts[m].t[c];
                dt[c] += d_clogit * th[L.wc + c];
            }
        }
        if (d_colllogit != 0.0) {
            g[L.bcoll] += d_colllogit;
            for (int c = 0; c < head.hidden; ++c) {
                g[L.wcoll + c] += d_colllogit * acts[m].t[c];
                dt[c] += d_colllogit * th[L.wcoll + c];
            }
        }
        if (d_invlogit != 0.0) {
            g[L.binv] += d_invlogit;
            for (int c = 0; c < head.hidden; ++c) {
                g[L.winv + c] += d_invlogit * acts[m].t[c];
                dt[c] += d_invlogit * th[L.winv + c];
            }
        }
        if (bank[m].target >= sched.pose_mask_threshold && n_pose > 0 &&
            sched.lambda_pose != 0.0) {
            for (int r = 0; r < 7; ++r) {
                double d_p = sched.lambda_pose * 2.0 *
                             (acts[m].pose[r] - bank[m].pose_target[r]) /
                             (7.0 * double(n_pose));
                if (d_p == 0.0) continue;
                g[L.bp + r] += d_p;
                const double* w = th + L.wp + size_t(r) * head.hidden;
                double* gw = g.data() + L.wp + size_t(r) * head.hidden;
                for (int c = 0; c < head.hidden; ++c) {
                    gw[c] += d_p * acts[m].t[c];
                    dt[c] += d_p * w[c];
                }
            }
        }
        // Trunk backward.
        for (int r = 0; r < head.hidden; ++r) {
            double dz = dt[r] * (1.0 - acts[m].t[r] * acts[m].t[r]);
            if (dz == 0.0) continue;
            g[L.b1 + r] += dz;
            double* gw = g.data() + L.w1 + size_t(r) * head.input_dim;
            for (int c = 0; c < head.input_dim; ++c) gw[c] += dz * bank[m].input[c];
        }
    }
    return loss;
}

TrainResult train_seam_head(SeamHead& head, const std::vector<SeamExample>& bank,
                            const TrainSchedule& sched) {
    bool has_pos = false, has_neg = false;
    for (const auto& ex : bank) {
        if (ex.target >= sched.positive_threshold) has_pos = true;
        if (ex.target <= sched.negative_threshold) has_neg = true;
    }
    if (!has_pos || !has_neg)
        throw DataError("train_seam_head: need at least one positive and one negative candidate");

    TrainResult result;
    std::vector<double> grad;
    for (int epoch = 0; epoch < sched.epochs; ++epoch) {
        double loss = seam_loss(head, bank, sched, &grad);
        result.loss_trace.push_back(loss);
        for (size_t i = 0; i < head.theta.size(); ++i) head.theta[i] -= sched.lr * grad[i];
    }
    result.loss_trace.push_back(seam_loss(head, bank, sched, nullptr));
    return result;
}

// ---------------------------------------------------------------------------
// Discrimination metrics
// ---------------------------------------------------------------------------

std::optional<double> rank_auc(const std::vector<double>& scores,
                               const std::vector<int>& labels) {
    size_t n_pos = 0, n_neg = 0;
    for (int l : labels) (l ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0) return std::nullopt;

    std::vector<size_t> order(scores.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return scores[a] < scores[b]; });
    // Average ranks across ties.
    std::vector<double> rank(scores.size(), 0.0);
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        double avg = 0.5 * double(i + 1 + j + 1);
        for (size_t k = i; k <= j; ++k) rank[order[k]] = avg;
        i = j + 1;
    }
    double rank_sum = 0.0;
    for (size_t m = 0; m < scores.size(); ++m)
        if (labels[m]) rank_sum += rank[m];
    double u = rank_sum - double(n_pos) * double(n_pos + 1) * 0.5;
    return u / (double(n_pos) * double(n_neg));
}

SeamMetrics seam_metrics(const std::vector<double>& scores, const std::vector<int>& valid_labels,
                         const std::vector<double>& coll_probs,
                         const std::vector<int>& coll_labels,
                         const std::vector<int>& source_chart) {
    if (scores.empty()) throw DataError("seam_metrics: no labeled candidates");
    SeamMetrics out;
    out.auc = rank_auc(scores, valid_labels);

    // Average precision over (score desc, index asc) ranking.
    std::vector<size_t> order(scores.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });
    size_t n_pos = 0;
    for (int l : valid_labels) n_pos += l;
    if (n_pos > 0) {
        double hits = 0.0, ap = 0.0;
        for (size_t k = 0; k < order.size(); ++k) {
            if (valid_labels[order[k]]) {
                hits += 1.0;
                ap += hits / double(k + 1);
            }
        }
        out.average_precision = ap / double(n_pos);
    }

    if (!coll_probs.empty()) {
        double acc = 0.0;
        for (size_t m = 0; m < coll_probs.size(); ++m) {
            double d = coll_probs[m] - double(coll_labels[m]);
            acc += d * d;
        }
        out.collision_brier = acc / double(coll_probs.size());
    }

    // Top-1 precision / top-3 recall per source chart.
    std::map<int, std::vector<size_t>> by_source;
    for (size_t m = 0; m < scores.size(); ++m) by_source[source_chart[m]].push_back(m);
    double p1_acc = 0.0, r3_acc = 0.0;
    size_t p1_n = 0, r3_n = 0;
    for (auto& [src, ids] : by_source) {
        std::stable_sort(ids.begin(), ids.end(), [&](size_t a, size_t b) {
            if (scores[a] != scores[b]) return scores[a] > scores[b];
            return a < b;
        });
        ++p1_n;
        p1_acc += valid_labels[ids[0]] ? 1.0 : 0.0;
        size_t valid_out = 0;
        for (size_t m : ids) valid_out += valid_labels[m];
        if (valid_out > 0) {
            size_t hit = 0;
            for (size_t k = 0; k < std::min<size_t>(3, ids.size()); ++k)
                hit += valid_labels[ids[k]];
            r3_acc += double(hit) / double(valid_out);
            ++r3_n;
        }
    }
    if (p1_n > 0) out.top1_precision = p1_acc / double(p1_n);
    if (r3_n > 0) out.top3_recall = r3_acc / double(r3_n);
    return out;
}

// ---------------------------------------------------------------------------
// Repair bank
// ---------------------------------------------------------------------------

std::vector<RepairTask> build_repair_bank(const std::vector<Chart>& charts,
                                          const ChartSupports& supports,
                                          const std::vector<std::pair<int, int>>& valid_edges,
                                          BankMode mode, double candidate_radius,
                                          const std::vector<int>& serial_order) {
    // child -> set of valid parents
    std::map<int, std::vector<int>> valid_parents;
    for (const auto& [child, parent] : valid_edges) valid_parents[child].push_back(parent);
    for (auto& [c, v] : valid_parents) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    }

    std::vector<int> serial_pos(charts.size(), 0);
    if (mode == BankMode::Prefix) {
        if (serial_order.size() != charts.size())
            throw DataError("prefix repair bank requires a serialization order");
        for (size_t k = 0; k < serial_order.size(); ++k) serial_pos[serial_order[k]] = int(k);
    }

    std::vector<RepairTask> bank;
    for (const auto& [child, parent] : valid_edges) {
        RepairTask task;
        task.child = child;
        task.reference_parent = parent;
        task.valid_set = valid_parents[child];

        for (size_t k = 0; k < charts.size(); ++k) {
            int cid = int(k);
            if (cid == child) continue;
            if (charts[k].partition == charts[child].partition) continue;
            if (mode == BankMode::Prefix && serial_pos[cid] >= serial_pos[child]) continue;
            bool is_valid = std::binary_search(task.valid_set.begin(), task.valid_set.end(), cid);
            if (!is_valid && support_distance(supports, child, cid) >= candidate_radius) continue;
            task.candidates.push_back(cid);
        }
        if (mode == BankMode::Prefix &&
            !std::binary_search(task.candidates.begin(), task.candidates.end(), parent))
            continue;  // reference parent not reachable in this prefix
        if (task.candidates.size() < 2) continue;

        // Geometric NN tags.
        double best_valid = -std::numeric_limits<double>::infinity();
        double best_invalid = -std::numeric_limits<double>::infinity();
        double best_all = -std::numeric_limits<double>::infinity();
        int best_id = -1;
        for (int cid : task.candidates) {
            double score = -support_distance(supports, child, cid);
            bool is_valid = std::binary_search(task.valid_set.begin(), task.valid_set.end(), cid);
            if (is_valid)
                best_valid = std::max(best_valid, score);
            else
                best_invalid = std::max(best_invalid, score);
            if (score > best_all) {
                best_all = score;
                best_id = cid;
            }
        }
        task.hard = best_invalid > best_valid;
        task.heuristic_fail =
            best_id >= 0 &&
            !std::binary_search(task.valid_set.begin(), task.valid_set.end(), best_id);
        bank.push_back(std::move(task));
    }
    return bank;
}

namespace {

// Min-max normalization within a task; constant vectors normalize to zero.
std::vector<double> min_max(const std::vector<double>& v) {
    double lo = *std::min_element(v.begin(), v.end());
    double hi = *std::max_element(v.begin(), v.end());
    std::vector<double> out(v.size(), 0.0);
    if (hi > lo)
        for (size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - lo) / (hi - lo);
    return out;
}

}  // namespace

RankedRepair repair_rank(const RepairTask& task, RepairScorer scorer,
                         const RepairScoringContext& ctx) {
    if (task.candidates.size() < 2) throw DataError("repair_rank: need at least 2 candidates");
    const auto& charts = *ctx.charts;
    size_t n = task.candidates.size();

    auto nn_scores = [&]() {
        std::vector<double> s(n);
        for (size_t k = 0; k < n; ++k)
            s[k] = -support_distance(*ctx.supports, task.child, task.candidates[k]);
        return s;
    };
    auto dense_scores = [&]() {
        std::vector<double> s(n);
        for (size_t k = 0; k < n; ++k) {
            int cid = task.candidates[k];
            double tau = ctx.tau_band_scale *
                         std::min(charts[task.child].scale, charts[cid].scale);
            const auto& child_pts = ctx.supports->points[task.child];
            const auto& cand_pts = ctx.supports->points[cid];
            size_t band_child = 0, band_cand = 0;
            for (const auto& p : child_pts)
                if (std::sqrt(ctx.supports->index[cid].nearest_sq(p).distance) <= tau)
                    ++band_child;
            for (const auto& p : cand_pts)
                if (std::sqrt(ctx.supports->index[task.child].nearest_sq(p).distance) <= tau)
                    ++band_cand;
            s[k] = 0.5 * (double(band_child) / double(child_pts.size()) +
                          double(band_cand) / double(cand_pts.size()));
        }
        return s;
    };
    auto head_predictions = [&]() {
        std::vector<SeamPrediction> preds(n);
        for (size_t k = 0; k < n; ++k) {
            int cid = task.candidates[k];
            Pose rel = compose(charts[task.child].pose().inverse(), charts[cid].pose());
            auto input = seam_input((*ctx.tokens)[task.child], (*ctx.tokens)[cid], rel,
                                    charts[task.child].scale / charts[cid].scale);
            preds[k] = seam_forward(*ctx.head, input);
        }
        return preds;
    };

    std::vector<double> scores(n, 0.0);
    switch (scorer) {
        case RepairScorer::NearestNeighbor:
            scores = nn_scores();
            break;
        case RepairScorer::DenseSupport:
            scores = dense_scores();
            break;
        case RepairScorer::SeamHead: {
            auto preds = head_predictions();
            for (size_t k = 0; k < n; ++k) scores[k] = preds[k].compat;
            break;
        }
        case RepairScorer::Policy: {
            auto preds = head_predictions();
            std::vector<double> s_psi(n), p_coll(n), p_inv(n);
            for (size_t k = 0; k < n; ++k) {
                s_psi[k] = preds[k].compat;
                p_coll[k] = preds[k].p_coll;
                p_inv[k] = preds[k].p_invalid;
            }
            auto s_psi_n = min_max(s_psi);
            auto s_dist_n = min_max(nn_scores());
            auto p_coll_n = min_max(p_coll);
            auto p_inv_n = min_max(p_inv);
            for (size_t k = 0; k < n; ++k)
                scores[k] = s_psi_n[k] + 0.5 * s_dist_n[k] - 0.5 * p_coll_n[k] - 0.5 * p_inv_n[k];
            break;
        }
    }

    std::vector<size_t> order(n);
    for (size_t k = 0; k < n; ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return task.candidates[a] < task.candidates[b];
    });

    RankedRepair out;
    out.ranked.reserve(n);
    for (size_t k : order) out.ranked.push_back(task.candidates[k]);

    auto is_valid = [&](int cid) {
        return std::binary_search(task.valid_set.begin(), task.valid_set.end(), cid);
    };
    for (size_t k = 0; k < out.ranked.size(); ++k) {
        bool v = is_valid(out.ranked[k]);
        bool r = out.ranked[k] == task.reference_parent;
        if (k == 0) {
            out.valid_at1 = v ? 1.0 : 0.0;
            out.parent_at1 = r ? 1.0 : 0.0;
        }
        if (k < 3) {
            if (v) out.valid_at3 = 1.0;
            if (r) out.parent_at3 = 1.0;
        }
        if (v && out.valid_mrr == 0.0) out.valid_mrr = 1.0 / double(k + 1);
        if (r && out.parent_mrr == 0.0) out.parent_mrr = 1.0 / double(k + 1);
    }
    return out;
}

}  // namespace c2lt
