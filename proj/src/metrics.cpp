#include "c2lt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "c2lt/constants.hpp"
#include "c2lt/util.hpp"

namespace c2lt {

double adaptive_tau(double extent) {
    if (extent <= 0.0) throw DataError("adaptive_tau: extent must be > 0");
    return std::max(constants::kTauScale * extent, constants::kTauFloor);
}

namespace {

// Directional nearest distances, parallel fill + fixed-order reduction.
void directional_distances(const std::vector<Vec3>& from, const NNIndex& to,
                           std::vector<double>& out) {
    out.resize(from.size());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < long(from.size()); ++i)
        out[size_t(i)] = std::sqrt(to.nearest_sq(from[size_t(i)]).distance);
}

double ordered_mean(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc / double(v.size());
}

}  // namespace

DistancePair chamfer_hausdorff(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
    if (a.empty() && b.empty()) return {0.0, 0.0};
    if (a.empty() || b.empty()) return {1.0, 1.0};
    NNIndex ia(a), ib(b);
    std::vector<double> da, db;
    directional_distances(a, ib, da);
    directional_distances(b, ia, db);
    DistancePair out;
    out.chamfer = 0.5 * (ordered_mean(da) + ordered_mean(db));
    double ha = *std::max_element(da.begin(), da.end());
    double hb = *std::max_element(db.begin(), db.end());
    out.hausdorff = std::max(ha, hb);
    return out;
}

double separation_score(const std::vector<std::vector<Vec3>>& predicted_components, double tau) {
    std::vector<size_t> nonempty;
    for (size_t k = 0; k < predicted_components.size(); ++k)
        if (!predicted_components[k].empty()) nonempty.push_back(k);
    if (nonempty.empty()) return 0.0;
    if (nonempty.size() < 2) return 1.0;

    std::vector<NNIndex> index(nonempty.size());
    for (size_t k = 0; k < nonempty.size(); ++k)
        index[k] = NNIndex(predicted_components[nonempty[k]]);

    double tau2 = tau * tau;
    double acc = 0.0;
    size_t pairs = 0;
    for (size_t a = 0; a < nonempty.size(); ++a) {
        for (size_t b = a + 1; b < nonempty.size(); ++b) {
            const auto& pa = predicted_components[nonempty[a]];
            const auto& pb = predicted_components[nonempty[b]];
            std::vector<long> hits_a(pa.size()), hits_b(pb.size());
#pragma omp parallel for schedule(static)
            for (long i = 0; i < long(pa.size()); ++i)
                hits_a[size_t(i)] = index[b].nearest_sq(pa[size_t(i)]).distance < tau2 ? 1 : 0;
#pragma omp parallel for schedule(static)
            for (long i = 0; i < long(pb.size()); ++i)
                hits_b[size_t(i)] = index[a].nearest_sq(pb[size_t(i)]).distance < tau2 ? 1 : 0;
            long ca = 0, cb = 0;
            for (long h : hits_a) ca += h;
            for (long h : hits_b) cb += h;
            acc += 0.5 * (double(ca) / double(pa.size()) + double(cb) / double(pb.size()));
            ++pairs;
        }
    }
    return 1.0 - acc / double(pairs);
}

double contamination_rate(const std::vector<std::vector<Vec3>>& predicted_components,
                          const std::vector<std::vector<Vec3>>& gt_supports, double tau) {
    size_t total = 0;
    for (const auto& c : predicted_components) total += c.size();
    if (total == 0) return 1.0;

    // No cross-component comparison when fewer than two nonempty GT supports.
    size_t gt_nonempty = 0;
    for (const auto& s : gt_supports)
        if (!s.empty()) ++gt_nonempty;
    if (gt_nonempty < 2) return 0.0;

    std::vector<NNIndex> gt_index(gt_supports.size());
    for (size_t k = 0; k < gt_supports.size(); ++k) gt_index[k] = NNIndex(gt_supports[k]);

    long contaminated = 0;
    for (size_t k = 0; k < predicted_components.size(); ++k) {
        const auto& pts = predicted_components[k];
        if (pts.empty()) continue;
        if (k >= gt_supports.size() || gt_supports[k].empty())
            throw DataError("contamination_rate: predicted component without a GT support");
        std::vector<long> flags(pts.size());
#pragma omp parallel for schedule(static)
        for (long i = 0; i < long(pts.size()); ++i) {
            const Vec3& x = pts[size_t(i)];
            double d_own = std::sqrt(gt_index[k].nearest_sq(x).distance);
            double d_other = std::numeric_limits<double>::infinity();
            for (size_t o = 0; o < gt_supports.size(); ++o) {
                if (o == k || gt_supports[o].empty()) continue;
                d_other = std::min(d_other, std::sqrt(gt_index[o].nearest_sq(x).distance));
            }
            bool leak = (d_other + tau < d_own) || (d_other < tau && d_own > tau);
            flags[size_t(i)] = leak ? 1 : 0;
        }
        for (long f : flags) contaminated += f;
    }
    return double(contaminated) / double(total);
}

double normal_consistency(const std::vector<Vec3>& predicted, const std::vector<Vec3>& reference) {
    if (predicted.size() != reference.size())
        throw DataError("normal_consistency: paired lists must match");
    if (predicted.empty()) return 0.0;
    std::vector<double> vals(predicted.size());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < long(predicted.size()); ++i) {
        const Vec3& a = predicted[size_t(i)];
        const Vec3& b = reference[size_t(i)];
        double denom = std::max(a.norm(), 1e-6) * std::max(b.norm(), 1e-6);
        vals[size_t(i)] = a.dot(b) / denom;
    }
    return ordered_mean(vals);
}

namespace {

double unit_extent(const std::vector<Vec3>& pts) {
    if (pts.empty()) return 0.0;
    Vec3 lo = pts[0], hi = pts[0];
    for (const auto& p : pts) {
        lo.x = std::min(lo.x, p.x);
        lo.y = std::min(lo.y, p.y);
        lo.z = std::min(lo.z, p.z);
        hi.x = std::max(hi.x, p.x);
        hi.y = std::max(hi.y, p.y);
        hi.z = std::max(hi.z, p.z);
    }
    return std::max({hi.x - lo.x, hi.y - lo.y, hi.z - lo.z});
}

// Farthest decile from the unit centroid (boundary sample proxy).
std::vector<Vec3> boundary_decile(const std::vector<Vec3>& pts) {
    Vec3 c{0, 0, 0};
    for (const auto& p : pts) c += p;
    c = c / double(pts.size());
    std::vector<size_t> order(pts.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        double da = squared_dist(pts[a], c), db = squared_dist(pts[b], c);
        if (da != db) return da > db;
        return a < b;
    });
    size_t take = std::max<size_t>(1, (pts.size() + 9) / 10);
    std::vector<Vec3> out;
    for (size_t i = 0; i < take; ++i) out.push_back(pts[order[i]]);
    return out;
}

}  // namespace

StructFeatures struct_features(const std::vector<std::vector<Vec3>>& units_in) {
    std::vector<const std::vector<Vec3>*> units;
    for (const auto& u : units_in)
        if (!u.empty()) units.push_back(&u);
    if (units.empty()) throw DataError("struct_features: no nonempty units");

    std::vector<Vec3> all;
    for (const auto* u : units) all.insert(all.end(), u->begin(), u->end());

    Vec3 lo = all[0], hi = all[0];
    for (const auto& p : all) {
        lo.x = std::min(lo.x, p.x);
        lo.y = std::min(lo.y, p.y);
        lo.z = std::min(lo.z, p.z);
        hi.x = std::max(hi.x, p.x);
        hi.y = std::max(hi.y, p.y);
        hi.z = std::max(hi.z, p.z);
    }
    double ext[3] = {hi.x - lo.x, hi.y - lo.y, hi.z - lo.z};
    double max_ext = std::max({ext[0], ext[1], ext[2], 1e-12});

    Vec3 mean{0, 0, 0};
    for (const auto& p : all) mean += p;
    mean = mean / double(all.size());
    std::vector<double> cov(9, 0.0);
    for (const auto& p : all) {
        Vec3 d = p - mean;
        double dv[3] = {d.x, d.y, d.z};
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) cov[size_t(r) * 3 + c] += dv[r] * dv[c];
    }
    for (auto& v : cov) v /= double(all.size());
    std::vector<double> evals, evecs;
    jacobi_eigen_sym(3, cov, evals, evecs);
    double esum = std::max(evals[0] + evals[1] + evals[2], 1e-12);

    // Unit statistics.
    std::vector<Vec3> centroids(units.size());
    std::vector<double> extents(units.size());
    for (size_t k = 0; k < units.size(); ++k) {
        Vec3 c{0, 0, 0};
        for (const auto& p : *units[k]) c += p;
        centroids[k] = c / double(units[k]->size());
        extents[k] = unit_extent(*units[k]);
    }
    double mean_unit_extent = 0.0;
    for (double e : extents) mean_unit_extent += e;
    mean_unit_extent /= double(units.size());

    Vec3 cmean{0, 0, 0};
    for (const auto& c : centroids) cmean += c;
    cmean = cmean / double(centroids.size());
    double spread = 0.0;
    for (const auto& c : centroids) spread += squared_dist(c, cmean);
    spread = std::sqrt(spread / double(centroids.size()));

    StructFeatures f;
    f.values[0] = ext[0] / max_ext;
    f.values[1] = ext[1] / max_ext;
    f.values[2] = ext[2] / max_ext;
    f.values[3] = evals[0] / esum;
    f.values[4] = evals[1] / esum;
    f.values[5] = evals[2] / esum;
    f.values[6] = std::min(1.0, double(units.size()) / 64.0);
    f.values[7] = mean_unit_extent / max_ext;
    f.values[8] = spread / (0.5 * max_ext);

    if (units.size() < 2) {
        f.iq_raw = 1.0;
        f.bc_raw = 0.0;
        f.degenerate = true;
        f.values[9] = f.iq_raw;
        f.values[10] = f.bc_raw;
        return f;
    }

    // k-NN graph over unit centroids, k = min(3, units-1).
    size_t k_nn = std::min<size_t>(3, units.size() - 1);
    std::vector<std::pair<size_t, size_t>> edges;
    for (size_t i = 0; i < units.size(); ++i) {
        std::vector<std::pair<double, size_t>> others;
        for (size_t j = 0; j < units.size(); ++j)
            if (j != i) others.emplace_back(squared_dist(centroids[i], centroids[j]), j);
        std::stable_sort(others.begin(), others.end());
        for (size_t t = 0; t < k_nn; ++t) {
            size_t j = others[t].second;
            edges.emplace_back(std::min(i, j), std::max(i, j));
        }
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    std::vector<NNIndex> index(units.size());
    for (size_t k = 0; k < units.size(); ++k) index[k] = NNIndex(*units[k]);

    double o_acc = 0.0, b_acc = 0.0;
    for (const auto& [i, j] : edges) {
        double s_ij = std::max({extents[i], extents[j], 1e-12});
        double thr = constants::kIntersectionThreshold * s_ij;
        auto frac_within = [&](size_t a, size_t b) {
            size_t hits = 0;
            for (const auto& p : *units[a])
                if (std::sqrt(index[b].nearest_sq(p).distance) <= thr) ++hits;
            return double(hits) / double(units[a]->size());
        };
        double o_ij = 0.5 * (frac_within(i, j) + frac_within(j, i));
        DistancePair cd = chamfer_hausdorff(boundary_decile(*units[i]), boundary_decile(*units[j]));
        double b_ij =
            std::exp(-cd.chamfer / (constants::kBoundaryClarityScale * s_ij)) * (1.0 - o_ij);
        o_acc += o_ij;
        b_acc += b_ij;
    }
    f.iq_raw = 1.0 - o_acc / double(edges.size());
    f.bc_raw = b_acc / double(edges.size());
    f.values[9] = f.iq_raw;
    f.values[10] = f.bc_raw;
    return f;
}

StructScores struct_scores(const StructFeatures& f, double mu_iq_ref, double mu_bc_ref) {
    StructScores s;
    s.iq = std::exp(-std::abs(f.iq_raw - mu_iq_ref) / constants::kIqMapScale);
    s.bc = std::exp(-std::abs(f.bc_raw - mu_bc_ref) / constants::kBcMapScale);
    return s;
}

namespace {

constexpr int kD = StructFeatures::kDim;

// Symmetric PSD square root via eigendecomposition with clamped eigenvalues.
std::vector<double> sym_sqrt(const std::vector<double>& a) {
    std::vector<double> evals, evecs;
    jacobi_eigen_sym(kD, a, evals, evecs);
    std::vector<double> out(size_t(kD) * kD, 0.0);
    for (int r = 0; r < kD; ++r)
        for (int c = 0; c < kD; ++c) {
            double acc = 0.0;
            for (int k = 0; k < kD; ++k) {
                double lam = std::max(evals[k], 0.0);
                acc += evecs[size_t(r) * kD + k] * std::sqrt(lam) * evecs[size_t(c) * kD + k];
            }
            out[size_t(r) * kD + c] = acc;
        }
    return out;
}

std::vector<double> mat_mul(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out(size_t(kD) * kD, 0.0);
    for (int r = 0; r < kD; ++r)
        for (int k = 0; k < kD; ++k) {
            double v = a[size_t(r) * kD + k];
            if (v == 0.0) continue;
            for (int c = 0; c < kD; ++c) out[size_t(r) * kD + c] += v * b[size_t(k) * kD + c];
        }
    return out;
}

void mean_and_cov(const std::vector<StructFeatures>& batch, std::vector<double>& mu,
                  std::vector<double>& cov) {
    size_t n = batch.size();
    mu.assign(kD, 0.0);
    for (const auto& f : batch)
        for (int d = 0; d < kD; ++d) mu[d] += f.values[d];
    for (int d = 0; d < kD; ++d) mu[d] /= double(n);
    cov.assign(size_t(kD) * kD, 0.0);
    for (const auto& f : batch)
        for (int r = 0; r < kD; ++r)
            for (int c = 0; c < kD; ++c)
                cov[size_t(r) * kD + c] += (f.values[r] - mu[r]) * (f.values[c] - mu[c]);
    double denom = n > 1 ? double(n - 1) : 1.0;
    for (auto& v : cov) v /= denom;
    for (int d = 0; d < kD; ++d) cov[size_t(d) * kD + d] += 1e-9;
}

}  // namespace

double structural_fid(const std::vector<StructFeatures>& generated,
                      const std::vector<StructFeatures>& reference) {
    if (generated.empty() || reference.empty()) throw DataError("structural_fid: empty batch");
    for (const auto& f : generated)
        for (double v : f.values)
            if (!std::isfinite(v)) throw DataError("structural_fid: non-finite feature");
    for (const auto& f : reference)
        for (double v : f.values)
            if (!std::isfinite(v)) throw DataError("structural_fid: non-finite feature");

    std::vector<double> mu_g, mu_r, cov_g, cov_r;
    mean_and_cov(generated, mu_g, cov_g);
    mean_and_cov(reference, mu_r, cov_r);

    double mean_term = 0.0;
    for (int d = 0; d < kD; ++d) {
        double diff = mu_g[d] - mu_r[d];
        mean_term += diff * diff;
    }

    std::vector<double> s = sym_sqrt(cov_g);
    std::vector<double> m = mat_mul(mat_mul(s, cov_r), s);
    // Symmetrize to kill round-off asymmetry before the second square root.
    for (int r = 0; r < kD; ++r)
        for (int c = r + 1; c < kD; ++c) {
            double avg = 0.5 * (m[size_t(r) * kD + c] + m[size_t(c) * kD + r]);
            m[size_t(r) * kD + c] = m[size_t(c) * kD + r] = avg;
        }
    std::vector<double> root = sym_sqrt(m);

    double trace = 0.0;
    for (int d = 0; d < kD; ++d)
        trace += cov_g[size_t(d) * kD + d] + cov_r[size_t(d) * kD + d] -
                 2.0 * root[size_t(d) * kD + d];
    return mean_term + trace;
}

BootstrapSummary paired_bootstrap(const std::vector<double>& improvements, int resamples,
                                  uint64_t seed) {
    if (improvements.empty()) throw DataError("paired_bootstrap: no improvements");
    size_t n = improvements.size();
    BootstrapSummary out;
    for (double v : improvements) {
        out.mean += v;
        if (v > 0.0) out.win_rate += 1.0;
    }
    out.mean /= double(n);
    out.win_rate /= double(n);

    Rng rng(seed);
    std::vector<double> means(resamples);
    for (int b = 0; b < resamples; ++b) {
        double acc = 0.0;
        for (size_t i = 0; i < n; ++i) acc += improvements[rng.index(n)];
        means[b] = acc / double(n);
    }
    std::sort(means.begin(), means.end());
    auto percentile = [&](double q) {
        double pos = q * double(means.size() - 1);
        size_t lo = size_t(std::floor(pos));
        size_t hi = std::min(lo + 1, means.size() - 1);
        double frac = pos - double(lo);
        return means[lo] * (1.0 - frac) + means[hi] * frac;
    };
    out.ci_low = percentile(0.025);
    out.ci_high = percentile(0.975);
    return out;
}

// ---------------------------------------------------------------------------
// Serial reference
// ---------------------------------------------------------------------------

namespace serial_ref {

double nearest_distance(const std::vector<Vec3>& points, const Vec3& q) {
    if (points.empty()) throw DataError("empty point set");
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : points) best = std::min(best, squared_dist(q, p));
    return std::sqrt(best);
}

DistancePair chamfer_hausdorff(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
    if (a.empty() && b.empty()) return {0.0, 0.0};
    if (a.empty() || b.empty()) return {1.0, 1.0};
    std::vector<double> da(a.size()), db(b.size());
    for (size_t i = 0; i < a.size(); ++i) da[i] = nearest_distance(b, a[i]);
    for (size_t i = 0; i < b.size(); ++i) db[i] = nearest_distance(a, b[i]);
    double sa = 0.0, sb = 0.0;
    for (double d : da) sa += d;
    for (double d : db) sb += d;
    DistancePair out;
    out.chamfer = 0.5 * (sa / double(a.size()) + sb / double(b.size()));
    out.hausdorff = std::max(*std::max_element(da.begin(), da.end()),
                             *std::max_element(db.begin(), db.end()));
    return out;
}

double separation_score(const std::vector<std::vector<Vec3>>& predicted_components, double tau) {
    std::vector<size_t> nonempty;
    for (size_t k = 0; k < predicted_components.size(); ++k)
        if (!predicted_components[k].empty()) nonempty.push_back(k);
    if (nonempty.empty()) return 0.0;
    if (nonempty.size() < 2) return 1.0;
    double acc = 0.0;
    size_t pairs = 0;
    for (size_t a = 0; a < nonempty.size(); ++a) {
        for (size_t b = a + 1; b < nonempty.size(); ++b) {
            const auto& pa = predicted_components[nonempty[a]];
            const auto& pb = predicted_components[nonempty[b]];
            long ca = 0, cb = 0;
            for (const auto& p : pa)
                if (nearest_distance(pb, p) < tau) ++ca;
            for (const auto& p : pb)
                if (nearest_distance(pa, p) < tau) ++cb;
            acc += 0.5 * (double(ca) / double(pa.size()) + double(cb) / double(pb.size()));
            ++pairs;
        }
    }
    return 1.0 - acc / double(pairs);
}

double contamination_rate(const std::vector<std::vector<Vec3>>& predicted_components,
                          const std::vector<std::vector<Vec3>>& gt_supports, double tau) {
    size_t total = 0;
    for (const auto& c : predicted_components) total += c.size();
    if (total == 0) return 1.0;
    size_t gt_nonempty = 0;
    for (const auto& s : gt_supports)
        if (!s.empty()) ++gt_nonempty;
    if (gt_nonempty < 2) return 0.0;

    long contaminated = 0;
    for (size_t k = 0; k < predicted_components.size(); ++k) {
        for (const auto& x : predicted_components[k]) {
            double d_own = nearest_distance(gt_supports[k], x);
            double d_other = std::numeric_limits<double>::infinity();
            for (size_t o = 0; o < gt_supports.size(); ++o) {
                if (o == k || gt_supports[o].empty()) continue;
                d_other = std::min(d_other, nearest_distance(gt_supports[o], x));
            }
            if ((d_other + tau < d_own) || (d_other < tau && d_own > tau)) ++contaminated;
        }
    }
    return double(contaminated) / double(total);
}

double normal_consistency(const std::vector<Vec3>& predicted, const std::vector<Vec3>& reference) {
    if (predicted.size() != reference.size())
        throw DataError("normal_consistency: paired lists must match");
    if (predicted.empty()) return 0.0;
    double acc = 0.0;
    for (size_t i = 0; i < predicted.size(); ++i) {
        double denom = std::max(predicted[i].norm(), 1e-6) * std::max(reference[i].norm(), 1e-6);
        acc += predicted[i].dot(reference[i]) / denom;
    }
    return acc / double(predicted.size());
}

}  // namespace serial_ref

}  // namespace c2lt
