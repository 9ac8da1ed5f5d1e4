#include "c2lt/tokenizer.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "c2lt/util.hpp"

namespace c2lt {

QuantizeResult fsq_quantize(const std::vector<double>& feature, int slots, int levels) {
    if (int(feature.size()) != slots)
        throw DataError("fsq_quantize: feature dimension " + std::to_string(feature.size()) +
                        " != slots " + std::to_string(slots));
    if (levels < 2) throw ConfigError("fsq levels must be >= 2");
    QuantizeResult out;
    out.levels.resize(slots);
    out.values.resize(slots);
    double step = 2.0 / double(levels - 1);
    for (int i = 0; i < slots; ++i) {
        double x = std::clamp(feature[i], -1.0, 1.0);
        // Nearest grid value; exact midpoints round toward the lower level.
        int l = int(std::ceil((x + 1.0) / step - 0.5));
        l = std::clamp(l, 0, levels - 1);
        out.levels[i] = l;
        out.values[i] = -1.0 + l * step;
    }
    return out;
}

uint32_t pack_levels(const std::vector<int>& levels, int base) {
    uint32_t index = 0;
    uint32_t radix = 1;
    for (int l : levels) {
        if (l < 0 || l >= base) throw DataError("pack_levels: level out of range");
        index += uint32_t(l) * radix;
        radix *= uint32_t(base);
    }
    return index;
}

std::vector<int> unpack_levels(uint32_t index, int slots, int base) {
    std::vector<int> levels(slots);
    for (int i = 0; i < slots; ++i) {
        levels[i] = int(index % uint32_t(base));
        index /= uint32_t(base);
    }
    return levels;
}

CodeStats code_stats(const std::vector<uint32_t>& codes, uint64_t codebook_size) {
    if (codes.empty()) throw DataError("code_stats: empty code multiset");
    std::map<uint32_t, size_t> counts;
    for (uint32_t c : codes) ++counts[c];
    double n = double(codes.size());
    double entropy = 0.0;
    for (const auto& [code, count] : counts) {
        double p = double(count) / n;
        entropy -= p * std::log(p);
    }
    CodeStats stats;
    stats.perplexity = std::exp(entropy);
    stats.utilization = double(counts.size()) / double(codebook_size);
    return stats;
}

namespace {
constexpr double kBoundaryBand = 0.8;  // |x~| >= band counts as boundary

double squash01(double v) { return std::clamp(2.0 * v - 1.0, -1.0, 1.0); }
}  // namespace

std::vector<double> geometry_features(const Chart& chart) {
    const auto& pts = chart.local_points;
    double n = double(pts.size());
    double mxx = 0, myy = 0, mzz = 0, mabsz = 0;
    Vec3 mean_normal{0, 0, 0};
    for (size_t i = 0; i < pts.size(); ++i) {
        mxx += pts[i].x * pts[i].x;
        myy += pts[i].y * pts[i].y;
        mzz += pts[i].z * pts[i].z;
        mabsz += std::abs(pts[i].z);
        mean_normal += chart.local_normals[i];
    }
    mxx /= n;
    myy /= n;
    mzz /= n;
    mabsz /= n;
    mean_normal = mean_normal / n;
    return {squash01(mxx),
            squash01(myy),
            squash01(mzz),
            std::clamp(mean_normal.x, -1.0, 1.0),
            std::clamp(mean_normal.y, -1.0, 1.0),
            squash01(mabsz)};
}

std::vector<double> boundary_features(const Chart& chart) {
    const auto& pts = chart.local_points;
    std::vector<Vec3> boundary;
    for (const auto& p : pts)
        if (p.norm() >= kBoundaryBand) boundary.push_back(p);
    double frac = double(boundary.size()) / double(pts.size());
    if (boundary.empty()) return {squash01(frac), 0.0, 1.0, -1.0};

    Vec3 centroid{0, 0, 0};
    for (const auto& p : boundary) centroid += p;
    centroid = centroid / double(boundary.size());
    double angle = std::atan2(centroid.y, centroid.x);

    // 2D anisotropy of the boundary points in the tangent plane.
    double cxx = 0, cxy = 0, cyy = 0;
    for (const auto& p : boundary) {
        double dx = p.x - centroid.x, dy = p.y - centroid.y;
        cxx += dx * dx;
        cxy += dx * dy;
        cyy += dy * dy;
    }
    double tr = cxx + cyy;
    double det = cxx * cyy - cxy * cxy;
    double disc = std::sqrt(std::max(0.0, tr * tr * 0.25 - det));
    double l1 = tr * 0.5 + disc, l2 = tr * 0.5 - disc;
    double aniso = (l1 + l2) > 1e-12 ? (l1 - l2) / (l1 + l2) : 0.0;

    return {squash01(frac), std::clamp(std::sin(angle), -1.0, 1.0),
            std::clamp(std::cos(angle), -1.0, 1.0), squash01(aniso)};
}

TokenPair tokenize_chart(const Chart& chart) {
    QuantizeResult geo = fsq_quantize(geometry_features(chart), kGeoSlots);
    QuantizeResult bnd = fsq_quantize(boundary_features(chart), kBndSlots);
    TokenPair token;
    for (int i = 0; i < kGeoSlots; ++i) {
        token.geo_levels[i] = geo.levels[i];
        token.geo_values[i] = geo.values[i];
    }
    for (int i = 0; i < kBndSlots; ++i) {
        token.bnd_levels[i] = bnd.levels[i];
        token.bnd_values[i] = bnd.values[i];
    }
    token.geo_index = pack_levels(geo.levels);
    token.bnd_index = pack_levels(bnd.levels);
    return token;
}

}  // namespace c2lt
