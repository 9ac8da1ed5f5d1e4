#pragma once

#include <cstdint>
#include <vector>

#include "c2lt/chart.hpp"
#include "c2lt/tokenizer_types.hpp"

namespace c2lt {

struct QuantizeResult {
    std::vector<int> levels;
    std::vector<double> values;
};

// Per-component clamp to [-1,1], then snap to the nearest of `levels`
// uniformly spaced grid values (ties toward the lower level).
QuantizeResult fsq_quantize(const std::vector<double>& feature, int slots,
                            int levels = kFsqLevels);

// Mixed-radix packing of slot levels, least-significant slot first.
uint32_t pack_levels(const std::vector<int>& levels, int base = kFsqLevels);
std::vector<int> unpack_levels(uint32_t index, int slots, int base = kFsqLevels);

struct CodeStats {
    double perplexity = 1.0;   // exp of the empirical code entropy (nats)
    double utilization = 0.0;  // distinct codes / codebook size
};

CodeStats code_stats(const std::vector<uint32_t>& codes, uint64_t codebook_size);

// Deterministic chart featurizer standing in for a learned encoder. Geometry
// features (6): second-moment diagonal of the local points, mean tangential
// normal components, mean |z|. Boundary features (4): boundary fraction,
// boundary centroid direction (sin/cos), boundary anisotropy. All squashed
// into [-1,1].
std::vector<double> geometry_features(const Chart& chart);
std::vector<double> boundary_features(const Chart& chart);

// Quantizes both streams and stores the token on the chart.
TokenPair tokenize_chart(const Chart& chart);

}  // namespace c2lt
