#pragma once

#include <array>
#include <cstdint>

namespace c2lt {

inline constexpr int kFsqLevels = 7;
inline constexpr int kGeoSlots = 6;
inline constexpr int kBndSlots = 4;
inline constexpr uint32_t kGeoCodebook = 117649;  // 7^6
inline constexpr uint32_t kBndCodebook = 2401;    // 7^4

// Two-stream quantized code for one chart.
struct TokenPair {
    std::array<int, kGeoSlots> geo_levels = {0, 0, 0, 0, 0, 0};
    std::array<int, kBndSlots> bnd_levels = {0, 0, 0, 0};
    std::array<double, kGeoSlots> geo_values = {0, 0, 0, 0, 0, 0};
    std::array<double, kBndSlots> bnd_values = {0, 0, 0, 0};
    uint32_t geo_index = 0;
    uint32_t bnd_index = 0;
};

}  // namespace c2lt
