#pragma once

#include <array>

namespace c2lt::constants {

// Object-adaptive threshold: tau = max(kTauScale * extent, kTauFloor).
inline constexpr double kTauScale = 0.02;
inline constexpr double kTauFloor = 1e-3;

// Seam compatibility blend weights (overlap, boundary-Chamfer, normal
// consistency, occupancy agreement) and the Chamfer length scale.
inline constexpr double kCompatOverlapWeight = 0.35;
inline constexpr double kCompatChamferWeight = 0.25;
inline constexpr double kCompatNormalWeight = 0.20;
inline constexpr double kCompatOccupancyWeight = 0.20;
inline constexpr double kCompatChamferScale = 0.15;  // of min(s_i, s_j)

// Unit-interaction statistics.
inline constexpr double kIntersectionThreshold = 0.12;  // of the pair scale
inline constexpr double kBoundaryClarityScale = 0.15;   // of the pair scale
inline constexpr double kIqMapScale = 0.15;
inline constexpr double kBcMapScale = 0.05;

// Two-stream FSQ codebooks.
inline constexpr unsigned kGeoCodebookSize = 117649;  // 7^6
inline constexpr unsigned kBndCodebookSize = 2401;    // 7^4

// Component-owned realization defaults and sweep grids.
inline constexpr double kDefaultKeepFloor = 0.90;
inline constexpr double kDefaultMargin = 0.0;
inline constexpr std::array<double, 3> kKeepFloorSweep = {0.85, 0.90, 0.95};
inline constexpr std::array<double, 3> kMarginSweep = {0.0, 0.25, 0.5};

// Bootstrap protocol.
inline constexpr int kBootstrapResamples = 5000;

// Seam training bands and the separation margin.
inline constexpr double kPositiveCompat = 0.55;
inline constexpr double kNegativeCompat = 0.35;
inline constexpr double kSeparationMargin = 0.2;

// Inference-only repair policy coefficients over normalized terms:
// S = kPolicySeam * s~ + kPolicyDist * d~ + kPolicyColl * p~coll + kPolicyInv * p~inv.
inline constexpr double kPolicySeamCoeff = 1.0;
inline constexpr double kPolicyDistCoeff = 0.5;
inline constexpr double kPolicyCollCoeff = -0.5;
inline constexpr double kPolicyInvalidCoeff = -0.5;

}  // namespace c2lt::constants
