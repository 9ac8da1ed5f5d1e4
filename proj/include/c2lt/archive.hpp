#pragma once

#include <string>
#include <vector>

#include "c2lt/chart.hpp"
#include "c2lt/partition.hpp"
#include "c2lt/seam.hpp"
#include "c2lt/surface.hpp"
#include "c2lt/synth.hpp"

namespace c2lt {

// One archived object: the surface always, everything else when the pipeline
// stage that produces it has run.
struct ArchiveObject {
    std::string id;
    SurfaceObject surface;
    Partition partition;  // empty assign = not partitioned yet
    std::vector<Chart> charts;
    std::vector<SeamCandidate> seams;
    std::vector<std::pair<int, int>> valid_chart_edges;  // (child, parent)
    ObjectGroundTruth gt;
    bool has_gt = false;
};

// Line-delimited records: a self-describing header line then one object per
// line. Charts store anchors/frames/neighbors; local coordinates are
// recomputed on read (bit-exact, the normalization is deterministic).
void write_archive(const std::string& path, const std::vector<ArchiveObject>& objects);
std::vector<ArchiveObject> read_archive(const std::string& path);

inline constexpr const char* kArchiveFormat = "c2lt-archive";
inline constexpr int kArchiveVersion = 1;

}  // namespace c2lt
