#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "c2lt/geom.hpp"
#include "c2lt/mesh.hpp"
#include "c2lt/surface.hpp"

namespace c2lt {

// One attachment edge of the assembly tree, in normalized object space.
struct ContactSpec {
    int parent = 0;
    int child = 0;
    Vec3 center;    // midpoint of the contact gap
    double radius = 0.1;
    double gap = 0.012;
    Vec3 axis;      // contact normal, parent -> child
};

struct ObjectGroundTruth {
    std::vector<ContactSpec> contacts;
    std::vector<int> decoy_components;
    std::vector<std::pair<int, int>> collision_pairs;  // interpenetrating parts
};

struct SynthObject {
    std::string id;
    SurfaceObject surface;
    ObjectGroundTruth gt;
};

struct SynthParams {
    int parts = 4;           // structural components (2..12)
    int density = 260;       // base surface samples per primitive (>= 100)
    bool decoys = false;     // plant near-but-invalid duplicate parts
    bool collisions = false; // plant one interpenetrating attachment
    uint64_t seed = 0;
};

// Deterministic multi-component assembly with exact normals, known ownership,
// attachment tree, dense contact strips, and optional decoys. The returned
// surface is normalized to [-1,1]^3 and the ground truth is expressed in the
// same frame.
SynthObject generate(const SynthParams& params);

// n assemblies with per-object derived seeds; part counts cycle over 2..12.
std::vector<SynthObject> generate_corpus(size_t n, uint64_t seed, int density = 260,
                                         bool decoys = false, bool collisions = false);

// Triangle-mesh rendering of the same assembly (for the OBJ parser path).
std::string to_obj(const SynthParams& params);

}  // namespace c2lt
