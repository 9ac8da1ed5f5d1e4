#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace c2lt {

// Exit-code contract used by the CLI: 1 config, 2 data, 3 internal invariant.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};
struct InternalError : std::runtime_error {
    explicit InternalError(const std::string& msg) : std::runtime_error(msg) {}
};

// SplitMix64. Used both as a seed mixer and as a tiny standalone generator
// where full Mersenne state would be overkill.
inline uint64_t splitmix64(uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline uint64_t derive_seed(uint64_t base, uint64_t stream) {
    uint64_t s = base ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
    return splitmix64(s);
}

// Deterministic RNG. std::uniform_*_distribution is implementation-defined,
// so all sampling goes through these helpers to keep outputs byte-identical
// across platforms and standard libraries.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next() { return splitmix64(state_); }

    // Uniform in [0,1).
    double uniform() { return double(next() >> 11) * (1.0 / 9007199254740992.0); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). n must be > 0.
    uint64_t index(uint64_t n) {
        // Rejection sampling to avoid modulo bias.
        uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t v = next();
        while (v >= limit) v = next();
        return v % n;
    }

    // Standard normal via Box-Muller (cached second value).
    double normal();

private:
    uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// 30-bit Morton code for points in [-1,1]^3; used for serialization order.
uint64_t morton3(double x, double y, double z);

}  // namespace c2lt
