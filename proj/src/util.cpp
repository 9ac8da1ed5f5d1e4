#include "c2lt/util.hpp"

#include <cmath>

namespace c2lt {

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

namespace {

inline uint64_t spread_bits10(uint64_t v) {
    v &= 0x3ffULL;
    v = (v | (v << 16)) & 0x30000ffULL;
    v = (v | (v << 8)) & 0x300f00fULL;
    v = (v | (v << 4)) & 0x30c30c3ULL;
    v = (v | (v << 2)) & 0x9249249ULL;
    return v;
}

inline uint64_t quantize10(double x) {
    double t = (x + 1.0) * 0.5;  // [-1,1] -> [0,1]
    if (t < 0.0) t = 0.0;
    if (t > 1.0) t = 1.0;
    uint64_t q = uint64_t(t * 1023.0);
    if (q > 1023) q = 1023;
    return q;
}

}  // namespace

uint64_t morton3(double x, double y, double z) {
    return spread_bits10(quantize10(x)) | (spread_bits10(quantize10(y)) << 1) |
           (spread_bits10(quantize10(z)) << 2);
}

}  // namespace c2lt
