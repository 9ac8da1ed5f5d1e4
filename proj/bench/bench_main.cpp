// Benchmark: grid-index OpenMP metric kernels against the serial O(n^2)
// reference on growing point sets. Both paths must return identical values;
// this target measures the speedup only.

#include <chrono>
#include <cstdio>
#include <vector>

#include "c2lt/metrics.hpp"
#include "c2lt/nn_index.hpp"
#include "c2lt/util.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace c2lt;

namespace {

std::vector<Vec3> random_cloud(size_t n, uint64_t seed) {
    Rng rng(seed);
    std::vector<Vec3> pts(n);
    for (auto& p : pts) p = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    return pts;
}

template <typename F>
double time_ms(F&& f) {
    auto t0 = std::chrono::steady_clock::now();
    f();
    auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("openmp threads: %d\n", omp_get_max_threads());
#else
    std::printf("openmp: disabled\n");
#endif
    std::printf("%-10s %-14s %-14s %-10s %-10s\n", "points", "parallel(ms)", "serial(ms)",
                "speedup", "agree");

    for (size_t n : {500, 2000, 8000, 20000}) {
        auto a = random_cloud(n, 11 + n);
        auto b = random_cloud(n, 97 + n);

        DistancePair fast{}, slow{};
        double t_fast = time_ms([&] { fast = chamfer_hausdorff(a, b); });
        double t_slow = time_ms([&] { slow = serial_ref::chamfer_hausdorff(a, b); });
        bool agree = fast.chamfer == slow.chamfer && fast.hausdorff == slow.hausdorff;
        std::printf("%-10zu %-14.2f %-14.2f %-10.2fx %s\n", n, t_fast, t_slow, t_slow / t_fast,
                    agree ? "yes" : "NO");
    }

    // Nearest-neighbor query throughput.
    {
        size_t n = 20000, q = 20000;
        auto pts = random_cloud(n, 5);
        auto queries = random_cloud(q, 7);
        NNIndex index(pts);
        std::vector<double> out(q);
        double t_grid = time_ms([&] {
#pragma omp parallel for schedule(static)
            for (long i = 0; i < long(q); ++i)
                out[size_t(i)] = index.nearest(queries[size_t(i)]).distance;
        });
        double checksum = 0;
        for (double d : out) checksum += d;
        double t_brute = time_ms([&] {
            for (size_t i = 0; i < 200; ++i)
                checksum -= serial_ref::nearest_distance(pts, queries[i]) / 200.0;
        });
        std::printf("nn queries: grid %.2f ms for %zu, serial %.2f ms for 200 (checksum %.6f)\n",
                    t_grid, q, t_brute, checksum);
    }
    return 0;
}
