#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "c2lt/chart.hpp"
#include "c2lt/geom.hpp"

namespace c2lt {

struct ContextConfig {
    int dim = 64;  // must be divisible by heads
    int heads = 4;
    int layers = 2;
    int geom_hidden = 64;  // geometry pair-bias MLP: 4 -> geom_hidden -> heads
    uint64_t seed = 1;
};

// Contextualized chart token h_i.
struct ContextToken {
    std::vector<double> h;
};

// Deterministic per-chart feature assembly: dequantized geo/bnd values, pose
// residual, scale, sinusoidal anchor embedding, hashed partition embedding,
// projected to cfg.dim by a seeded row-normalized random matrix.
std::vector<double> token_features(const Chart& chart, const ContextConfig& cfg);

// Pair-biased multi-head attention with residual connections. Parameters are
// a single flat vector; per layer: Wq, Wk, Wv, Wo (dim x dim each), the
// partition-pair biases (same, cross), and the geometry pair-bias MLP
// (4 -> geom_hidden -> heads). Gradients are hand-derived and validated
// against central finite differences.
class AttentionStack {
public:
    explicit AttentionStack(const ContextConfig& cfg);

    const ContextConfig& config() const { return cfg_; }
    size_t param_count() const { return theta_.size(); }
    std::vector<double>& params() { return theta_; }
    const std::vector<double>& params() const { return theta_; }
    void zero_pair_biases();  // b_part = b_geom = 0 recovers plain attention

    struct Inputs {
        std::vector<std::vector<double>> tokens;  // N x dim
        std::vector<int> partitions;
        std::vector<Vec3> anchors;
        std::vector<double> scales;
    };

    // Tape caches every intermediate needed by backward().
    struct Tape {
        struct Layer {
            std::vector<std::vector<double>> x;        // layer input, N x dim
            std::vector<std::vector<double>> q, k, v;  // N x dim (heads stacked)
            std::vector<std::vector<double>> alpha;    // heads*N rows of length N
            std::vector<std::vector<double>> geom_z;   // N*N x geom_hidden (tanh)
            std::vector<std::vector<double>> concat;   // N x dim
        };
        std::vector<Layer> layers;
    };

    std::vector<std::vector<double>> forward(const Inputs& in) const;
    std::vector<std::vector<double>> forward(const Inputs& in, Tape& tape) const;

    // Accumulates dL/dtheta given dL/d(output). Returns dL/d(input tokens).
    std::vector<std::vector<double>> backward(const Inputs& in, const Tape& tape,
                                              const std::vector<std::vector<double>>& d_out,
                                              std::vector<double>& d_theta) const;

    // Row-stochastic attention weights of a single layer (diagnostics/tests).
    std::vector<std::vector<double>> attention_rows(const Inputs& in, int layer, int head) const;

private:
    ContextConfig cfg_;
    std::vector<double> theta_;

    struct Layout {
        size_t wq, wk, wv, wo, b_same, b_cross, g1, g1b, g2, g2b, stride;
    };
    Layout layout_ = {};
    void init_layout();
};

// Convenience wrapper: assemble token features for all charts, run the stack.
std::vector<ContextToken> pair_biased_attention(const std::vector<Chart>& charts,
                                                const AttentionStack& stack);

// Max relative error between the analytic gradient and central finite
// differences of f at theta.
double grad_check(const std::function<double(const std::vector<double>&)>& f,
                  const std::function<void(const std::vector<double>&, std::vector<double>&)>&
                      analytic_gradient,
                  std::vector<double> theta, double h);

}  // namespace c2lt
