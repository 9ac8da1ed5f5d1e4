#include "c2lt/context.hpp"

#include <algorithm>
#include <cmath>

#include "c2lt/util.hpp"

namespace c2lt {

namespace {

constexpr int kRawFeatureDim = 6 + 4 + 6 + 1 + 12 + 8;  // geo, bnd, residual, scale, pos, part

void append_position_embedding(const Vec3& anchor, std::vector<double>& out) {
    for (int axis = 0; axis < 3; ++axis) {
        double a = anchor[axis];
        for (int f = 1; f <= 2; ++f) {
            out.push_back(std::sin(M_PI * f * a));
            out.push_back(std::cos(M_PI * f * a));
        }
    }
}

void append_partition_embedding(int partition, std::vector<double>& out) {
    uint64_t s = 0x5bf03635ULL ^ (uint64_t(partition) * 0x9e3779b97f4a7c15ULL);
    Rng rng(s);
    for (int i = 0; i < 8; ++i) out.push_back(rng.uniform(-1.0, 1.0));
}

}  // namespace

std::vector<double> token_features(const Chart& chart, const ContextConfig& cfg) {
    if (!chart.token) throw DataError("token_features: chart is not tokenized");
    std::vector<double> raw;
    raw.reserve(kRawFeatureDim);
    for (double v : chart.token->geo_values) raw.push_back(v);
    for (double v : chart.token->bnd_values) raw.push_back(v);
    for (double v : chart.pose_residual) raw.push_back(v);
    raw.push_back(chart.scale);
    append_position_embedding(chart.anchor, raw);
    append_partition_embedding(chart.partition, raw);

    // Seeded row-normalized random projection, fixed per config seed.
    Rng rng(derive_seed(cfg.seed, 0xfeedULL));
    std::vector<double> out(cfg.dim, 0.0);
    for (int r = 0; r < cfg.dim; ++r) {
        std::vector<double> row(kRawFeatureDim);
        double norm2 = 0.0;
        for (int c = 0; c < kRawFeatureDim; ++c) {
            row[c] = rng.normal();
            norm2 += row[c] * row[c];
        }
        double inv = norm2 > 0.0 ? 1.0 / std::sqrt(norm2) : 0.0;
        double acc = 0.0;
        for (int c = 0; c < kRawFeatureDim; ++c) acc += row[c] * inv * raw[c];
        out[r] = acc;
    }
    return out;
}

void AttentionStack::init_layout() {
    size_t d = size_t(cfg_.dim);
    size_t h = size_t(cfg_.geom_hidden);
    size_t heads = size_t(cfg_.heads);
    Layout& L = layout_;
    L.wq = 0;
    L.wk = L.wq + d * d;
    L.wv = L.wk + d * d;
    L.wo = L.wv + d * d;
    L.b_same = L.wo + d * d;
    L.b_cross = L.b_same + 1;
    L.g1 = L.b_cross + 1;
    L.g1b = L.g1 + h * 4;
    L.g2 = L.g1b + h;
    L.g2b = L.g2 + heads * h;
    L.stride = L.g2b + heads;
}

AttentionStack::AttentionStack(const ContextConfig& cfg) : cfg_(cfg) {
    if (cfg_.dim <= 0 || cfg_.heads <= 0 || cfg_.layers <= 0)
        throw ConfigError("context config must be positive");
    if (cfg_.dim % cfg_.heads != 0) throw ConfigError("context.dim must be divisible by heads");
    init_layout();
    theta_.assign(layout_.stride * size_t(cfg_.layers), 0.0);
    Rng rng(derive_seed(cfg_.seed, 0xa77eULL));
    double scale = 1.0 / std::sqrt(double(cfg_.dim));
    for (int l = 0; l < cfg_.layers; ++l) {
        size_t base = layout_.stride * size_t(l);
        size_t d = size_t(cfg_.dim);
        for (size_t i = 0; i < 4 * d * d; ++i) theta_[base + i] = rng.normal() * scale;
        theta_[base + layout_.b_same] = 0.5;
        theta_[base + layout_.b_cross] = -0.5;
        for (size_t i = layout_.g1; i < layout_.stride; ++i)
            theta_[base + i] = rng.normal() * 0.1;
    }
}

void AttentionStack::zero_pair_biases() {
    for (int l = 0; l < cfg_.layers; ++l) {
        size_t base = layout_.stride * size_t(l);
        theta_[base + layout_.b_same] = 0.0;
        theta_[base + layout_.b_cross] = 0.0;
        for (size_t i = layout_.g1; i < layout_.stride; ++i) theta_[base + i] = 0.0;
    }
}

namespace {

// Pair feature: normalized relative position and log scale ratio.
inline void pair_feature(const Vec3& ai, const Vec3& aj, double si, double sj, double f[4]) {
    f[0] = (aj.x - ai.x) * 0.5;
    f[1] = (aj.y - ai.y) * 0.5;
    f[2] = (aj.z - ai.z) * 0.5;
    f[3] = std::log(std::max(si, 1e-12) / std::max(sj, 1e-12));
}

}  // namespace

std::vector<std::vector<double>> AttentionStack::forward(const Inputs& in) const {
    Tape tape;
    return forward(in, tape);
}

std::vector<std::vector<double>> AttentionStack::forward(const Inputs& in, Tape& tape) const {
    size_t n = in.tokens.size();
    if (n == 0) throw DataError("pair_biased_attention: no tokens");
    size_t d = size_t(cfg_.dim);
    size_t heads = size_t(cfg_.heads);
    size_t dh = d / heads;
    size_t gh = size_t(cfg_.geom_hidden);
    double inv_sqrt = 1.0 / std::sqrt(double(dh));

    for (const auto& t : in.tokens) {
        if (t.size() != d) throw DataError("token dimension mismatch");
        for (double v : t)
            if (!std::isfinite(v)) throw DataError("NaN in attention inputs");
    }
    if (in.partitions.size() != n || in.anchors.size() != n || in.scales.size() != n)
        throw DataError("attention side inputs must match token count");

    std::vector<std::vector<double>> x = in.tokens;
    tape.layers.clear();
    tape.layers.resize(cfg_.layers);

    for (int layer = 0; layer < cfg_.layers; ++layer) {
        const double* th = theta_.data() + layout_.stride * size_t(layer);
        auto& tl = tape.layers[layer];
        tl.x = x;

        // Projections.
        tl.q.assign(n, std::vector<double>(d, 0.0));
        tl.k.assign(n, std::vector<double>(d, 0.0));
        tl.v.assign(n, std::vector<double>(d, 0.0));
        for (size_t i = 0; i < n; ++i) {
            for (size_t r = 0; r < d; ++r) {
                double aq = 0, ak = 0, av = 0;
                const double* wq = th + layout_.wq + r * d;
                const double* wk = th + layout_.wk + r * d;
                const double* wv = th + layout_.wv + r * d;
                for (size_t c = 0; c < d; ++c) {
                    aq += wq[c] * x[i][c];
                    ak += wk[c] * x[i][c];
                    av += wv[c] * x[i][c];
                }
                tl.q[i][r] = aq;
                tl.k[i][r] = ak;
                tl.v[i][r] = av;
            }
        }

        // Geometry pair bias (shared across heads up to the output layer).
        tl.geom_z.assign(n * n, std::vector<double>(gh, 0.0));
        std::vector<std::vector<double>> geom_out(n * n, std::vector<double>(heads, 0.0));
        for (size_t i = 0; i < n; ++i) {
            for (size_t j = 0; j < n; ++j) {
                double f[4];
                pair_feature(in.anchors[i], in.anchors[j], in.scales[i], in.scales[j], f);
                auto& z = tl.geom_z[i * n + j];
                for (size_t r = 0; r < gh; ++r) {
                    double a = th[layout_.g1b + r];
                    const double* w = th + layout_.g1 + r * 4;
                    for (int c = 0; c < 4; ++c) a += w[c] * f[c];
                    z[r] = std::tanh(a);
                }
                auto& e = geom_out[i * n + j];
                for (size_t hh = 0; hh < heads; ++hh) {
                    double a = th[layout_.g2b + hh];
                    const double* w = th + layout_.g2 + hh * gh;
                    for (size_t c = 0; c < gh; ++c) a += w[c] * z[c];
                    e[hh] = a;
                }
            }
        }

        // Attention per head.
        tl.alpha.assign(heads * n, std::vector<double>(n, 0.0));
        tl.concat.assign(n, std::vector<double>(d, 0.0));
        double b_same = th[layout_.b_same];
        double b_cross = th[layout_.b_cross];
        std::vector<double> logits(n);
        for (size_t hh = 0; hh < heads; ++hh) {
            size_t off = hh * dh;
            for (size_t i = 0; i < n; ++i) {
                double mx = -1e300;
                for (size_t j = 0; j < n; ++j) {
                    double dot = 0.0;
                    for (size_t c = 0; c < dh; ++c) dot += tl.q[i][off + c] * tl.k[j][off + c];
                    double bias = (in.partitions[i] == in.partitions[j]) ? b_same : b_cross;
                    logits[j] = dot * inv_sqrt + bias + geom_out[i * n + j][hh];
                    mx = std::max(mx, logits[j]);
                }
                double denom = 0.0;
                auto& arow = tl.alpha[hh * n + i];
                for (size_t j = 0; j < n; ++j) {
                    arow[j] = std::exp(logits[j] - mx);
                    denom += arow[j];
                }
                for (size_t j = 0; j < n; ++j) arow[j] /= denom;
                for (size_t c = 0; c < dh; ++c) {
                    double acc = 0.0;
                    for (size_t j = 0; j < n; ++j) acc += arow[j] * tl.v[j][off + c];
                    tl.concat[i][off + c] = acc;
                }
            }
        }

        // Residual + output projection.
        std::vector<std::vector<double>> next(n, std::vector<double>(d, 0.0));
        for (size_t i = 0; i < n; ++i) {
            for (size_t r = 0; r < d; ++r) {
                double a = 0.0;
                const double* wo = th + layout_.wo + r * d;
                for (size_t c = 0; c < d; ++c) a += wo[c] * tl.concat[i][c];
                next[i][r] = x[i][r] + a;
            }
        }
        x = std::move(next);
    }
    return x;
}

std::vector<std::vector<double>> AttentionStack::backward(
    const Inputs& in, const Tape& tape, const std::vector<std::vector<double>>& d_out,
    std::vector<double>& d_theta) const {
    size_t n = in.tokens.size();
    size_t d = size_t(cfg_.dim);
    size_t heads = size_t(cfg_.heads);
    size_t dh = d / heads;
    size_t gh = size_t(cfg_.geom_hidden);
    double inv_sqrt = 1.0 / std::sqrt(double(dh));

    d_theta.assign(theta_.size(), 0.0);
    std::vector<std::vector<double>> dx = d_out;

    for (int layer = cfg_.layers - 1; layer >= 0; --layer) {
        const double* th = theta_.data() + layout_.stride * size_t(layer);
        double* dth = d_theta.data() + layout_.stride * size_t(layer);
        const auto& tl = tape.layers[layer];

        // out_i = x_i + Wo c_i
        std::vector<std::vector<double>> dc(n, std::vector<double>(d, 0.0));
        for (size_t i = 0; i < n; ++i) {
            for (size_t r = 0; r < d; ++r) {
                double g = dx[i][r];
                if (g == 0.0) continue;
                double* dwo = dth + layout_.wo + r * d;
                const double* wo = th + layout_.wo + r * d;
                for (size_t c = 0; c < d; ++c) {
                    dwo[c] += g * tl.concat[i][c];
                    dc[i][c] += g * wo[c];
                }
            }
        }
        // dx keeps the residual path.

        std::vector<std::vector<double>> dq(n, std::vector<double>(d, 0.0));
        std::vector<std::vector<double>> dk(n, std::vector<double>(d, 0.0));
        std::vector<std::vector<double>> dv(n, std::vector<double>(d, 0.0));
        std::vector<std::vector<double>> dgeom(n * n, std::vector<double>(heads, 0.0));
        double db_same = 0.0, db_cross = 0.0;

        std::vector<double> dalpha(n), dlogit(n);
        for (size_t hh = 0; hh < heads; ++hh) {
            size_t off = hh * dh;
            for (size_t i = 0; i < n; ++i) {
                const auto& arow = tl.alpha[hh * n + i];
                // dalpha_j = dc_i(head slice) . v_j ; dv_j += alpha_j * dc_i
                for (size_t j = 0; j < n; ++j) {
                    double a = 0.0;
                    for (size_t c = 0; c < dh; ++c) a += dc[i][off + c] * tl.v[j][off + c];
                    dalpha[j] = a;
                }
                for (size_t j = 0; j < n; ++j)
                    for (size_t c = 0; c < dh; ++c) dv[j][off + c] += arow[j] * dc[i][off + c];
                // Softmax backward.
                double dot = 0.0;
                for (size_t j = 0; j < n; ++j) dot += dalpha[j] * arow[j];
                for (size_t j = 0; j < n; ++j) dlogit[j] = arow[j] * (dalpha[j] - dot);
                // Logit pieces.
                for (size_t j = 0; j < n; ++j) {
                    double g = dlogit[j];
                    if (g == 0.0) continue;
                    for (size_t c = 0; c < dh; ++c) {
                        dq[i][off + c] += g * inv_sqrt * tl.k[j][off + c];
                        dk[j][off + c] += g * inv_sqrt * tl.q[i][off + c];
                    }
                    if (in.partitions[i] == in.partitions[j])
                        db_same += g;
                    else
                        db_cross += g;
                    dgeom[i * n + j][hh] += g;
                }
            }
        }
        dth[layout_.b_same] += db_same;
        dth[layout_.b_cross] += db_cross;

        // Geometry MLP backward (inputs are pair constants, no dx flow).
        for (size_t i = 0; i < n; ++i) {
            for (size_t j = 0; j < n; ++j) {
                const auto& z = tl.geom_z[i * n + j];
                const auto& ge = dgeom[i * n + j];
                bool any = false;
                for (size_t hh = 0; hh < heads; ++hh)
                    if (ge[hh] != 0.0) any = true;
                if (!any) continue;
                double f[4];
                pair_feature(in.anchors[i], in.anchors[j], in.scales[i], in.scales[j], f);
                std::vector<double> dz(gh, 0.0);
                for (size_t hh = 0; hh < heads; ++hh) {
                    double g = ge[hh];
                    if (g == 0.0) continue;
                    dth[layout_.g2b + hh] += g;
                    double* dw = dth + layout_.g2 + hh * gh;
                    const double* w = th + layout_.g2 + hh * gh;
                    for (size_t c = 0; c < gh; ++c) {
                        dw[c] += g * z[c];
                        dz[c] += g * w[c];
                    }
                }
                for (size_t r = 0; r < gh; ++r) {
                    double g = dz[r] * (1.0 - z[r] * z[r]);
                    if (g == 0.0) continue;
                    dth[layout_.g1b + r] += g;
                    double* dw = dth + layout_.g1 + r * 4;
                    for (int c = 0; c < 4; ++c) dw[c] += g * f[c];
                }
            }
        }

        // Projection backward.
        std::vector<std::vector<double>> dx_prev = std::move(dx);
        for (size_t i = 0; i < n; ++i) {
            for (size_t r = 0; r < d; ++r) {
                double gq = dq[i][r], gk = dk[i][r], gv = dv[i][r];
                if (gq != 0.0) {
                    double* dw = dth + layout_.wq + r * d;
                    const double* w = th + layout_.wq + r * d;
                    for (size_t c = 0; c < d; ++c) {
                        dw[c] += gq * tl.x[i][c];
                        dx_prev[i][c] += gq * w[c];
                    }
                }
                if (gk != 0.0) {
                    double* dw = dth + layout_.wk + r * d;
                    const double* w = th + layout_.wk + r * d;
                    for (size_t c = 0; c < d; ++c) {
                        dw[c] += gk * tl.x[i][c];
                        dx_prev[i][c] += gk * w[c];
                    }
                }
                if (gv != 0.0) {
                    double* dw = dth + layout_.wv + r * d;
                    const double* w = th + layout_.wv + r * d;
                    for (size_t c = 0; c < d; ++c) {
                        dw[c] += gv * tl.x[i][c];
                        dx_prev[i][c] += gv * w[c];
                    }
                }
            }
        }
        dx = std::move(dx_prev);
    }
    return dx;
}

std::vector<std::vector<double>> AttentionStack::attention_rows(const Inputs& in, int layer,
                                                                int head) const {
    Tape tape;
    forward(in, tape);
    size_t n = in.tokens.size();
    std::vector<std::vector<double>> rows(n);
    for (size_t i = 0; i < n; ++i) rows[i] = tape.layers[layer].alpha[size_t(head) * n + i];
    return rows;
}

std::vector<ContextToken> pair_biased_attention(const std::vector<Chart>& charts,
                                                const AttentionStack& stack) {
    AttentionStack::Inputs in;
    for (const auto& c : charts) {
        in.tokens.push_back(token_features(c, stack.config()));
        in.partitions.push_back(c.partition);
        in.anchors.push_back(c.anchor);
        in.scales.push_back(c.scale);
    }
    auto out = stack.forward(in);
    std::vector<ContextToken> tokens(out.size());
    for (size_t i = 0; i < out.size(); ++i) tokens[i].h = std::move(out[i]);
    return tokens;
}

double grad_check(const std::function<double(const std::vector<double>&)>& f,
                  const std::function<void(const std::vector<double>&, std::vector<double>&)>&
                      analytic_gradient,
                  std::vector<double> theta, double h) {
    std::vector<double> grad;
    analytic_gradient(theta, grad);
    double max_rel = 0.0;
    for (size_t i = 0; i < theta.size(); ++i) {
        double keep = theta[i];
        theta[i] = keep + h;
        double fp = f(theta);
        theta[i] = keep - h;
        double fm = f(theta);
        theta[i] = keep;
        double numeric = (fp - fm) / (2.0 * h);
        double denom = std::max({1e-6, std::abs(grad[i]), std::abs(numeric)});
        max_rel = std::max(max_rel, std::abs(grad[i] - numeric) / denom);
    }
    return max_rel;
}

}  // namespace c2lt
