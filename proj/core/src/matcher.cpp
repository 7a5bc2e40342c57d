#include <algorithm>
#include <cmath>

#include "isc/errors.hpp"
#include "isc/learning.hpp"

namespace isc {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;

double gelu(double x) {
    return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2));
}

double gelu_deriv(double x) {
    return 0.5 * (1.0 + std::erf(x * M_SQRT1_2)) +
           x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

// y += M x, M is rows x cols row-major.
void matvec_acc(const std::vector<double>& m, const double* x, double* y,
                std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = m.data() + r * cols;
        double acc = 0;
        for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
        y[r] += acc;
    }
}

// y += M^T x.
void matvec_t_acc(const std::vector<double>& m, const double* x, double* y,
                  std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = m.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) y[c] += row[c] * x[r];
    }
}

// M += outer(a, b), a length rows, b length cols.
void outer_acc(std::vector<double>& m, const double* a, const double* b,
               std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        double* row = m.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) row[c] += a[r] * b[c];
    }
}

struct ForwardState {
    std::vector<double> patches;  // T x patch_dim
    std::vector<double> x0;       // T x D  (embed + pos)
    std::vector<double> q, k, v;  // T x D
    std::vector<double> attn;     // T x T softmax rows
    std::vector<double> ctx;      // T x D
    std::vector<double> x1;       // T x D  (post-attention residual)
    std::vector<double> h;        // T x H  (pre-GELU)
    std::vector<double> ge;       // T x H
    std::vector<double> x2;       // T x D
    std::vector<double> pool;     // D
    double logit = 0;
};

ForwardState run_forward(const TinyMatcherParams& p, const Image& input) {
    const auto& cfg = p.config;
    if (input.width != cfg.in_w || input.height != cfg.in_h)
        throw ArgumentError("matcher input size mismatch");
    const std::size_t T = cfg.tokens();
    const std::size_t D = cfg.d_model;
    const std::size_t H = cfg.hidden;
    const std::size_t P2 = cfg.patch_dim();
    const std::size_t pw = cfg.in_w / cfg.patch;

    ForwardState st;
    st.patches.resize(T * P2);
    for (std::size_t t = 0; t < T; ++t) {
        const std::size_t pr = t / pw, pc = t % pw;
        for (std::uint32_t dy = 0; dy < cfg.patch; ++dy)
            for (std::uint32_t dx = 0; dx < cfg.patch; ++dx) {
                const std::uint8_t* px =
                    input.at(static_cast<std::uint32_t>(pc) * cfg.patch + dx,
                             static_cast<std::uint32_t>(pr) * cfg.patch + dy);
                st.patches[t * P2 + dy * cfg.patch + dx] =
                    (static_cast<double>(px[0]) + px[1] + px[2]) / 765.0;
            }
    }

    st.x0.assign(T * D, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
        matvec_acc(p.patch_embed, st.patches.data() + t * P2, st.x0.data() + t * D, D, P2);
        for (std::size_t i = 0; i < D; ++i) st.x0[t * D + i] += p.pos[t * D + i];
    }

    st.q.assign(T * D, 0.0);
    st.k.assign(T * D, 0.0);
    st.v.assign(T * D, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
        matvec_acc(p.wq, st.x0.data() + t * D, st.q.data() + t * D, D, D);
        matvec_acc(p.wk, st.x0.data() + t * D, st.k.data() + t * D, D, D);
        matvec_acc(p.wv, st.x0.data() + t * D, st.v.data() + t * D, D, D);
    }

    // Global attention: every token attends to every token.
    const double scale = 1.0 / std::sqrt(static_cast<double>(D));
    st.attn.assign(T * T, 0.0);
    st.ctx.assign(T * D, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
        double maxv = -1e300;
        for (std::size_t s = 0; s < T; ++s) {
            double sc = 0;
            for (std::size_t i = 0; i < D; ++i)
                sc += st.q[t * D + i] * st.k[s * D + i];
            st.attn[t * T + s] = sc * scale;
            maxv = std::max(maxv, st.attn[t * T + s]);
        }
        double denom = 0;
        for (std::size_t s = 0; s < T; ++s) {
            st.attn[t * T + s] = std::exp(st.attn[t * T + s] - maxv);
            denom += st.attn[t * T + s];
        }
        for (std::size_t s = 0; s < T; ++s) {
            st.attn[t * T + s] /= denom;
            for (std::size_t i = 0; i < D; ++i)
                st.ctx[t * D + i] += st.attn[t * T + s] * st.v[s * D + i];
        }
    }

    st.x1 = st.x0;
    for (std::size_t t = 0; t < T; ++t)
        matvec_acc(p.wo, st.ctx.data() + t * D, st.x1.data() + t * D, D, D);

    st.h.assign(T * H, 0.0);
    st.ge.assign(T * H, 0.0);
    st.x2 = st.x1;
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t j = 0; j < H; ++j) st.h[t * H + j] = p.b1[j];
        matvec_acc(p.w1, st.x1.data() + t * D, st.h.data() + t * H, H, D);
        for (std::size_t j = 0; j < H; ++j)
            st.ge[t * H + j] = gelu(st.h[t * H + j]);
        for (std::size_t i = 0; i < D; ++i) st.x2[t * D + i] += p.b2[i];
        matvec_acc(p.w2, st.ge.data() + t * H, st.x2.data() + t * D, D, H);
    }

    st.pool.assign(D, 0.0);
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t i = 0; i < D; ++i) st.pool[i] += st.x2[t * D + i];
    for (std::size_t i = 0; i < D; ++i) st.pool[i] /= static_cast<double>(T);

    st.logit = p.head_b[0];
    for (std::size_t i = 0; i < D; ++i) st.logit += p.head_w[i] * st.pool[i];
    return st;
}

}  // namespace

TinyMatcherParams TinyMatcherParams::zeros(const MatcherConfig& cfg) {
    TinyMatcherParams p;
    p.config = cfg;
    const std::size_t T = cfg.tokens(), D = cfg.d_model, H = cfg.hidden;
    p.patch_embed.assign(D * cfg.patch_dim(), 0.0);
    p.pos.assign(T * D, 0.0);
    p.wq.assign(D * D, 0.0);
    p.wk.assign(D * D, 0.0);
    p.wv.assign(D * D, 0.0);
    p.wo.assign(D * D, 0.0);
    p.w1.assign(H * D, 0.0);
    p.b1.assign(H, 0.0);
    p.w2.assign(D * H, 0.0);
    p.b2.assign(D, 0.0);
    p.head_w.assign(D, 0.0);
    p.head_b.assign(1, 0.0);
    return p;
}

TinyMatcherParams TinyMatcherParams::random_init(const MatcherConfig& cfg,
                                                 Rng64& rng, double scale) {
    TinyMatcherParams p = zeros(cfg);
    for (auto& [name, block] : p.blocks()) {
        (void)name;
        for (auto& w : *block) w = rng.next_range(-scale, scale);
    }
    return p;
}

std::vector<std::pair<std::string, std::vector<double>*>> TinyMatcherParams::blocks() {
    return {{"patch_embed", &patch_embed}, {"pos", &pos},
            {"wq", &wq},                   {"wk", &wk},
            {"wv", &wv},                   {"wo", &wo},
            {"w1", &w1},                   {"b1", &b1},
            {"w2", &w2},                   {"b2", &b2},
            {"head_w", &head_w},           {"head_b", &head_b}};
}

std::vector<std::pair<std::string, const std::vector<double>*>> TinyMatcherParams::blocks()
    const {
    return {{"patch_embed", &patch_embed}, {"pos", &pos},
            {"wq", &wq},                   {"wk", &wk},
            {"wv", &wv},                   {"wo", &wo},
            {"w1", &w1},                   {"b1", &b1},
            {"w2", &w2},                   {"b2", &b2},
            {"head_w", &head_w},           {"head_b", &head_b}};
}

double tiny_matcher_forward(const TinyMatcherParams& params, const Image& input) {
    return run_forward(params, input).logit;
}

TinyMatcherGrads tiny_matcher_backward(const TinyMatcherParams& p, const Image& input,
                                       double dloss_dlogit) {
    const ForwardState st = run_forward(p, input);
    const auto& cfg = p.config;
    const std::size_t T = cfg.tokens();
    const std::size_t D = cfg.d_model;
    const std::size_t H = cfg.hidden;
    const std::size_t P2 = cfg.patch_dim();
    const double go = dloss_dlogit;

    TinyMatcherGrads g = TinyMatcherParams::zeros(cfg);

    g.head_b[0] = go;
    for (std::size_t i = 0; i < D; ++i) g.head_w[i] = go * st.pool[i];

    // d pool -> d x2 (mean over tokens).
    std::vector<double> dx2(T * D);
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t i = 0; i < D; ++i)
            dx2[t * D + i] = go * p.head_w[i] / static_cast<double>(T);

    // MLP block with residual.
    std::vector<double> dx1 = dx2;  // residual path
    for (std::size_t t = 0; t < T; ++t) {
        const double* dm = dx2.data() + t * D;
        for (std::size_t i = 0; i < D; ++i) g.b2[i] += dm[i];
        outer_acc(g.w2, dm, st.ge.data() + t * H, D, H);
        std::vector<double> dge(H, 0.0);
        matvec_t_acc(p.w2, dm, dge.data(), D, H);
        std::vector<double> dh(H);
        for (std::size_t j = 0; j < H; ++j)
            dh[j] = dge[j] * gelu_deriv(st.h[t * H + j]);
        for (std::size_t j = 0; j < H; ++j) g.b1[j] += dh[j];
        outer_acc(g.w1, dh.data(), st.x1.data() + t * D, H, D);
        matvec_t_acc(p.w1, dh.data(), dx1.data() + t * D, H, D);
    }

    // Attention block with residual.
    std::vector<double> dx0 = dx1;  // residual path
    std::vector<double> dctx(T * D, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
        const double* da = dx1.data() + t * D;
        outer_acc(g.wo, da, st.ctx.data() + t * D, D, D);
        matvec_t_acc(p.wo, da, dctx.data() + t * D, D, D);
    }

    const double scale = 1.0 / std::sqrt(static_cast<double>(D));
    std::vector<double> dq(T * D, 0.0), dk(T * D, 0.0), dv(T * D, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
        std::vector<double> dA(T);
        double weighted = 0;
        for (std::size_t s = 0; s < T; ++s) {
            double acc = 0;
            for (std::size_t i = 0; i < D; ++i)
                acc += dctx[t * D + i] * st.v[s * D + i];
            dA[s] = acc;
            weighted += st.attn[t * T + s] * acc;
            for (std::size_t i = 0; i < D; ++i)
                dv[s * D + i] += st.attn[t * T + s] * dctx[t * D + i];
        }
        for (std::size_t s = 0; s < T; ++s) {
            const double dscore = st.attn[t * T + s] * (dA[s] - weighted) * scale;
            for (std::size_t i = 0; i < D; ++i) {
                dq[t * D + i] += dscore * st.k[s * D + i];
                dk[s * D + i] += dscore * st.q[t * D + i];
            }
        }
    }

    for (std::size_t t = 0; t < T; ++t) {
        outer_acc(g.wq, dq.data() + t * D, st.x0.data() + t * D, D, D);
        matvec_t_acc(p.wq, dq.data() + t * D, dx0.data() + t * D, D, D);
        outer_acc(g.wk, dk.data() + t * D, st.x0.data() + t * D, D, D);
        matvec_t_acc(p.wk, dk.data() + t * D, dx0.data() + t * D, D, D);
        outer_acc(g.wv, dv.data() + t * D, st.x0.data() + t * D, D, D);
        matvec_t_acc(p.wv, dv.data() + t * D, dx0.data() + t * D, D, D);
    }

    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t i = 0; i < D; ++i) g.pos[t * D + i] += dx0[t * D + i];
        outer_acc(g.patch_embed, dx0.data() + t * D, st.patches.data() + t * P2, D, P2);
    }

    return g;
}

std::pair<TinyMatcherParams, TrainingLog> train_tiny_matcher(
    const std::vector<PairExample>& examples, const MatcherConfig& cfg,
    std::uint32_t epochs, double lr, Rng64 rng) {
    if (examples.empty()) throw ArgumentError("no training examples");
    bool has_pos = false, has_neg = false;
    for (const auto& ex : examples) {
        if (ex.label == 1) has_pos = true;
        else has_neg = true;
    }
    if (!has_pos || !has_neg)
        throw ArgumentError("training set must contain both labels");

    TinyMatcherParams params = TinyMatcherParams::random_init(cfg, rng, 0.02);
    TrainingLog log;
    std::vector<std::size_t> order(examples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::uint32_t epoch = 0; epoch < epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng.next_int(0, static_cast<int>(i) - 1)]);
        double epoch_loss = 0;
        for (const std::size_t idx : order) {
            const auto& ex = examples[idx];
            const double logit = tiny_matcher_forward(params, ex.input);
            const auto [loss, dlogit] = bce_with_logit(logit, ex.label);
            epoch_loss += loss;
            const auto grads = tiny_matcher_backward(params, ex.input, dlogit);
            auto pblocks = params.blocks();
            const auto gblocks = static_cast<const TinyMatcherParams&>(grads).blocks();
            for (std::size_t bi = 0; bi < pblocks.size(); ++bi) {
                auto& pb = *pblocks[bi].second;
                const auto& gb = *gblocks[bi].second;
                for (std::size_t i = 0; i < pb.size(); ++i) pb[i] -= lr * gb[i];
            }
        }
        log.epoch_loss.push_back(epoch_loss / examples.size());
    }
    return {std::move(params), std::move(log)};
}

}  // namespace isc
