#include "isc/learning.hpp"

#include <algorithm>
#include <cmath>

#include "isc/errors.hpp"

namespace isc {

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

namespace {

// log(1 + exp(t)) without overflow.
double softplus(double t) {
    if (t > 0) return t + std::log1p(std::exp(-t));
    return std::log1p(std::exp(t));
}

double dot_rows(const double* a, const double* b, std::size_t d) {
    double s = 0;
    for (std::size_t i = 0; i < d; ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

BceResult bce_with_logit(double logit, int label) {
    // softplus form; the two label branches are exact mirrors so that
    // bce(x, 1) == bce(-x, 0) bit-for-bit.
    const double loss = label == 1 ? softplus(-logit) : softplus(logit);
    return {loss, sigmoid(logit) - label};
}

double nt_xent_loss(const EmbeddingBatch& batch, double tau) {
    if (tau <= 0) throw ArgumentError("tau must be > 0");
    if (batch.pairs < 1) throw ArgumentError("empty batch");
    const std::size_t m = batch.anchors();
    double total = 0;
    std::vector<double> logits(m);
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t j = i ^ 1;  // positive partner
        double maxv = -1e300;
        for (std::size_t k = 0; k < m; ++k) {
            if (k == i) continue;
            logits[k] = dot_rows(batch.row(i), batch.row(k), batch.dim) / tau;
            maxv = std::max(maxv, logits[k]);
        }
        double denom = 0;
        for (std::size_t k = 0; k < m; ++k) {
            if (k == i) continue;
            denom += std::exp(logits[k] - maxv);
        }
        total += -(logits[j] - maxv) + std::log(denom);
    }
    return total / static_cast<double>(m);
}

std::vector<double> nt_xent_grad(const EmbeddingBatch& batch, double tau) {
    if (tau <= 0) throw ArgumentError("tau must be > 0");
    if (batch.pairs < 1) throw ArgumentError("empty batch");
    const std::size_t m = batch.anchors();
    const std::size_t d = batch.dim;
    std::vector<double> grad(m * d, 0.0);
    std::vector<double> logits(m), p(m);
    const double inv = 1.0 / (tau * static_cast<double>(m));
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t j = i ^ 1;
        double maxv = -1e300;
        for (std::size_t k = 0; k < m; ++k) {
            if (k == i) continue;
            logits[k] = dot_rows(batch.row(i), batch.row(k), batch.dim) / tau;
            maxv = std::max(maxv, logits[k]);
        }
        double denom = 0;
        for (std::size_t k = 0; k < m; ++k) {
            if (k == i) continue;
            p[k] = std::exp(logits[k] - maxv);
            denom += p[k];
        }
        for (std::size_t k = 0; k < m; ++k) {
            if (k == i) continue;
            // d(l_i)/d(s_ik) = (softmax_k - [k == j]) / tau, averaged.
            const double coeff = (p[k] / denom - (k == j ? 1.0 : 0.0)) * inv;
            const double* zi = batch.row(i);
            const double* zk = batch.row(k);
            double* gi = grad.data() + i * d;
            double* gk = grad.data() + k * d;
            for (std::size_t c = 0; c < d; ++c) {
                gi[c] += coeff * zk[c];
                gk[c] += coeff * zi[c];
            }
        }
    }
    return grad;
}

Image concat_pair(const Image& query, const Image& ref,
                  std::uint32_t out_w, std::uint32_t out_h) {
    if (out_w % 2 != 0) throw ArgumentError("concat width must be even");
    if (out_w < 2 || out_h < 1) throw ArgumentError("concat size too small");
    const std::uint32_t half = out_w / 2;
    const Image left = resize_bilinear(query, half, out_h);
    const Image right = resize_bilinear(ref, half, out_h);
    Image out(out_w, out_h);
    for (std::uint32_t y = 0; y < out_h; ++y) {
        std::copy(left.at(0, y), left.at(0, y) + static_cast<std::size_t>(half) * 3,
                  out.at(0, y));
        std::copy(right.at(0, y), right.at(0, y) + static_cast<std::size_t>(half) * 3,
                  out.at(half, y));
    }
    return out;
}

std::pair<Projector, TrainingLog> train_projector(
    const std::vector<Image>& train_images, Rng64 rng, std::uint32_t epochs,
    double lr, double tau, std::size_t batch_pairs,
    std::size_t descriptor_dim, std::uint32_t feature_grid) {
    if (batch_pairs < 2) throw ArgumentError("batch must hold at least 2 pairs");
    if (train_images.size() < 2 * batch_pairs)
        throw ArgumentError("need at least 2N training images");

    const std::size_t f = raw_feature_len(feature_grid);
    Projector proj = random_projector(descriptor_dim, f, Rng64(rng.next_u64()));
    // Small init keeps early gradients in a sane range.
    for (auto& w : proj.weights) w *= 0.1;

    std::vector<RawFeatures> base(train_images.size());
    for (std::size_t i = 0; i < train_images.size(); ++i)
        base[i] = raw_features(train_images[i], feature_grid);

    TrainingLog log;
    std::vector<std::size_t> order(train_images.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    const std::size_t n_batches = train_images.size() / batch_pairs;
    for (std::uint32_t epoch = 0; epoch < epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng.next_int(0, static_cast<int>(i) - 1)]);

        double epoch_loss = 0;
        for (std::size_t b = 0; b < n_batches; ++b) {
            EmbeddingBatch batch;
            batch.pairs = batch_pairs;
            batch.dim = descriptor_dim;
            batch.rows.resize(2 * batch_pairs * descriptor_dim);

            struct ItemState {
                std::vector<double> feat;  // raw features of this view
                std::vector<double> pre;   // P * feat, before normalization
                double norm = 0;
            };
            std::vector<ItemState> items(2 * batch_pairs);

            for (std::size_t s = 0; s < batch_pairs; ++s) {
                const std::size_t img_idx = order[b * batch_pairs + s];
                auto [aug, rec] = augment(train_images[img_idx], Rng64(rng.next_u64()));
                (void)rec;
                items[2 * s].feat = base[img_idx].values;
                items[2 * s + 1].feat = raw_features(aug, feature_grid).values;
            }
            for (std::size_t r = 0; r < 2 * batch_pairs; ++r) {
                auto& it = items[r];
                it.pre.assign(descriptor_dim, 0.0);
                for (std::size_t i = 0; i < descriptor_dim; ++i) {
                    const double* row = proj.weights.data() + i * f;
                    double acc = 0;
                    for (std::size_t c = 0; c < f; ++c) acc += row[c] * it.feat[c];
                    it.pre[i] = acc;
                }
                double sq = 0;
                for (double v : it.pre) sq += v * v;
                it.norm = std::sqrt(std::max(sq, 1e-24));
                double* dst = batch.row(r);
                for (std::size_t i = 0; i < descriptor_dim; ++i)
                    dst[i] = it.pre[i] / it.norm;
            }

            epoch_loss += nt_xent_loss(batch, tau);
            const auto grad_rows = nt_xent_grad(batch, tau);

            std::vector<double> dproj(proj.weights.size(), 0.0);
            for (std::size_t r = 0; r < 2 * batch_pairs; ++r) {
                const auto& it = items[r];
                const double* g = grad_rows.data() + r * descriptor_dim;
                const double* x = batch.row(r);
                // Jacobian of u/||u||: (g - (g.x) x) / ||u||.
                const double gx = dot_rows(g, x, descriptor_dim);
                for (std::size_t i = 0; i < descriptor_dim; ++i) {
                    const double gu = (g[i] - gx * x[i]) / it.norm;
                    double* drow = dproj.data() + i * f;
                    for (std::size_t c = 0; c < f; ++c) drow[c] += gu * it.feat[c];
                }
            }
            for (std::size_t i = 0; i < proj.weights.size(); ++i)
                proj.weights[i] -= lr * dproj[i];
        }
        log.epoch_loss.push_back(n_batches ? epoch_loss / n_batches : 0.0);
    }
    return {std::move(proj), std::move(log)};
}

}  // namespace isc
