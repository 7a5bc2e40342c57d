#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "isc/descriptor.hpp"
#include "isc/image.hpp"
#include "isc/rng.hpp"

namespace isc {

// 2N x d matrix of paired embeddings: view a of item i at row 2i, view b
// at row 2i+1. Rows are expected unit-norm; the loss itself works on raw
// dot products so finite-difference probes stay valid.
struct EmbeddingBatch {
    std::size_t pairs = 0;  // N
    std::size_t dim = 0;
    std::vector<double> rows;  // row-major, 2N x dim

    double* row(std::size_t i) { return rows.data() + i * dim; }
    const double* row(std::size_t i) const { return rows.data() + i * dim; }
    std::size_t anchors() const { return 2 * pairs; }
};

// NT-Xent: for anchor i with positive j(i),
//   l_i = -log( exp(s_ij / tau) / sum_{k != i} exp(s_ik / tau) ),
// s = dot product; loss = mean over all 2N anchors. Logits are
// max-subtracted before exponentiation.
double nt_xent_loss(const EmbeddingBatch& batch, double tau);

// d(loss)/d(rows), rows treated as free variables (the caller owns any
// normalization Jacobian). 2N x d, same layout as the batch.
std::vector<double> nt_xent_grad(const EmbeddingBatch& batch, double tau);

// Stable softplus-form BCE on a single logit.
// loss = log(1 + exp(-logit)) + (1 - label) * logit; grad = sigmoid(logit) - label.
struct BceResult {
    double loss = 0.0;
    double dloss_dlogit = 0.0;
};
BceResult bce_with_logit(double logit, int label);

double sigmoid(double x);

// Query resized into the left half, reference into the right.
Image concat_pair(const Image& query, const Image& ref,
                  std::uint32_t out_w, std::uint32_t out_h);

// -- Tiny attention matcher --------------------------------------------

struct MatcherConfig {
    std::uint32_t in_w = 32;
    std::uint32_t in_h = 16;
    std::uint32_t patch = 4;
    std::uint32_t d_model = 16;
    std::uint32_t hidden = 32;

    std::uint32_t tokens() const { return (in_w / patch) * (in_h / patch); }
    std::uint32_t patch_dim() const { return patch * patch; }
    bool operator==(const MatcherConfig&) const = default;
};

// Full weight set of the single-head, single-block matcher. Parameter
// blocks in declaration order; this is also the ISCM serialization order.
struct TinyMatcherParams {
    MatcherConfig config;
    std::vector<double> patch_embed;  // d_model x patch_dim
    std::vector<double> pos;          // tokens x d_model
    std::vector<double> wq, wk, wv, wo;  // d_model x d_model each
    std::vector<double> w1;           // hidden x d_model
    std::vector<double> b1;           // hidden
    std::vector<double> w2;           // d_model x hidden
    std::vector<double> b2;           // d_model
    std::vector<double> head_w;       // d_model
    std::vector<double> head_b;       // scalar bias, kept as a 1-vector
                                      // so generic block loops cover it

    static TinyMatcherParams zeros(const MatcherConfig& cfg);
    static TinyMatcherParams random_init(const MatcherConfig& cfg, Rng64& rng,
                                         double scale = 0.02);

    // Blocks in declaration order, for generic update/check loops.
    std::vector<std::pair<std::string, std::vector<double>*>> blocks();
    std::vector<std::pair<std::string, const std::vector<double>*>> blocks() const;
};

// Gradients mirror the parameter layout.
using TinyMatcherGrads = TinyMatcherParams;

// Grayscale (r+g+b)/765 -> patchify -> embed + positions -> one global
// single-head attention block with residual -> one GELU MLP with
// residual -> mean-pool -> affine head.
double tiny_matcher_forward(const TinyMatcherParams& params, const Image& input);

TinyMatcherGrads tiny_matcher_backward(const TinyMatcherParams& params,
                                       const Image& input, double dloss_dlogit);

struct PairExample {
    Image input;  // pre-concatenated pair image
    int label = 0;
};

struct TrainingLog {
    std::vector<double> epoch_loss;  // mean per epoch
};

// Plain SGD with seeded shuffling over the example list.
std::pair<TinyMatcherParams, TrainingLog> train_tiny_matcher(
    const std::vector<PairExample>& examples, const MatcherConfig& cfg,
    std::uint32_t epochs, double lr, Rng64 rng);

// NT-Xent training of the linear projector over (original, augmented)
// feature pairs; the gradient flows through the l2 normalization.
std::pair<Projector, TrainingLog> train_projector(
    const std::vector<Image>& train_images, Rng64 rng, std::uint32_t epochs,
    double lr, double tau, std::size_t batch_pairs,
    std::size_t descriptor_dim = 256, std::uint32_t feature_grid = 4);

// -- ISCM matcher file -------------------------------------------------
// magic "ISCM", version u32=1, config u32s (in_w,in_h,patch,d_model,
// hidden), then parameter blocks in declaration order as f32 LE,
// head_b last as a single f32.

void save_matcher(const std::string& path, const TinyMatcherParams& params);
TinyMatcherParams load_matcher(const std::string& path);

}  // namespace isc
