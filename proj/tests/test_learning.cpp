#include <doctest.h>

#include <cmath>

#include "grad_check.hpp"
#include "isc/learning.hpp"

using namespace isc;

namespace {

EmbeddingBatch random_batch(std::size_t pairs, std::size_t dim, Rng64& rng) {
    EmbeddingBatch b;
    b.pairs = pairs;
    b.dim = dim;
    b.rows.resize(2 * pairs * dim);
    for (std::size_t r = 0; r < 2 * pairs; ++r) {
        double sq = 0;
        for (std::size_t d = 0; d < dim; ++d) {
            b.rows[r * dim + d] = rng.next_range(-1.0, 1.0);
            sq += b.rows[r * dim + d] * b.rows[r * dim + d];
        }
        const double n = std::sqrt(sq);
        for (std::size_t d = 0; d < dim; ++d) b.rows[r * dim + d] /= n;
    }
    return b;
}

// Direct evaluation of the NT-Xent definition in long double, written
// independently of the production kernel.
long double nt_xent_reference(const EmbeddingBatch& b, long double tau) {
    const std::size_t m = b.anchors();
    long double total = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t j = i ^ 1;
        long double pos = 0;
        for (std::size_t d = 0; d < b.dim; ++d)
            pos += static_cast<long double>(b.row(i)[d]) * b.row(j)[d];
        long double denom = 0;
        for (std::size_t k = 0; k < m; ++k) {
            if (k == i) continue;
            long double s = 0;
            for (std::size_t d = 0; d < b.dim; ++d)
                s += static_cast<long double>(b.row(i)[d]) * b.row(k)[d];
            denom += expl(s / tau);
        }
        total += -logl(expl(pos / tau) / denom);
    }
    return total / m;
}

}  // namespace

TEST_CASE("nt_xent_loss analytic anchors") {
    Rng64 rng(1);
    SUBCASE("N=1: denominator holds only the positive, loss is 0") {
        const auto b = random_batch(1, 8, rng);
        CHECK(nt_xent_loss(b, 0.5) == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("N=2 all-identical embeddings at tau=1 give ln 3") {
        EmbeddingBatch b;
        b.pairs = 2;
        b.dim = 4;
        b.rows.resize(16);
        const double unit[4] = {0.5, 0.5, 0.5, 0.5};
        for (int r = 0; r < 4; ++r)
            for (int d = 0; d < 4; ++d) b.rows[r * 4 + d] = unit[d];
        CHECK(nt_xent_loss(b, 1.0) == doctest::Approx(std::log(3.0)).epsilon(1e-9));
    }
    SUBCASE("invalid arguments") {
        const auto b = random_batch(2, 4, rng);
        CHECK_THROWS_AS(nt_xent_loss(b, 0.0), ArgumentError);
        CHECK_THROWS_AS(nt_xent_loss(EmbeddingBatch{}, 1.0), ArgumentError);
    }
}

TEST_CASE("nt_xent_loss matches a long-double reference evaluation") {
    Rng64 rng(2);
    const auto b = random_batch(4, 8, rng);
    const double expect = static_cast<double>(nt_xent_reference(b, 0.1L));
    CHECK(nt_xent_loss(b, 0.1) == doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("nt_xent_loss is non-negative") {
    Rng64 rng(3);
    for (int i = 0; i < 50; ++i) {
        const auto b = random_batch(static_cast<std::size_t>(rng.next_int(1, 5)), 6, rng);
        CHECK(nt_xent_loss(b, 0.2) >= -1e-12);
    }
}

TEST_CASE("nt_xent_loss is invariant to permuting item pairs") {
    Rng64 rng(4);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = static_cast<std::size_t>(rng.next_int(2, 6));
        const auto b = random_batch(n, 8, rng);
        // Swap two whole pairs of rows.
        auto permuted = b;
        const std::size_t i = static_cast<std::size_t>(rng.next_int(0, static_cast<int>(n) - 1));
        const std::size_t j = static_cast<std::size_t>(rng.next_int(0, static_cast<int>(n) - 1));
        for (std::size_t d = 0; d < b.dim; ++d) {
            std::swap(permuted.rows[2 * i * b.dim + d], permuted.rows[2 * j * b.dim + d]);
            std::swap(permuted.rows[(2 * i + 1) * b.dim + d],
                      permuted.rows[(2 * j + 1) * b.dim + d]);
        }
        CHECK(std::abs(nt_xent_loss(b, 0.3) - nt_xent_loss(permuted, 0.3)) <= 1e-12);
    }
}

TEST_CASE("nt_xent_grad matches finite differences") {
    Rng64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        auto b = random_batch(3, 6, rng);
        const double tau = 0.1 + 0.2 * rng.next_double();
        const auto analytic = nt_xent_grad(b, tau);
        const auto res = testing::check_gradient(
            b.rows, [&] { return nt_xent_loss(b, tau); }, analytic, 1e-5);
        CHECK(res.max_rel_error < 1e-4);
    }
}

TEST_CASE("nt_xent_grad rows of an all-identical batch sum to zero") {
    EmbeddingBatch b;
    b.pairs = 2;
    b.dim = 4;
    b.rows.resize(16);
    for (int r = 0; r < 4; ++r)
        for (int d = 0; d < 4; ++d) b.rows[r * 4 + d] = 0.5;
    const auto g = nt_xent_grad(b, 1.0);
    for (int d = 0; d < 4; ++d) {
        double col = 0;
        for (int r = 0; r < 4; ++r) col += g[r * 4 + d];
        CHECK(col == doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("nt_xent tau reparameterization") {
    // grad at temperature tau equals grad at 1 of the batch whose
    // similarities are pre-divided by tau; verified via the loss values.
    Rng64 rng(6);
    const auto b = random_batch(3, 5, rng);
    const double tau = 0.25;
    auto scaled = b;
    const double root = std::sqrt(1.0 / tau);
    for (auto& v : scaled.rows) v *= root;  // s/tau = (root*a).(root*b)
    CHECK(nt_xent_loss(b, tau) == doctest::Approx(nt_xent_loss(scaled, 1.0)).epsilon(1e-10));
}

TEST_CASE("bce_with_logit anchors and stability") {
    const auto [l1, g1] = bce_with_logit(0.0, 1);
    CHECK(l1 == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(g1 == doctest::Approx(-0.5).epsilon(1e-12));
    const auto [l0, g0] = bce_with_logit(0.0, 0);
    CHECK(l0 == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(g0 == doctest::Approx(0.5).epsilon(1e-12));

    CHECK(bce_with_logit(50.0, 1).loss < 1e-20);
    CHECK(bce_with_logit(-50.0, 0).loss < 1e-20);
    CHECK(std::isfinite(bce_with_logit(1000.0, 0).loss));
    CHECK(std::isfinite(bce_with_logit(-1000.0, 1).loss));
}

TEST_CASE("bce symmetry bce(x,1) == bce(-x,0) exactly") {
    Rng64 rng(7);
    for (int i = 0; i < 100; ++i) {
        const double x = rng.next_range(-30.0, 30.0);
        CHECK(bce_with_logit(x, 1).loss == bce_with_logit(-x, 0).loss);
    }
}

TEST_CASE("bce gradient matches finite differences") {
    Rng64 rng(8);
    for (int i = 0; i < 20; ++i) {
        const double x = rng.next_range(-5.0, 5.0);
        for (int label : {0, 1}) {
            std::vector<double> p{x};
            const std::vector<double> analytic{bce_with_logit(x, label).dloss_dlogit};
            const auto res = testing::check_gradient(
                p, [&] { return bce_with_logit(p[0], label).loss; }, analytic, 1e-5);
            CHECK(res.max_rel_error < 1e-4);
        }
    }
}

TEST_CASE("concat_pair") {
    Image q(16, 16), r(16, 16);
    for (auto& px : q.pixels) px = 10;
    for (auto& px : r.pixels) px = 200;
    const Image out = concat_pair(q, r, 32, 16);
    CHECK(out.width == 32);
    CHECK(out.height == 16);
    CHECK(out.at(0, 0)[0] == 10);
    CHECK(out.at(31, 15)[0] == 200);

    SUBCASE("identical inputs give mirror-equal halves") {
        const Image same = concat_pair(q, q, 32, 16);
        for (std::uint32_t y = 0; y < 16; ++y)
            for (std::uint32_t x = 0; x < 16; ++x)
                CHECK(same.at(x, y)[0] == same.at(x + 16, y)[0]);
    }
    SUBCASE("odd width is rejected") {
        CHECK_THROWS_AS(concat_pair(q, r, 31, 16), ArgumentError);
    }
}

TEST_CASE("train_projector basics") {
    // Structured images: per-image tile statistics differ, so the
    // contrastive objective has signal to pick up.
    Rng64 gen(20);
    std::vector<Image> images;
    for (const auto& [id, img] : make_synthetic_dataset(16, 0, 0, gen).refs)
        images.push_back(img);

    SUBCASE("lr = 0 leaves the projector at its init") {
        auto [p0, log0] = train_projector(images, Rng64(5), 2, 0.0, 0.1, 4, 32);
        auto [p1, log1] = train_projector(images, Rng64(5), 0, 0.0, 0.1, 4, 32);
        // epochs=0 reproduces the seeded init; lr=0 never moves off it
        CHECK(p0.weights == p1.weights);
    }
    SUBCASE("same seed gives identical projectors") {
        auto [a, la] = train_projector(images, Rng64(6), 3, 0.2, 0.1, 4, 32);
        auto [b, lb] = train_projector(images, Rng64(6), 3, 0.2, 0.1, 4, 32);
        CHECK(a.weights == b.weights);
        CHECK(la.epoch_loss == lb.epoch_loss);
    }
    SUBCASE("loss decreases on synthetic data") {
        auto [p, log] = train_projector(images, Rng64(7), 16, 0.02, 0.1, 4, 32);
        REQUIRE(log.epoch_loss.size() == 16);
        CHECK(log.epoch_loss.back() < log.epoch_loss.front());
    }
    SUBCASE("insufficient images are rejected") {
        std::vector<Image> few(images.begin(), images.begin() + 3);
        CHECK_THROWS_AS(train_projector(few, Rng64(1), 1, 0.1, 0.1, 4, 16), ArgumentError);
    }
}
