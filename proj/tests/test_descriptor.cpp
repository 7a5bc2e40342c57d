#include <doctest.h>

#include <cmath>

#include "isc/descriptor.hpp"

using namespace isc;

namespace {

Image random_image(std::uint32_t w, std::uint32_t h, std::uint64_t seed) {
    Image img(w, h);
    Rng64 rng(seed);
    for (auto& px : img.pixels) px = static_cast<std::uint8_t>(rng.next_int(0, 255));
    return img;
}

double norm(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

TEST_CASE("raw_features of constant gray image") {
    Image img(16, 16);
    for (auto& px : img.pixels) px = 128;
    const auto feat = raw_features(img, 4);
    REQUIRE(feat.values.size() == 96);  // 6 * 16
    for (std::size_t t = 0; t < 16; ++t) {
        for (int c = 0; c < 3; ++c)
            CHECK(feat.values[t * 6 + c] == doctest::Approx(128.0 / 255).epsilon(1e-12));
        for (int c = 3; c < 6; ++c)
            CHECK(feat.values[t * 6 + c] == doctest::Approx(0.0));
    }
}

TEST_CASE("raw_features entries stay in [0,1]") {
    const auto feat = raw_features(random_image(20, 20, 5), 4);
    for (double v : feat.values) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("swapping image tiles permutes feature blocks") {
    // Two 8x8 images on a 2-grid, identical except tiles (0,0) and (0,1)
    // are exchanged.
    Image a = random_image(8, 8, 11);
    Image b = a;
    for (std::uint32_t y = 0; y < 4; ++y)
        for (std::uint32_t x = 0; x < 4; ++x)
            for (int c = 0; c < 3; ++c)
                std::swap(b.at(x, y)[c], b.at(x + 4, y)[c]);
    const auto fa = raw_features(a, 2);
    const auto fb = raw_features(b, 2);
    for (int i = 0; i < 6; ++i) {
        CHECK(fa.values[i] == fb.values[6 + i]);
        CHECK(fa.values[6 + i] == fb.values[i]);
    }
    for (int i = 12; i < 24; ++i) CHECK(fa.values[i] == fb.values[i]);
}

TEST_CASE("raw_features rejects too-small images") {
    CHECK_THROWS_AS(raw_features(Image(2, 2), 4), ArgumentError);
}

TEST_CASE("random_projector is deterministic and in range") {
    const auto p1 = random_projector(8, 12, Rng64(123));
    const auto p2 = random_projector(8, 12, Rng64(123));
    CHECK(p1.weights == p2.weights);
    for (double w : p1.weights) {
        CHECK(w > -1.0);
        CHECK(w < 1.0);
    }
}

TEST_CASE("random_projector first entry matches the SplitMix64 map") {
    const auto p = random_projector(1, 1, Rng64(0));
    Rng64 rng(0);
    const double expect = -1.0 + 2.0 * rng.next_double();
    CHECK(p.weights[0] == expect);
}

TEST_CASE("l2_normalize") {
    CHECK(l2_normalize({3, 4}) == std::vector<double>{0.6, 0.8});
    SUBCASE("idempotent on unit vectors") {
        const auto u = l2_normalize({1.5, -2.25, 0.5});
        const auto uu = l2_normalize(u);
        for (std::size_t i = 0; i < u.size(); ++i)
            CHECK(uu[i] == doctest::Approx(u[i]).epsilon(1e-9));
    }
    SUBCASE("zero vector is rejected") {
        CHECK_THROWS_AS(l2_normalize({0.0, 0.0}), ArgumentError);
    }
}

TEST_CASE("embed with identity projector reproduces unit features") {
    Projector p;
    p.out_dim = p.in_dim = 4;
    p.weights.assign(16, 0.0);
    for (int i = 0; i < 4; ++i) p.at(i, i) = 1.0;
    RawFeatures e1{{1, 0, 0, 0}};
    const auto d = embed(e1, p);
    CHECK(d.values == std::vector<double>{1, 0, 0, 0});
}

TEST_CASE("embed is scale-invariant in the features") {
    const auto p = random_projector(16, 24, Rng64(3));
    RawFeatures feat;
    Rng64 rng(4);
    for (int i = 0; i < 24; ++i) feat.values.push_back(rng.next_double());
    RawFeatures scaled{feat.values};
    for (auto& v : scaled.values) v *= 3.0;
    const auto a = embed(feat, p);
    const auto b = embed(scaled, p);
    for (std::size_t i = 0; i < a.values.size(); ++i)
        CHECK(std::abs(a.values[i] - b.values[i]) < 1e-9);
}

TEST_CASE("embed matches a direct matrix-multiply oracle") {
    const auto p = random_projector(6, 10, Rng64(8));
    RawFeatures feat;
    Rng64 rng(9);
    for (int i = 0; i < 10; ++i) feat.values.push_back(rng.next_range(0.0, 1.0));

    std::vector<double> expect(6, 0.0);
    for (int r = 0; r < 6; ++r)
        for (int c = 0; c < 10; ++c) expect[r] += p.at(r, c) * feat.values[c];
    const double n = norm(expect);
    const auto d = embed(feat, p);
    REQUIRE(d.dim() == 6);
    for (int i = 0; i < 6; ++i)
        CHECK(d.values[i] == doctest::Approx(expect[i] / n).epsilon(1e-12));
    CHECK(std::abs(norm(d.values) - 1.0) < 1e-6);
}

TEST_CASE("embed rejects mismatched dimensions") {
    const auto p = random_projector(4, 8, Rng64(1));
    CHECK_THROWS_AS(embed(RawFeatures{{1, 2, 3}}, p), ArgumentError);
}

TEST_CASE("descriptor of a full view equals descriptor of the image") {
    const Image img = random_image(16, 16, 21);
    const auto p = random_projector(32, raw_feature_len(4), Rng64(2));
    const auto views = crop_views(img, 2);
    const auto via_view = embed(raw_features(views[0].second, 4), p);
    const auto direct = embed(raw_features(img, 4), p);
    CHECK(via_view.values == direct.values);
}
