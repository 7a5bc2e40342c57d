#include "isc/descriptor.hpp"

#include <cmath>

#include "isc/errors.hpp"

namespace isc {

RawFeatures raw_features(const Image& img, std::uint32_t grid) {
    if (grid < 1) throw ArgumentError("grid must be >= 1");
    if (img.width < grid || img.height < grid)
        throw ArgumentError("image smaller than feature grid");
    RawFeatures feat;
    feat.values.reserve(raw_feature_len(grid));
    for (std::uint32_t r = 0; r < grid; ++r) {
        const std::uint32_t y0 = r * img.height / grid;
        const std::uint32_t y1 = (r + 1) * img.height / grid;
        for (std::uint32_t c = 0; c < grid; ++c) {
            const std::uint32_t x0 = c * img.width / grid;
            const std::uint32_t x1 = (c + 1) * img.width / grid;
            double sum[3] = {0, 0, 0};
            double sumsq[3] = {0, 0, 0};
            const double n = static_cast<double>(x1 - x0) * (y1 - y0);
            for (std::uint32_t y = y0; y < y1; ++y)
                for (std::uint32_t x = x0; x < x1; ++x) {
                    const std::uint8_t* px = img.at(x, y);
                    for (int ch = 0; ch < 3; ++ch) {
                        sum[ch] += px[ch];
                        sumsq[ch] += static_cast<double>(px[ch]) * px[ch];
                    }
                }
            double mean[3];
            for (int ch = 0; ch < 3; ++ch) {
                mean[ch] = sum[ch] / n;
                feat.values.push_back(mean[ch] / 255.0);
            }
            for (int ch = 0; ch < 3; ++ch) {
                const double var = std::max(0.0, sumsq[ch] / n - mean[ch] * mean[ch]);
                feat.values.push_back(std::sqrt(var) / 255.0);
            }
        }
    }
    return feat;
}

Projector random_projector(std::size_t d, std::size_t f, Rng64 rng) {
    if (d < 1 || f < 1) throw ArgumentError("projector dimensions must be >= 1");
    Projector p;
    p.out_dim = d;
    p.in_dim = f;
    p.weights.resize(d * f);
    for (auto& w : p.weights) w = rng.next_range(-1.0, 1.0);
    return p;
}

std::vector<double> l2_normalize(const std::vector<double>& v) {
    double sq = 0;
    for (double x : v) sq += x * x;
    const double norm = std::sqrt(sq);
    if (norm <= 1e-12) throw ArgumentError("cannot normalize near-zero vector");
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / norm;
    return out;
}

Descriptor embed(const RawFeatures& feat, const Projector& p) {
    if (feat.values.size() != p.in_dim)
        throw ArgumentError("feature length does not match projector columns");
    std::vector<double> out(p.out_dim, 0.0);
    for (std::size_t r = 0; r < p.out_dim; ++r) {
        double acc = 0;
        const double* row = p.weights.data() + r * p.in_dim;
        for (std::size_t c = 0; c < p.in_dim; ++c) acc += row[c] * feat.values[c];
        out[r] = acc;
    }
    return Descriptor{l2_normalize(out)};
}

}  // namespace isc
