#include <benchmark/benchmark.h>

#include <cmath>

#include "isc/descriptor.hpp"
#include "isc/index.hpp"
#include "isc/learning.hpp"

namespace {

isc::Descriptor unit_vec(std::size_t dim, isc::Rng64& rng) {
    std::vector<double> v(dim);
    double sq = 0;
    for (auto& x : v) {
        x = rng.next_range(-1.0, 1.0);
        sq += x * x;
    }
    const double n = std::sqrt(sq);
    for (auto& x : v) x /= n;
    return {v};
}

void bm_knn_scan(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    isc::Rng64 rng(1);
    std::vector<isc::IndexEntry> entries;
    entries.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        entries.push_back({"e" + std::to_string(i), 0, unit_vec(256, rng)});
    const auto idx = isc::Index::build(entries);
    const auto q = unit_vec(256, rng);
    for (auto _ : state) benchmark::DoNotOptimize(idx.knn(q, 10, 1));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(n));
}

void bm_raw_features(benchmark::State& state) {
    isc::Rng64 rng(2);
    isc::Image img(128, 128);
    for (auto& px : img.pixels) px = static_cast<std::uint8_t>(rng.next_int(0, 255));
    for (auto _ : state) benchmark::DoNotOptimize(isc::raw_features(img, 4));
}

void bm_nt_xent_grad(benchmark::State& state) {
    isc::Rng64 rng(3);
    isc::EmbeddingBatch b;
    b.pairs = static_cast<std::size_t>(state.range(0));
    b.dim = 256;
    b.rows.resize(2 * b.pairs * b.dim);
    for (auto& x : b.rows) x = rng.next_range(-1.0, 1.0);
    for (std::size_t r = 0; r < 2 * b.pairs; ++r) {
        double sq = 0;
        for (std::size_t d = 0; d < b.dim; ++d) sq += b.rows[r * b.dim + d] * b.rows[r * b.dim + d];
        const double n = std::sqrt(sq);
        for (std::size_t d = 0; d < b.dim; ++d) b.rows[r * b.dim + d] /= n;
    }
    for (auto _ : state) benchmark::DoNotOptimize(isc::nt_xent_grad(b, 0.1));
}

void bm_matcher_forward(benchmark::State& state) {
    const isc::MatcherConfig cfg;
    isc::Rng64 rng(4);
    const auto params = isc::TinyMatcherParams::random_init(cfg, rng, 0.1);
    isc::Image img(cfg.in_w, cfg.in_h);
    for (auto& px : img.pixels) px = static_cast<std::uint8_t>(rng.next_int(0, 255));
    for (auto _ : state) benchmark::DoNotOptimize(isc::tiny_matcher_forward(params, img));
}

}  // namespace

BENCHMARK(bm_knn_scan)->Arg(1000)->Arg(5000);
BENCHMARK(bm_raw_features);
BENCHMARK(bm_nt_xent_grad)->Arg(8)->Arg(32);
BENCHMARK(bm_matcher_forward);

BENCHMARK_MAIN();
