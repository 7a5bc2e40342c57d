#include "isc/index.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <thread>

#include "isc/errors.hpp"

namespace isc {

double cosine_similarity(const Descriptor& a, const Descriptor& b) {
    if (a.dim() != b.dim())
        throw ArgumentError("descriptor dimension mismatch");
    double dot = 0;
    for (std::size_t i = 0; i < a.values.size(); ++i) dot += a.values[i] * b.values[i];
    return std::clamp(dot, -1.0, 1.0);
}

namespace {

bool neighbor_before(const Neighbor& a, const Neighbor& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    if (a.image_id != b.image_id) return a.image_id < b.image_id;
    return a.view_code < b.view_code;
}

}  // namespace

Index Index::build(std::vector<IndexEntry> entries) {
    Index idx;
    std::set<std::pair<std::string, std::uint8_t>> seen;
    for (const auto& e : entries) {
        if (idx.dim_ == 0) idx.dim_ = e.descriptor.dim();
        if (e.descriptor.dim() != idx.dim_)
            throw ArgumentError("index entries have mixed dimensions");
        double sq = 0;
        for (double v : e.descriptor.values) sq += v * v;
        if (std::abs(std::sqrt(sq) - 1.0) > 1e-4)
            throw ArgumentError("index entry is not unit-norm: " + e.image_id);
        if (!seen.emplace(e.image_id, e.view_code).second)
            throw ValidationError("duplicate (image_id, view) in index: " + e.image_id);
    }
    idx.entries_ = std::move(entries);
    return idx;
}

std::vector<Neighbor> Index::knn(const Descriptor& query, std::size_t k,
                                 unsigned threads) const {
    if (k < 1) throw ArgumentError("k must be >= 1");
    if (!entries_.empty() && query.dim() != dim_)
        throw ArgumentError("query dimension mismatch");
    if (entries_.empty()) return {};
    if (threads < 1) threads = 1;

    const std::size_t n = entries_.size();
    const unsigned nt = static_cast<unsigned>(
        std::min<std::size_t>(threads, (n + 63) / 64));

    auto scan_chunk = [&](std::size_t begin, std::size_t end, std::vector<Neighbor>& out) {
        out.reserve(end - begin);
        for (std::size_t i = begin; i < end; ++i) {
            const auto& e = entries_[i];
            out.push_back({e.image_id, e.view_code,
                           cosine_similarity(query, e.descriptor)});
        }
        const std::size_t keep = std::min(k, out.size());
        std::partial_sort(out.begin(), out.begin() + keep, out.end(), neighbor_before);
        out.resize(keep);
    };

    std::vector<std::vector<Neighbor>> partial(nt);
    if (nt <= 1) {
        scan_chunk(0, n, partial[0]);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (n + nt - 1) / nt;
        for (unsigned t = 0; t < nt; ++t) {
            const std::size_t begin = t * chunk;
            const std::size_t end = std::min(n, begin + chunk);
            pool.emplace_back(scan_chunk, begin, end, std::ref(partial[t]));
        }
        for (auto& th : pool) th.join();
    }

    std::vector<Neighbor> merged;
    for (auto& p : partial)
        merged.insert(merged.end(), p.begin(), p.end());
    std::sort(merged.begin(), merged.end(), neighbor_before);
    merged.resize(std::min(k, merged.size()));
    return merged;
}

std::map<std::string, std::vector<Neighbor>> Index::batch_knn(
    const std::vector<std::pair<std::string, Descriptor>>& queries,
    std::size_t k, unsigned threads) const {
    std::map<std::string, std::vector<Neighbor>> out;
    for (const auto& [id, q] : queries) out[id] = knn(q, k, threads);
    return out;
}

}  // namespace isc
