#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "isc/descriptor.hpp"
#include "isc/image.hpp"

namespace isc {

struct IndexEntry {
    std::string image_id;
    std::uint8_t view_code = 0;
    Descriptor descriptor;
};

struct Neighbor {
    std::string image_id;
    std::uint8_t view_code = 0;
    double similarity = 0.0;

    bool operator==(const Neighbor&) const = default;
};

// Dot product of unit vectors, clamped to [-1, 1].
double cosine_similarity(const Descriptor& a, const Descriptor& b);

// Exact cosine kNN over an immutable descriptor collection. Results are
// sorted by (similarity desc, image_id asc, view_code asc); the same
// total order is applied inside every chunk of the parallel scan, so
// results are identical at any thread count.
class Index {
  public:
    static Index build(std::vector<IndexEntry> entries);

    std::size_t size() const { return entries_.size(); }
    std::size_t dim() const { return dim_; }
    const std::vector<IndexEntry>& entries() const { return entries_; }

    std::vector<Neighbor> knn(const Descriptor& query, std::size_t k,
                              unsigned threads = 1) const;

    std::map<std::string, std::vector<Neighbor>> batch_knn(
        const std::vector<std::pair<std::string, Descriptor>>& queries,
        std::size_t k, unsigned threads = 1) const;

  private:
    std::vector<IndexEntry> entries_;
    std::size_t dim_ = 0;
};

}  // namespace isc
