#pragma once

#include <string>
#include <vector>

#include "isc/image.hpp"
#include "isc/rng.hpp"

namespace isc {

// Unit-norm embedding of one image view.
struct Descriptor {
    std::vector<double> values;

    std::size_t dim() const { return values.size(); }
};

// Per-tile RGB means and standard deviations on a g x g grid, scaled to
// [0,1]. Layout: tiles row-major, 6 values each (meanR, meanG, meanB,
// stdR, stdG, stdB).
struct RawFeatures {
    std::vector<double> values;
};

// Linear embedding head: d x f matrix applied to raw features.
struct Projector {
    std::size_t out_dim = 0;  // d
    std::size_t in_dim = 0;   // f
    std::vector<double> weights;  // row-major d x f

    double& at(std::size_t r, std::size_t c) { return weights[r * in_dim + c]; }
    double at(std::size_t r, std::size_t c) const { return weights[r * in_dim + c]; }
};

inline std::size_t raw_feature_len(std::uint32_t grid) {
    return static_cast<std::size_t>(6) * grid * grid;
}

// Tile boundaries follow the same floor rule as crop_views.
RawFeatures raw_features(const Image& img, std::uint32_t grid = 4);

// Entries i.i.d. uniform(-1,1) from SplitMix64, row-major fill order.
Projector random_projector(std::size_t d, std::size_t f, Rng64 rng);

std::vector<double> l2_normalize(const std::vector<double>& v);

// normalize(P * feat).
Descriptor embed(const RawFeatures& feat, const Projector& p);

// -- ISCD descriptor file ----------------------------------------------
// magic "ISCD", version u32=1, dim u32, count u64, then per record:
// id-length u16 + UTF-8 id, view-kind code u8, dim x f32. Little-endian.

struct DescriptorRecord {
    std::string image_id;
    std::uint8_t view_code = 0;
    Descriptor descriptor;
};

void save_descriptors(const std::string& path, std::uint32_t dim,
                      const std::vector<DescriptorRecord>& records);
std::vector<DescriptorRecord> load_descriptors(const std::string& path,
                                               std::uint32_t* dim_out = nullptr);

// -- ISCP projector file -----------------------------------------------
// magic "ISCP", version u32=1, d u32, f u32, then row-major f32.

void save_projector(const std::string& path, const Projector& p);
Projector load_projector(const std::string& path);

}  // namespace isc
