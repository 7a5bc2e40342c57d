#include <algorithm>
#include <cmath>

#include "isc/image.hpp"

namespace isc {

namespace {

// Seeded procedural image: two-color gradient, a few solid shapes, mild
// per-pixel noise. Distinct seeds give visually (and statistically)
// distinct images, in luminance as well as hue.
Image procedural_image(std::uint32_t size, Rng64& rng) {
    Image img(size, size);
    std::uint8_t c0[3], c1[3];
    for (int c = 0; c < 3; ++c) {
        c0[c] = static_cast<std::uint8_t>(rng.next_int(0, 255));
        c1[c] = static_cast<std::uint8_t>(rng.next_int(0, 255));
    }
    const int direction = rng.next_int(0, 2);  // 0 horizontal, 1 vertical, 2 diagonal
    for (std::uint32_t y = 0; y < size; ++y) {
        for (std::uint32_t x = 0; x < size; ++x) {
            double t;
            switch (direction) {
                case 0: t = static_cast<double>(x) / (size - 1); break;
                case 1: t = static_cast<double>(y) / (size - 1); break;
                default: t = static_cast<double>(x + y) / (2.0 * (size - 1)); break;
            }
            std::uint8_t* px = img.at(x, y);
            for (int c = 0; c < 3; ++c)
                px[c] = static_cast<std::uint8_t>(
                    std::lround((1 - t) * c0[c] + t * c1[c]));
        }
    }

    const int n_shapes = rng.next_int(5, 9);
    for (int s = 0; s < n_shapes; ++s) {
        std::uint8_t col[3];
        for (int c = 0; c < 3; ++c)
            col[c] = static_cast<std::uint8_t>(rng.next_int(0, 255));
        const bool circle = rng.next_bool(0.5);
        const int cx = rng.next_int(0, static_cast<int>(size) - 1);
        const int cy = rng.next_int(0, static_cast<int>(size) - 1);
        const int r = rng.next_int(static_cast<int>(size) / 8, static_cast<int>(size) / 3);
        for (int y = std::max(0, cy - r); y <= std::min(static_cast<int>(size) - 1, cy + r); ++y) {
            for (int x = std::max(0, cx - r); x <= std::min(static_cast<int>(size) - 1, cx + r); ++x) {
                if (circle) {
                    const int dx = x - cx, dy = y - cy;
                    if (dx * dx + dy * dy > r * r) continue;
                }
                std::uint8_t* px = img.at(static_cast<std::uint32_t>(x),
                                          static_cast<std::uint32_t>(y));
                px[0] = col[0];
                px[1] = col[1];
                px[2] = col[2];
            }
        }
    }

    for (auto& px : img.pixels) {
        const int noise = rng.next_int(-10, 10);
        px = static_cast<std::uint8_t>(std::clamp(static_cast<int>(px) + noise, 0, 255));
    }
    return img;
}

}  // namespace

SyntheticDataset make_synthetic_dataset(std::uint32_t n_refs,
                                        std::uint32_t n_pos_queries,
                                        std::uint32_t n_distractors,
                                        Rng64 seed,
                                        std::uint32_t image_size) {
    if (n_pos_queries > n_refs)
        throw ArgumentError("n_pos_queries exceeds n_refs");
    if (image_size < 8) throw ArgumentError("image_size must be >= 8");

    SyntheticDataset ds;
    ds.refs.reserve(n_refs);
    for (std::uint32_t k = 0; k < n_refs; ++k)
        ds.refs.emplace_back("R" + std::to_string(k), procedural_image(image_size, seed));

    // Positive query k copies reference k through the augment chain.
    for (std::uint32_t k = 0; k < n_pos_queries; ++k) {
        const std::string qid = "Q" + std::to_string(k);
        auto [q, rec] = augment(ds.refs[k].second, Rng64(seed.next_u64()));
        if (rec.overlay) ds.overlay_query_ids.push_back(qid);
        ds.queries.emplace_back(qid, std::move(q));
        ds.query_records.push_back(rec);
        ds.gt.emplace_back(qid, ds.refs[k].first);
    }

    for (std::uint32_t k = 0; k < n_distractors; ++k)
        ds.queries.emplace_back("Q" + std::to_string(n_pos_queries + k),
                                procedural_image(image_size, seed));
    return ds;
}

}  // namespace isc
