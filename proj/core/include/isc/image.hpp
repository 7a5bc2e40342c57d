#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "isc/errors.hpp"
#include "isc/rng.hpp"

namespace isc {

// Row-major RGB, 8 bits per channel.
struct Image {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<std::uint8_t> pixels;  // width * height * 3

    Image() = default;
    Image(std::uint32_t w, std::uint32_t h)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, 0) {}

    std::uint8_t* at(std::uint32_t x, std::uint32_t y) {
        return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
    }
    const std::uint8_t* at(std::uint32_t x, std::uint32_t y) const {
        return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
    }

    bool operator==(const Image&) const = default;
};

// A view is either the full image, one cell of a g x g grid (row-major),
// or the central half-size crop. The wire code is:
//   0 = Full, 1..g^2 = grid cells row-major, 255 = Center.
struct ViewKind {
    enum class Tag : std::uint8_t { Full, Crop, Center };
    Tag tag = Tag::Full;
    std::uint32_t row = 0;
    std::uint32_t col = 0;
    std::uint32_t grid = 0;

    static ViewKind full() { return {}; }
    static ViewKind center() { return {Tag::Center, 0, 0, 0}; }
    static ViewKind crop(std::uint32_t r, std::uint32_t c, std::uint32_t g) {
        return {Tag::Crop, r, c, g};
    }

    std::uint8_t code() const {
        switch (tag) {
            case Tag::Full: return 0;
            case Tag::Center: return 255;
            case Tag::Crop: return static_cast<std::uint8_t>(1 + row * grid + col);
        }
        return 0;
    }

    bool is_full() const { return tag == Tag::Full; }
    std::string to_string() const;

    bool operator==(const ViewKind&) const = default;
};

// -- PPM P6 ------------------------------------------------------------

// Decodes a binary P6 file with maxval 255. Throws FormatError on a bad
// header or magic, and on truncated pixel data.
Image read_ppm(const std::vector<std::uint8_t>& bytes);

// Canonical encoding: "P6\n<w> <h>\n255\n" followed by raw RGB.
std::vector<std::uint8_t> write_ppm(const Image& img);

Image load_ppm_file(const std::string& path);
void save_ppm_file(const std::string& path, const Image& img);

// -- Views -------------------------------------------------------------

// Fixed order: Full, then the g x g non-overlapping cells row-major with
// boundaries at floor(k*dim/g), then the central half-width x half-height
// crop. Output count is g^2 + 2.
std::vector<std::pair<ViewKind, Image>> crop_views(const Image& img, std::uint32_t grid);

Image crop(const Image& img, std::uint32_t x0, std::uint32_t y0,
           std::uint32_t w, std::uint32_t h);

// Bilinear with half-pixel centers; per-channel rounding floor(v + 0.5).
Image resize_bilinear(const Image& img, std::uint32_t w, std::uint32_t h);

// -- Augmentation ------------------------------------------------------

struct AugmentRecord {
    bool flipped = false;
    bool cropped = false;
    std::uint32_t crop_x = 0, crop_y = 0, crop_w = 0, crop_h = 0;
    int brightness = 0;
    int jitter[3] = {0, 0, 0};
    bool overlay = false;          // "partial use": pasted onto noise
    double overlay_scale = 0.0;
    std::uint32_t overlay_x = 0, overlay_y = 0;

    std::string to_string() const;
    bool operator==(const AugmentRecord&) const = default;
};

// Seeded augmentation chain: horizontal flip (p=0.5), random crop
// (60-100% area) resized back, brightness shift (+-40, clamped), channel
// jitter (+-20), and with p=0.3 a paste of a 30-70%-scale copy onto a
// seeded noise background. Pure function of (img, rng state); output has
// the input's dimensions.
std::pair<Image, AugmentRecord> augment(const Image& img, Rng64 rng);

// -- Synthetic dataset -------------------------------------------------

struct SyntheticDataset {
    std::vector<std::pair<std::string, Image>> refs;     // id "R<k>"
    std::vector<std::pair<std::string, Image>> queries;  // id "Q<k>"
    std::vector<std::pair<std::string, std::string>> gt; // (query_id, ref_id)
    std::vector<AugmentRecord> query_records;            // parallel to positives
    std::vector<std::string> overlay_query_ids;
};

// Procedural stand-in for a real catalog: seeded gradient + shapes +
// noise references, positive queries produced by augment() on their
// reference, and fresh procedural distractors with no ground truth.
SyntheticDataset make_synthetic_dataset(std::uint32_t n_refs,
                                        std::uint32_t n_pos_queries,
                                        std::uint32_t n_distractors,
                                        Rng64 seed,
                                        std::uint32_t image_size = 64);

}  // namespace isc
