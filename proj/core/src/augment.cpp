#include <algorithm>
#include <cmath>
#include <sstream>

#include "isc/image.hpp"

namespace isc {

std::string AugmentRecord::to_string() const {
    std::ostringstream os;
    os << "flip=" << (flipped ? 1 : 0);
    if (cropped)
        os << " crop=" << crop_x << "," << crop_y << "," << crop_w << "," << crop_h;
    os << " brightness=" << brightness
       << " jitter=" << jitter[0] << "," << jitter[1] << "," << jitter[2]
       << " overlay=" << (overlay ? 1 : 0);
    if (overlay)
        os << " overlay_scale=" << overlay_scale
           << " overlay_at=" << overlay_x << "," << overlay_y;
    return os.str();
}

namespace {

Image flip_horizontal(const Image& img) {
    Image out(img.width, img.height);
    for (std::uint32_t y = 0; y < img.height; ++y)
        for (std::uint32_t x = 0; x < img.width; ++x) {
            const std::uint8_t* src = img.at(img.width - 1 - x, y);
            std::uint8_t* dst = out.at(x, y);
            dst[0] = src[0];
            dst[1] = src[1];
            dst[2] = src[2];
        }
    return out;
}

std::uint8_t clamp_u8(int v) {
    return static_cast<std::uint8_t>(std::clamp(v, 0, 255));
}

}  // namespace

std::pair<Image, AugmentRecord> augment(const Image& img, Rng64 rng) {
    if (img.width < 8 || img.height < 8)
        throw ArgumentError("augment requires an image of at least 8x8");

    AugmentRecord rec;
    Image out = img;

    rec.flipped = rng.next_bool(0.5);
    if (rec.flipped) out = flip_horizontal(out);

    // Random crop of 60-100% area, resized back to the input dimensions.
    {
        const double area = rng.next_range(0.6, 1.0);
        const double scale = std::sqrt(area);
        std::uint32_t cw = std::max<std::uint32_t>(
            1, static_cast<std::uint32_t>(std::lround(scale * img.width)));
        std::uint32_t ch = std::max<std::uint32_t>(
            1, static_cast<std::uint32_t>(std::lround(scale * img.height)));
        cw = std::min(cw, img.width);
        ch = std::min(ch, img.height);
        const std::uint32_t x0 =
            static_cast<std::uint32_t>(rng.next_int(0, static_cast<int>(img.width - cw)));
        const std::uint32_t y0 =
            static_cast<std::uint32_t>(rng.next_int(0, static_cast<int>(img.height - ch)));
        rec.cropped = true;
        rec.crop_x = x0;
        rec.crop_y = y0;
        rec.crop_w = cw;
        rec.crop_h = ch;
        out = resize_bilinear(crop(out, x0, y0, cw, ch), img.width, img.height);
    }

    rec.brightness = rng.next_int(-40, 40);
    rec.jitter[0] = rng.next_int(-20, 20);
    rec.jitter[1] = rng.next_int(-20, 20);
    rec.jitter[2] = rng.next_int(-20, 20);
    for (std::size_t i = 0; i < out.pixels.size(); ++i) {
        const int c = static_cast<int>(i % 3);
        out.pixels[i] = clamp_u8(static_cast<int>(out.pixels[i]) + rec.brightness +
                                 rec.jitter[c]);
    }

    // Partial use: paste a shrunken copy onto a noise background.
    rec.overlay = rng.next_bool(0.3);
    if (rec.overlay) {
        rec.overlay_scale = rng.next_range(0.3, 0.7);
        const std::uint32_t pw = std::max<std::uint32_t>(
            1, static_cast<std::uint32_t>(std::lround(rec.overlay_scale * img.width)));
        const std::uint32_t ph = std::max<std::uint32_t>(
            1, static_cast<std::uint32_t>(std::lround(rec.overlay_scale * img.height)));
        Image pasted = resize_bilinear(out, pw, ph);
        Image bg(img.width, img.height);
        for (auto& px : bg.pixels)
            px = static_cast<std::uint8_t>(rng.next_int(0, 255));
        rec.overlay_x =
            static_cast<std::uint32_t>(rng.next_int(0, static_cast<int>(img.width - pw)));
        rec.overlay_y =
            static_cast<std::uint32_t>(rng.next_int(0, static_cast<int>(img.height - ph)));
        for (std::uint32_t y = 0; y < ph; ++y) {
            const std::uint8_t* src = pasted.at(0, y);
            std::copy(src, src + static_cast<std::size_t>(pw) * 3,
                      bg.at(rec.overlay_x, rec.overlay_y + y));
        }
        out = std::move(bg);
    }

    return {std::move(out), rec};
}

}  // namespace isc
