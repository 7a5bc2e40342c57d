#include "isc/image.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace isc {

std::string ViewKind::to_string() const {
    switch (tag) {
        case Tag::Full: return "full";
        case Tag::Center: return "center";
        case Tag::Crop:
            return "cell" + std::to_string(row) + "_" + std::to_string(col) +
                   "g" + std::to_string(grid);
    }
    return "?";
}

namespace {

// Reads one whitespace-delimited unsigned decimal token.
std::uint32_t read_header_uint(const std::vector<std::uint8_t>& bytes, std::size_t& pos) {
    while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
    if (pos >= bytes.size() || !std::isdigit(bytes[pos]))
        throw FormatError("ppm: expected integer in header");
    std::uint64_t v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
        v = v * 10 + (bytes[pos] - '0');
        if (v > 0xFFFFFFFFULL) throw FormatError("ppm: header value out of range");
        ++pos;
    }
    return static_cast<std::uint32_t>(v);
}

}  // namespace

Image read_ppm(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6')
        throw FormatError("ppm: bad magic, expected P6");
    std::size_t pos = 2;
    const std::uint32_t w = read_header_uint(bytes, pos);
    const std::uint32_t h = read_header_uint(bytes, pos);
    const std::uint32_t maxval = read_header_uint(bytes, pos);
    if (w < 1 || h < 1) throw FormatError("ppm: zero dimension");
    if (maxval != 255) throw FormatError("ppm: only maxval 255 supported");
    if (pos >= bytes.size() || !std::isspace(bytes[pos]))
        throw FormatError("ppm: missing whitespace after maxval");
    ++pos;  // single whitespace byte separates header from payload
    const std::size_t need = static_cast<std::size_t>(w) * h * 3;
    if (bytes.size() - pos < need)
        throw FormatError("ppm: truncated pixel data");
    Image img(w, h);
    std::copy(bytes.begin() + pos, bytes.begin() + pos + need, img.pixels.begin());
    return img;
}

std::vector<std::uint8_t> write_ppm(const Image& img) {
    char header[64];
    const int n = std::snprintf(header, sizeof(header), "P6\n%u %u\n255\n",
                                img.width, img.height);
    std::vector<std::uint8_t> out;
    out.reserve(static_cast<std::size_t>(n) + img.pixels.size());
    out.insert(out.end(), header, header + n);
    out.insert(out.end(), img.pixels.begin(), img.pixels.end());
    return out;
}

Image load_ppm_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    return read_ppm(bytes);
}

void save_ppm_file(const std::string& path, const Image& img) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + path + " for writing");
    const auto bytes = write_ppm(img);
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("write failed: " + path);
}

Image crop(const Image& img, std::uint32_t x0, std::uint32_t y0,
           std::uint32_t w, std::uint32_t h) {
    if (x0 + w > img.width || y0 + h > img.height)
        throw ArgumentError("crop rectangle out of bounds");
    Image out(w, h);
    for (std::uint32_t y = 0; y < h; ++y) {
        const std::uint8_t* src = img.at(x0, y0 + y);
        std::copy(src, src + static_cast<std::size_t>(w) * 3, out.at(0, y));
    }
    return out;
}

std::vector<std::pair<ViewKind, Image>> crop_views(const Image& img, std::uint32_t grid) {
    if (grid < 2) throw ArgumentError("grid must be >= 2");
    if (img.width < grid || img.height < grid)
        throw ArgumentError("image smaller than view grid");
    std::vector<std::pair<ViewKind, Image>> views;
    views.reserve(static_cast<std::size_t>(grid) * grid + 2);
    views.emplace_back(ViewKind::full(), img);
    for (std::uint32_t r = 0; r < grid; ++r) {
        const std::uint32_t y0 = r * img.height / grid;
        const std::uint32_t y1 = (r + 1) * img.height / grid;
        for (std::uint32_t c = 0; c < grid; ++c) {
            const std::uint32_t x0 = c * img.width / grid;
            const std::uint32_t x1 = (c + 1) * img.width / grid;
            views.emplace_back(ViewKind::crop(r, c, grid),
                               crop(img, x0, y0, x1 - x0, y1 - y0));
        }
    }
    const std::uint32_t cw = std::max(1u, img.width / 2);
    const std::uint32_t ch = std::max(1u, img.height / 2);
    views.emplace_back(ViewKind::center(),
                       crop(img, (img.width - cw) / 2, (img.height - ch) / 2, cw, ch));
    return views;
}

Image resize_bilinear(const Image& img, std::uint32_t w, std::uint32_t h) {
    if (w < 1 || h < 1) throw ArgumentError("resize target must be >= 1x1");
    if (w == img.width && h == img.height) return img;
    Image out(w, h);
    const double sx = static_cast<double>(img.width) / w;
    const double sy = static_cast<double>(img.height) / h;
    for (std::uint32_t y = 0; y < h; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        if (fy < 0) fy = 0;
        if (fy > img.height - 1) fy = img.height - 1;
        const std::uint32_t y0 = static_cast<std::uint32_t>(fy);
        const std::uint32_t y1 = std::min(y0 + 1, img.height - 1);
        const double wy = fy - y0;
        for (std::uint32_t x = 0; x < w; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            if (fx < 0) fx = 0;
            if (fx > img.width - 1) fx = img.width - 1;
            const std::uint32_t x0 = static_cast<std::uint32_t>(fx);
            const std::uint32_t x1 = std::min(x0 + 1, img.width - 1);
            const double wx = fx - x0;
            const std::uint8_t* p00 = img.at(x0, y0);
            const std::uint8_t* p10 = img.at(x1, y0);
            const std::uint8_t* p01 = img.at(x0, y1);
            const std::uint8_t* p11 = img.at(x1, y1);
            std::uint8_t* dst = out.at(x, y);
            for (int c = 0; c < 3; ++c) {
                const double v = (1 - wy) * ((1 - wx) * p00[c] + wx * p10[c]) +
                                 wy * ((1 - wx) * p01[c] + wx * p11[c]);
                dst[c] = static_cast<std::uint8_t>(std::floor(v + 0.5));
            }
        }
    }
    return out;
}

}  // namespace isc
