#include <cstring>
#include <fstream>

#include "isc/descriptor.hpp"
#include "isc/errors.hpp"
#include "isc/learning.hpp"

// Binary readers/writers for the ISCD / ISCP / ISCM formats. All
// multi-byte values are little-endian; floats are IEEE-754 f32.

namespace isc {

namespace {

void put_bytes(std::ostream& os, const void* data, std::size_t n) {
    os.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

template <typename T>
void put_le(std::ostream& os, T v) {
    unsigned char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i)
        buf[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xFF);
    put_bytes(os, buf, sizeof(T));
}

void put_f32(std::ostream& os, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_le<std::uint32_t>(os, bits);
}

template <typename T>
T get_le(std::istream& is) {
    unsigned char buf[sizeof(T)];
    is.read(reinterpret_cast<char*>(buf), sizeof(T));
    if (!is) throw FormatError("unexpected end of file");
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
        v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return static_cast<T>(v);
}

float get_f32(std::istream& is) {
    const std::uint32_t bits = get_le<std::uint32_t>(is);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

void check_magic(std::istream& is, const char expected[4], const std::string& what) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, expected, 4) != 0)
        throw FormatError("bad magic, not a " + what + " file");
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + path + " for writing");
    return f;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path);
    return f;
}

}  // namespace

void save_descriptors(const std::string& path, std::uint32_t dim,
                      const std::vector<DescriptorRecord>& records) {
    auto f = open_out(path);
    put_bytes(f, "ISCD", 4);
    put_le<std::uint32_t>(f, 1);
    put_le<std::uint32_t>(f, dim);
    put_le<std::uint64_t>(f, records.size());
    for (const auto& r : records) {
        if (r.descriptor.dim() != dim)
            throw ArgumentError("descriptor dimension mismatch in " + r.image_id);
        if (r.image_id.size() > 0xFFFF)
            throw ArgumentError("image id too long");
        put_le<std::uint16_t>(f, static_cast<std::uint16_t>(r.image_id.size()));
        put_bytes(f, r.image_id.data(), r.image_id.size());
        put_le<std::uint8_t>(f, r.view_code);
        for (double v : r.descriptor.values) put_f32(f, static_cast<float>(v));
    }
    if (!f) throw IoError("write failed: " + path);
}

std::vector<DescriptorRecord> load_descriptors(const std::string& path,
                                               std::uint32_t* dim_out) {
    auto f = open_in(path);
    check_magic(f, "ISCD", "descriptor");
    const auto version = get_le<std::uint32_t>(f);
    if (version != 1) throw FormatError("unsupported ISCD version");
    const auto dim = get_le<std::uint32_t>(f);
    const auto count = get_le<std::uint64_t>(f);
    if (dim_out) *dim_out = dim;
    std::vector<DescriptorRecord> records;
    records.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        DescriptorRecord r;
        const auto len = get_le<std::uint16_t>(f);
        r.image_id.resize(len);
        f.read(r.image_id.data(), len);
        if (!f) throw FormatError("unexpected end of file");
        r.view_code = get_le<std::uint8_t>(f);
        r.descriptor.values.resize(dim);
        for (std::uint32_t d = 0; d < dim; ++d)
            r.descriptor.values[d] = get_f32(f);
        records.push_back(std::move(r));
    }
    return records;
}

void save_projector(const std::string& path, const Projector& p) {
    auto f = open_out(path);
    put_bytes(f, "ISCP", 4);
    put_le<std::uint32_t>(f, 1);
    put_le<std::uint32_t>(f, static_cast<std::uint32_t>(p.out_dim));
    put_le<std::uint32_t>(f, static_cast<std::uint32_t>(p.in_dim));
    for (double w : p.weights) put_f32(f, static_cast<float>(w));
    if (!f) throw IoError("write failed: " + path);
}

Projector load_projector(const std::string& path) {
    auto f = open_in(path);
    check_magic(f, "ISCP", "projector");
    if (get_le<std::uint32_t>(f) != 1) throw FormatError("unsupported ISCP version");
    Projector p;
    p.out_dim = get_le<std::uint32_t>(f);
    p.in_dim = get_le<std::uint32_t>(f);
    p.weights.resize(p.out_dim * p.in_dim);
    for (auto& w : p.weights) w = get_f32(f);
    return p;
}

void save_matcher(const std::string& path, const TinyMatcherParams& params) {
    auto f = open_out(path);
    put_bytes(f, "ISCM", 4);
    put_le<std::uint32_t>(f, 1);
    const auto& cfg = params.config;
    put_le<std::uint32_t>(f, cfg.in_w);
    put_le<std::uint32_t>(f, cfg.in_h);
    put_le<std::uint32_t>(f, cfg.patch);
    put_le<std::uint32_t>(f, cfg.d_model);
    put_le<std::uint32_t>(f, cfg.hidden);
    for (const auto& [name, block] : params.blocks()) {
        (void)name;
        for (double w : *block) put_f32(f, static_cast<float>(w));
    }
    if (!f) throw IoError("write failed: " + path);
}

TinyMatcherParams load_matcher(const std::string& path) {
    auto f = open_in(path);
    check_magic(f, "ISCM", "matcher");
    if (get_le<std::uint32_t>(f) != 1) throw FormatError("unsupported ISCM version");
    MatcherConfig cfg;
    cfg.in_w = get_le<std::uint32_t>(f);
    cfg.in_h = get_le<std::uint32_t>(f);
    cfg.patch = get_le<std::uint32_t>(f);
    cfg.d_model = get_le<std::uint32_t>(f);
    cfg.hidden = get_le<std::uint32_t>(f);
    if (cfg.patch == 0 || cfg.in_w % cfg.patch != 0 || cfg.in_h % cfg.patch != 0)
        throw FormatError("inconsistent matcher config");
    TinyMatcherParams params = TinyMatcherParams::zeros(cfg);
    for (auto& [name, block] : params.blocks()) {
        (void)name;
        for (auto& w : *block) w = get_f32(f);
    }
    return params;
}

}  // namespace isc
