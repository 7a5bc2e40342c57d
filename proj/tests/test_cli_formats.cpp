#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "isc/descriptor.hpp"
#include "isc/pipeline.hpp"

using namespace isc;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name)
        : path((std::filesystem::temp_directory_path() / name).string()) {}
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("format_double round-trips") {
    Rng64 rng(1);
    for (int i = 0; i < 200; ++i) {
        const double v = rng.next_range(-1e3, 1e3);
        CHECK(parse_double(format_double(v)) == v);
    }
    CHECK(format_double(0.5) == "0.5");
    CHECK_THROWS_AS(parse_double("abc"), FormatError);
    CHECK_THROWS_AS(parse_double("1.5x"), FormatError);
}

TEST_CASE("fnv1a64 known vector") {
    // FNV-1a of empty input is the offset basis.
    CHECK(fnv1a64({}) == 0xCBF29CE484222325ULL);
    CHECK(fnv1a64({'a'}) == 0xAF63DC4C8601EC8CULL);
}

TEST_CASE("descriptor file round-trip") {
    TempFile tmp("test.iscd");
    std::vector<DescriptorRecord> records;
    Rng64 rng(2);
    for (int i = 0; i < 6; ++i) {
        DescriptorRecord r;
        r.image_id = "img" + std::to_string(i);
        r.view_code = static_cast<std::uint8_t>(i == 5 ? 255 : i);
        std::vector<double> v(8);
        double sq = 0;
        for (auto& x : v) {
            x = rng.next_range(-1.0, 1.0);
            sq += x * x;
        }
        for (auto& x : v) x /= std::sqrt(sq);
        r.descriptor = {v};
        records.push_back(std::move(r));
    }
    save_descriptors(tmp.path, 8, records);
    std::uint32_t dim = 0;
    const auto loaded = load_descriptors(tmp.path, &dim);
    CHECK(dim == 8);
    REQUIRE(loaded.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(loaded[i].image_id == records[i].image_id);
        CHECK(loaded[i].view_code == records[i].view_code);
        for (std::size_t d = 0; d < 8; ++d)
            CHECK(loaded[i].descriptor.values[d] ==
                  doctest::Approx(records[i].descriptor.values[d]).epsilon(1e-6));
    }
}

TEST_CASE("descriptor file rejects foreign bytes") {
    TempFile tmp("bogus.iscd");
    write_text_file(tmp.path, "not a descriptor file");
    CHECK_THROWS_AS(load_descriptors(tmp.path), FormatError);
}

TEST_CASE("projector file round-trip") {
    TempFile tmp("test.iscp");
    const auto p = random_projector(4, 6, Rng64(3));
    save_projector(tmp.path, p);
    const auto loaded = load_projector(tmp.path);
    CHECK(loaded.out_dim == 4);
    CHECK(loaded.in_dim == 6);
    for (std::size_t i = 0; i < p.weights.size(); ++i)
        CHECK(loaded.weights[i] == doctest::Approx(p.weights[i]).epsilon(1e-6));
}

TEST_CASE("candidates CSV round-trip") {
    TempFile tmp("cands.csv");
    const std::vector<CandidatePair> cands{
        {"Q0", "R1", 0.875, kMethodI},
        {"Q0", "R2", 0.5, kMethodI | kMethodII | kMethodIII},
        {"Q1", "R0", -0.25, kMethodII},
    };
    write_candidates_csv(tmp.path, cands);
    CHECK(read_candidates_csv(tmp.path) == cands);
}

TEST_CASE("submission CSV round-trip") {
    TempFile tmp("sub.csv");
    const std::vector<MatchPrediction> preds{{"Q0", "R1", 0.875}, {"Q1", "R0", 0.1}};
    write_submission_csv(tmp.path, preds);
    CHECK(read_submission_csv(tmp.path) == preds);
}

TEST_CASE("gt CSV round-trip and header validation") {
    TempFile tmp("gt.csv");
    write_gt_csv(tmp.path, {{"Q0", "R0"}, {"Q1", "R4"}});
    const auto gt = read_gt_csv(tmp.path);
    CHECK(gt.total_positives() == 2);
    CHECK(gt.contains("Q0", "R0"));
    CHECK_FALSE(gt.contains("Q0", "R1"));

    write_text_file(tmp.path, "wrong,header\nQ0,R0\n");
    CHECK_THROWS_AS(read_gt_csv(tmp.path), FormatError);
}
