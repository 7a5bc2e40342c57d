#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "isc/eval.hpp"
#include "isc/rng.hpp"

using namespace isc;

namespace {

GroundTruth gt_of(std::vector<std::pair<std::string, std::string>> pairs) {
    return GroundTruth::from_pairs(pairs);
}

// Random prediction set over a random ground truth; distinct scores.
struct RandomCase {
    std::vector<MatchPrediction> preds;
    GroundTruth gt;
};

RandomCase random_case(Rng64& rng, int n_preds) {
    std::vector<std::pair<std::string, std::string>> gt_pairs;
    const int n_gt = rng.next_int(1, std::max(1, n_preds / 2));
    for (int i = 0; i < n_gt; ++i)
        gt_pairs.emplace_back("q" + std::to_string(i), "r" + std::to_string(rng.next_int(0, 20)));
    RandomCase rc{{}, gt_of(gt_pairs)};
    for (int i = 0; i < n_preds; ++i) {
        const std::string q = "q" + std::to_string(rng.next_int(0, n_gt + 5));
        const std::string r = "r" + std::to_string(rng.next_int(0, 25));
        const bool dup = std::any_of(rc.preds.begin(), rc.preds.end(), [&](const auto& p) {
            return p.query_id == q && p.ref_id == r;
        });
        if (dup) continue;
        rc.preds.push_back({q, r, rng.next_double()});
    }
    return rc;
}

}  // namespace

TEST_CASE("single prediction cases") {
    const auto gt = gt_of({{"q0", "r0"}});
    CHECK(micro_average_precision({{"q0", "r0", 0.5}}, gt) == 1.0);
    CHECK(micro_average_precision({{"q0", "r1", 0.5}}, gt) == 0.0);
}

TEST_CASE("hand-computed three-prediction case") {
    const auto gt = gt_of({{"q0", "r0"}, {"q1", "r1"}});
    const std::vector<MatchPrediction> preds{
        {"q0", "r0", 0.9},  // correct
        {"q2", "r5", 0.8},  // wrong
        {"q1", "r1", 0.7},  // correct
    };
    // 0.5*1 + 0*0.5 + 0.5*(2/3)
    CHECK(micro_average_precision(preds, gt) ==
          doctest::Approx(0.8333333333).epsilon(1e-9));
    CHECK(oracle_ap(preds, gt) == doctest::Approx(0.8333333333).epsilon(1e-9));
}

TEST_CASE("validation errors") {
    const auto gt = gt_of({{"q0", "r0"}});
    CHECK_THROWS_AS(micro_average_precision(
                        {{"q0", "r0", 0.5}, {"q0", "r0", 0.4}}, gt),
                    ValidationError);
    CHECK_THROWS_AS(micro_average_precision({{"q0", "r0", 0.5}}, gt_of({})),
                    ArgumentError);
    CHECK_THROWS_AS(gt_of({{"q0", "r0"}, {"q0", "r1"}}), ValidationError);
}

TEST_CASE("micro AP equals oracle on random cases") {
    Rng64 rng(11);
    for (int i = 0; i < 200; ++i) {
        const auto rc = random_case(rng, rng.next_int(5, 60));
        if (rc.preds.empty()) continue;
        CHECK(micro_average_precision(rc.preds, rc.gt) == oracle_ap(rc.preds, rc.gt));
    }
}

TEST_CASE("tie-heavy input agrees under the documented tie rule") {
    const auto gt = gt_of({{"q0", "r0"}, {"q1", "r1"}, {"q2", "r2"}});
    std::vector<MatchPrediction> preds{
        {"q0", "r0", 0.5}, {"q1", "r9", 0.5}, {"q2", "r2", 0.5}, {"q3", "r3", 0.5},
    };
    const double ap = micro_average_precision(preds, gt);
    CHECK(std::abs(ap - oracle_ap(preds, gt)) <= 1e-12);
}

TEST_CASE("pr_curve sums back to AP and tracks counts") {
    const auto gt = gt_of({{"q0", "r0"}});
    SUBCASE("perfect single prediction") {
        const auto curve = pr_curve({{"q0", "r0", 0.7}}, gt);
        REQUIRE(curve.size() == 1);
        CHECK(curve[0].rank == 1);
        CHECK(curve[0].precision == 1.0);
        CHECK(curve[0].recall == 1.0);
        CHECK(curve[0].score == 0.7);
    }
    SUBCASE("all-wrong predictions have zero precision") {
        const auto curve = pr_curve({{"q0", "r5", 0.7}, {"q1", "r6", 0.6}}, gt);
        for (const auto& p : curve) CHECK(p.precision == 0.0);
    }
    SUBCASE("curve sum equals AP on random inputs") {
        Rng64 rng(12);
        for (int i = 0; i < 50; ++i) {
            const auto rc = random_case(rng, 40);
            if (rc.preds.empty()) continue;
            const auto curve = pr_curve(rc.preds, rc.gt);
            double sum = 0, prev_recall = 0;
            for (const auto& p : curve) {
                sum += (p.recall - prev_recall) * p.precision;
                prev_recall = p.recall;
            }
            CHECK(sum == doctest::Approx(micro_average_precision(rc.preds, rc.gt))
                             .epsilon(1e-12));
        }
    }
}

TEST_CASE("AP is invariant under strictly monotone score transforms") {
    Rng64 rng(13);
    for (int i = 0; i < 100; ++i) {
        const auto rc = random_case(rng, 30);
        if (rc.preds.empty()) continue;
        auto transformed = rc.preds;
        for (auto& p : transformed) p.score = 2.0 * p.score + 5.0;
        CHECK(micro_average_precision(rc.preds, rc.gt) ==
              micro_average_precision(transformed, rc.gt));
    }
}

TEST_CASE("removing predictions moves AP the right way") {
    Rng64 rng(14);
    int checked = 0;
    for (int i = 0; i < 100 && checked < 60; ++i) {
        const auto rc = random_case(rng, 30);
        if (rc.preds.size() < 2) continue;
        const double base = micro_average_precision(rc.preds, rc.gt);
        const std::size_t drop =
            static_cast<std::size_t>(rng.next_int(0, static_cast<int>(rc.preds.size()) - 1));
        const bool was_correct =
            rc.gt.contains(rc.preds[drop].query_id, rc.preds[drop].ref_id);
        auto fewer = rc.preds;
        fewer.erase(fewer.begin() + static_cast<std::ptrdiff_t>(drop));
        const double ap = micro_average_precision(fewer, rc.gt);
        if (was_correct) CHECK(ap <= base + 1e-12);
        else CHECK(ap >= base - 1e-12);
        ++checked;
    }
    CHECK(checked >= 50);
}

TEST_CASE("recall denominator is the gt size, not the prediction count") {
    // Distractor queries with no prediction cost nothing.
    const auto gt = gt_of({{"q0", "r0"}, {"q1", "r1"}});
    const double ap = micro_average_precision({{"q0", "r0", 0.9}}, gt);
    CHECK(ap == doctest::Approx(0.5).epsilon(1e-12));  // recall caps at 1/2
}

TEST_CASE("AP = 1 iff all correct precede all wrong and gt is covered") {
    const auto gt = gt_of({{"q0", "r0"}, {"q1", "r1"}});
    CHECK(micro_average_precision(
              {{"q0", "r0", 0.9}, {"q1", "r1", 0.8}, {"q5", "r5", 0.1}}, gt) == 1.0);
    CHECK(micro_average_precision(
              {{"q0", "r0", 0.9}, {"q5", "r5", 0.85}, {"q1", "r1", 0.8}}, gt) < 1.0);
}
