#include "isc/eval.hpp"

#include <algorithm>

#include "isc/errors.hpp"

namespace isc {

GroundTruth GroundTruth::from_pairs(
    const std::vector<std::pair<std::string, std::string>>& pairs) {
    GroundTruth gt;
    for (const auto& [q, r] : pairs) {
        if (!gt.pairs_.emplace(q, r).second)
            throw ValidationError("duplicate query in ground truth: " + q);
    }
    return gt;
}

bool GroundTruth::contains(const std::string& query_id, const std::string& ref_id) const {
    const auto it = pairs_.find(query_id);
    return it != pairs_.end() && it->second == ref_id;
}

namespace {

bool pred_before(const MatchPrediction& a, const MatchPrediction& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.query_id != b.query_id) return a.query_id < b.query_id;
    return a.ref_id < b.ref_id;
}

std::vector<MatchPrediction> sorted_and_checked(
    const std::vector<MatchPrediction>& preds, const GroundTruth& gt) {
    if (gt.total_positives() == 0)
        throw ArgumentError("ground truth is empty");
    auto sorted = preds;
    std::sort(sorted.begin(), sorted.end(), pred_before);
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        if (sorted[i].query_id == sorted[i - 1].query_id &&
            sorted[i].ref_id == sorted[i - 1].ref_id)
            throw ValidationError("duplicate prediction pair: " + sorted[i].query_id +
                                  "," + sorted[i].ref_id);
    }
    return sorted;
}

}  // namespace

double micro_average_precision(const std::vector<MatchPrediction>& preds,
                               const GroundTruth& gt) {
    const auto sorted = sorted_and_checked(preds, gt);
    const double positives = static_cast<double>(gt.total_positives());
    double ap = 0.0;
    std::size_t correct = 0;
    for (std::size_t n = 0; n < sorted.size(); ++n) {
        if (gt.contains(sorted[n].query_id, sorted[n].ref_id)) {
            ++correct;
            // Only correct predictions advance recall; dR = 1/|gt|.
            ap += (1.0 / positives) * (static_cast<double>(correct) / (n + 1));
        }
    }
    return ap;
}

std::vector<PRPoint> pr_curve(const std::vector<MatchPrediction>& preds,
                              const GroundTruth& gt) {
    const auto sorted = sorted_and_checked(preds, gt);
    const double positives = static_cast<double>(gt.total_positives());
    std::vector<PRPoint> curve;
    curve.reserve(sorted.size());
    std::size_t correct = 0;
    for (std::size_t n = 0; n < sorted.size(); ++n) {
        if (gt.contains(sorted[n].query_id, sorted[n].ref_id)) ++correct;
        curve.push_back({n + 1,
                         static_cast<double>(correct) / (n + 1),
                         static_cast<double>(correct) / positives,
                         sorted[n].score});
    }
    return curve;
}

double oracle_ap(const std::vector<MatchPrediction>& preds, const GroundTruth& gt) {
    const auto sorted = sorted_and_checked(preds, gt);
    const double positives = static_cast<double>(gt.total_positives());
    auto count_correct = [&](std::size_t n) {
        std::size_t correct = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (gt.contains(sorted[i].query_id, sorted[i].ref_id)) ++correct;
        return correct;
    };
    double ap = 0.0;
    for (std::size_t n = 1; n <= sorted.size(); ++n) {
        // Recount both prefixes from scratch at every threshold.
        const std::size_t correct = count_correct(n);
        const std::size_t prev_correct = count_correct(n - 1);
        const double precision = static_cast<double>(correct) / n;
        const double recall_delta =
            static_cast<double>(correct - prev_correct) / positives;
        ap += recall_delta * precision;
    }
    return ap;
}

}  // namespace isc
