#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "isc/errors.hpp"

namespace isc {

struct MatchPrediction {
    std::string query_id;
    std::string ref_id;
    double score = 0.0;

    bool operator==(const MatchPrediction&) const = default;
};

// True (query, reference) pairs; each query appears at most once.
// Queries absent from the set are distractors.
class GroundTruth {
  public:
    static GroundTruth from_pairs(
        const std::vector<std::pair<std::string, std::string>>& pairs);

    std::size_t total_positives() const { return pairs_.size(); }
    bool contains(const std::string& query_id, const std::string& ref_id) const;
    const std::map<std::string, std::string>& pairs() const { return pairs_; }

  private:
    std::map<std::string, std::string> pairs_;  // query_id -> ref_id
};

struct PRPoint {
    std::size_t rank = 0;
    double precision = 0.0;
    double recall = 0.0;
    double score = 0.0;
};

// Micro-average precision: predictions pooled and sorted by
// (score desc, query_id asc, ref_id asc); AP = sum_n (R_n - R_{n-1}) P_n
// with P_n = correct(n)/n, R_n = correct(n)/|gt|, no interpolation.
double micro_average_precision(const std::vector<MatchPrediction>& preds,
                               const GroundTruth& gt);

// One point per rank under the same ordering; summing (dR * P) over the
// curve reproduces micro_average_precision.
std::vector<PRPoint> pr_curve(const std::vector<MatchPrediction>& preds,
                              const GroundTruth& gt);

// Independent O(M^2) recomputation: per threshold under the documented
// total order, precision and recall are recounted from scratch.
double oracle_ap(const std::vector<MatchPrediction>& preds, const GroundTruth& gt);

}  // namespace isc
