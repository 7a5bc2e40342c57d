#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "isc/eval.hpp"
#include "isc/index.hpp"
#include "isc/learning.hpp"

namespace isc {

// Candidate generation methods:
//   I   full query descriptor vs full reference index
//   II  partial query descriptors vs full reference index
//   III full query descriptor vs partial reference index
enum MethodBit : unsigned { kMethodI = 1, kMethodII = 2, kMethodIII = 4 };

struct CandidatePair {
    std::string query_id;
    std::string ref_id;
    double retrieval_similarity = 0.0;  // max over contributing hits
    unsigned methods = 0;               // MethodBit union, non-empty

    std::string methods_string() const;  // e.g. "I|II"
    bool operator==(const CandidatePair&) const = default;
};

unsigned parse_methods(const std::string& s);

// One query's descriptors: exactly one full view plus partial views.
struct QueryDescriptors {
    std::string query_id;
    Descriptor full;
    std::vector<Descriptor> partials;
};

// Union of the three retrieval methods per query, keyed by (query, ref).
// Reference view identity is discarded after aggregation. Output sorted
// by (query_id, ref_id).
std::vector<CandidatePair> generate_candidates(
    const std::vector<QueryDescriptors>& queries, const Index& ref_full_index,
    const Index& ref_partial_index, std::size_t k, unsigned threads = 1);

using PairScorer = std::function<double(const CandidatePair&)>;

PairScorer baseline_scorer();

// sigmoid(matcher logit) over concat_pair(query, reference) resized to
// the matcher's input. Throws LookupError on unresolvable ids.
PairScorer matcher_scorer(const TinyMatcherParams& params,
                          const std::map<std::string, Image>& query_images,
                          const std::map<std::string, Image>& ref_images);

std::vector<MatchPrediction> score_candidates(const std::vector<CandidatePair>& cands,
                                              const PairScorer& scorer);

// One prediction per distinct query: the maximum score, ties broken by
// ref_id ascending.
std::vector<MatchPrediction> select_best_per_query(
    const std::vector<MatchPrediction>& preds);

// -- End-to-end run ----------------------------------------------------

struct PipelineConfig {
    std::size_t k_per_method = 10;
    std::uint32_t grid = 2;
    std::size_t dim = 256;
    std::uint32_t feature_grid = 4;
    std::string scorer = "matcher";  // "matcher" | "baseline"
    bool best_only = true;
    unsigned threads = 0;  // 0 = hardware concurrency
    std::uint64_t seed = 1;

    // projector training; train_projector = false uses a seeded random one
    bool train_projector = true;
    std::uint32_t projector_epochs = 12;
    double projector_lr = 0.5;
    double tau = 0.1;
    std::size_t batch_pairs = 8;

    // matcher training
    MatcherConfig matcher;
    std::uint32_t matcher_epochs = 30;
    double matcher_lr = 0.05;
};

// Parses plain-text key=value lines; '#' starts a comment. Unknown keys
// are errors.
PipelineConfig parse_pipeline_config(const std::string& text);

struct RunReport {
    std::vector<std::pair<std::string, std::string>> entries;
    void add(const std::string& key, const std::string& value) {
        entries.emplace_back(key, value);
    }
    std::string to_text() const;
};

struct PipelineResult {
    std::vector<MatchPrediction> predictions;
    double micro_ap = 0.0;
    RunReport report;
};

// Runs extract -> index -> candidates -> train -> rerank -> evaluate over
// a dataset directory (refs/, queries/, gt.csv). All artifacts (ISCD
// descriptors, candidates CSV, weight files, submission CSV, report,
// manifest) are written under out_dir.
PipelineResult run_pipeline(const PipelineConfig& config,
                            const std::string& dataset_dir,
                            const std::string& out_dir);

// -- Shared file helpers -----------------------------------------------

// Shortest round-trip decimal representation.
std::string format_double(double v);
double parse_double(const std::string& s);

std::uint64_t fnv1a64(const std::vector<std::uint8_t>& bytes);
std::uint64_t file_checksum(const std::string& path);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

void write_candidates_csv(const std::string& path,
                          const std::vector<CandidatePair>& cands);
std::vector<CandidatePair> read_candidates_csv(const std::string& path);

void write_submission_csv(const std::string& path,
                          const std::vector<MatchPrediction>& preds);
std::vector<MatchPrediction> read_submission_csv(const std::string& path);

void write_gt_csv(const std::string& path,
                  const std::vector<std::pair<std::string, std::string>>& pairs);
GroundTruth read_gt_csv(const std::string& path);

// Descriptor extraction over every (image, view): full + grid cells +
// center, embedded through the projector.
std::vector<DescriptorRecord> extract_descriptors(
    const std::vector<std::pair<std::string, Image>>& images,
    const Projector& projector, std::uint32_t grid, std::uint32_t feature_grid);

// Splits records into per-query view groups (full + partials per id).
std::vector<QueryDescriptors> group_query_descriptors(
    const std::vector<DescriptorRecord>& records);

// Splits reference records into full/partial indexes by view code.
std::pair<Index, Index> build_ref_indexes(const std::vector<DescriptorRecord>& records);

}  // namespace isc
