#include "isc/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "isc/errors.hpp"

namespace fs = std::filesystem;

namespace isc {

std::string CandidatePair::methods_string() const {
    std::string s;
    if (methods & kMethodI) s += "I";
    if (methods & kMethodII) s += s.empty() ? "II" : "|II";
    if (methods & kMethodIII) s += s.empty() ? "III" : "|III";
    return s;
}

unsigned parse_methods(const std::string& s) {
    unsigned m = 0;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, '|')) {
        if (tok == "I") m |= kMethodI;
        else if (tok == "II") m |= kMethodII;
        else if (tok == "III") m |= kMethodIII;
        else throw FormatError("unknown method tag: " + tok);
    }
    if (m == 0) throw FormatError("empty methods field");
    return m;
}

std::vector<CandidatePair> generate_candidates(
    const std::vector<QueryDescriptors>& queries, const Index& ref_full_index,
    const Index& ref_partial_index, std::size_t k, unsigned threads) {
    std::vector<CandidatePair> out;
    for (const auto& q : queries) {
        if (q.full.dim() == 0)
            throw ArgumentError("query " + q.query_id + " has no full view");
        std::map<std::string, CandidatePair> per_ref;
        auto absorb = [&](const std::vector<Neighbor>& hits, unsigned method) {
            for (const auto& h : hits) {
                auto [it, inserted] = per_ref.try_emplace(
                    h.image_id,
                    CandidatePair{q.query_id, h.image_id, h.similarity, method});
                if (!inserted) {
                    it->second.methods |= method;
                    it->second.retrieval_similarity =
                        std::max(it->second.retrieval_similarity, h.similarity);
                }
            }
        };
        absorb(ref_full_index.knn(q.full, k, threads), kMethodI);
        for (const auto& part : q.partials)
            absorb(ref_full_index.knn(part, k, threads), kMethodII);
        if (ref_partial_index.size() > 0)
            absorb(ref_partial_index.knn(q.full, k, threads), kMethodIII);
        for (auto& [rid, cand] : per_ref) out.push_back(std::move(cand));
    }
    std::sort(out.begin(), out.end(), [](const CandidatePair& a, const CandidatePair& b) {
        return a.query_id != b.query_id ? a.query_id < b.query_id : a.ref_id < b.ref_id;
    });
    return out;
}

PairScorer baseline_scorer() {
    return [](const CandidatePair& c) { return c.retrieval_similarity; };
}

PairScorer matcher_scorer(const TinyMatcherParams& params,
                          const std::map<std::string, Image>& query_images,
                          const std::map<std::string, Image>& ref_images) {
    const MatcherConfig cfg = params.config;
    return [&params, &query_images, &ref_images, cfg](const CandidatePair& c) {
        const auto qi = query_images.find(c.query_id);
        if (qi == query_images.end())
            throw LookupError("unknown query id: " + c.query_id);
        const auto ri = ref_images.find(c.ref_id);
        if (ri == ref_images.end())
            throw LookupError("unknown reference id: " + c.ref_id);
        const Image pair = concat_pair(qi->second, ri->second, cfg.in_w, cfg.in_h);
        return sigmoid(tiny_matcher_forward(params, pair));
    };
}

std::vector<MatchPrediction> score_candidates(const std::vector<CandidatePair>& cands,
                                              const PairScorer& scorer) {
    std::vector<MatchPrediction> preds;
    preds.reserve(cands.size());
    for (const auto& c : cands)
        preds.push_back({c.query_id, c.ref_id, scorer(c)});
    return preds;
}

std::vector<MatchPrediction> select_best_per_query(
    const std::vector<MatchPrediction>& preds) {
    std::map<std::string, MatchPrediction> best;
    for (const auto& p : preds) {
        auto [it, inserted] = best.try_emplace(p.query_id, p);
        if (!inserted) {
            const auto& cur = it->second;
            if (p.score > cur.score || (p.score == cur.score && p.ref_id < cur.ref_id))
                it->second = p;
        }
    }
    std::vector<MatchPrediction> out;
    out.reserve(best.size());
    for (auto& [qid, p] : best) out.push_back(std::move(p));
    return out;
}

// -- formatting / files ------------------------------------------------

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
    double v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw FormatError("bad number: " + s);
    return v;
}

std::uint64_t fnv1a64(const std::vector<std::uint8_t>& bytes) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::uint64_t file_checksum(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    return fnv1a64(bytes);
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + path + " for writing");
    f << text;
    if (!f) throw IoError("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

namespace {

std::vector<std::vector<std::string>> read_csv(const std::string& path,
                                               const std::string& expected_header,
                                               std::size_t n_cols) {
    std::istringstream is(read_text_file(path));
    std::string line;
    if (!std::getline(is, line) || line != expected_header)
        throw FormatError(path + ": expected header '" + expected_header + "'");
    std::vector<std::vector<std::string>> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != n_cols)
            throw FormatError(path + ": bad row '" + line + "'");
        rows.push_back(std::move(cells));
    }
    return rows;
}

}  // namespace

void write_candidates_csv(const std::string& path,
                          const std::vector<CandidatePair>& cands) {
    std::ostringstream os;
    os << "query_id,reference_id,similarity,methods\n";
    for (const auto& c : cands)
        os << c.query_id << "," << c.ref_id << "," << format_double(c.retrieval_similarity)
           << "," << c.methods_string() << "\n";
    write_text_file(path, os.str());
}

std::vector<CandidatePair> read_candidates_csv(const std::string& path) {
    std::vector<CandidatePair> out;
    for (const auto& row : read_csv(path, "query_id,reference_id,similarity,methods", 4))
        out.push_back({row[0], row[1], parse_double(row[2]), parse_methods(row[3])});
    return out;
}

void write_submission_csv(const std::string& path,
                          const std::vector<MatchPrediction>& preds) {
    std::ostringstream os;
    os << "query_id,reference_id,score\n";
    for (const auto& p : preds)
        os << p.query_id << "," << p.ref_id << "," << format_double(p.score) << "\n";
    write_text_file(path, os.str());
}

std::vector<MatchPrediction> read_submission_csv(const std::string& path) {
    std::vector<MatchPrediction> out;
    for (const auto& row : read_csv(path, "query_id,reference_id,score", 3))
        out.push_back({row[0], row[1], parse_double(row[2])});
    return out;
}

void write_gt_csv(const std::string& path,
                  const std::vector<std::pair<std::string, std::string>>& pairs) {
    std::ostringstream os;
    os << "query_id,reference_id\n";
    for (const auto& [q, r] : pairs) os << q << "," << r << "\n";
    write_text_file(path, os.str());
}

GroundTruth read_gt_csv(const std::string& path) {
    std::vector<std::pair<std::string, std::string>> pairs;
    for (const auto& row : read_csv(path, "query_id,reference_id", 2))
        pairs.emplace_back(row[0], row[1]);
    return GroundTruth::from_pairs(pairs);
}

// -- extraction helpers ------------------------------------------------

std::vector<DescriptorRecord> extract_descriptors(
    const std::vector<std::pair<std::string, Image>>& images,
    const Projector& projector, std::uint32_t grid, std::uint32_t feature_grid) {
    std::vector<DescriptorRecord> records;
    for (const auto& [id, img] : images) {
        for (const auto& [view, view_img] : crop_views(img, grid)) {
            DescriptorRecord rec;
            rec.image_id = id;
            rec.view_code = view.code();
            rec.descriptor = embed(raw_features(view_img, feature_grid), projector);
            records.push_back(std::move(rec));
        }
    }
    return records;
}

std::vector<QueryDescriptors> group_query_descriptors(
    const std::vector<DescriptorRecord>& records) {
    std::map<std::string, QueryDescriptors> groups;
    for (const auto& r : records) {
        auto& g = groups[r.image_id];
        g.query_id = r.image_id;
        if (r.view_code == 0) {
            if (g.full.dim() != 0)
                throw ValidationError("duplicate full view for " + r.image_id);
            g.full = r.descriptor;
        } else {
            g.partials.push_back(r.descriptor);
        }
    }
    std::vector<QueryDescriptors> out;
    out.reserve(groups.size());
    for (auto& [id, g] : groups) {
        if (g.full.dim() == 0)
            throw ValidationError("query " + id + " has no full view");
        out.push_back(std::move(g));
    }
    return out;
}

std::pair<Index, Index> build_ref_indexes(const std::vector<DescriptorRecord>& records) {
    std::vector<IndexEntry> full, partial;
    for (const auto& r : records) {
        IndexEntry e{r.image_id, r.view_code, r.descriptor};
        if (r.view_code == 0) full.push_back(std::move(e));
        else partial.push_back(std::move(e));
    }
    return {Index::build(std::move(full)), Index::build(std::move(partial))};
}

// -- config ------------------------------------------------------------

PipelineConfig parse_pipeline_config(const std::string& text) {
    PipelineConfig cfg;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back())))
            line.pop_back();
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw FormatError("config line " + std::to_string(lineno) + ": expected key=value");
        const std::string key = line.substr(0, eq);
        const std::string val = line.substr(eq + 1);
        auto as_u64 = [&] { return static_cast<std::uint64_t>(std::stoull(val)); };
        if (key == "k_per_method") cfg.k_per_method = as_u64();
        else if (key == "grid") cfg.grid = static_cast<std::uint32_t>(as_u64());
        else if (key == "dim") cfg.dim = as_u64();
        else if (key == "feature_grid") cfg.feature_grid = static_cast<std::uint32_t>(as_u64());
        else if (key == "scorer") cfg.scorer = val;
        else if (key == "best_only") cfg.best_only = as_u64() != 0;
        else if (key == "threads") cfg.threads = static_cast<unsigned>(as_u64());
        else if (key == "seed") cfg.seed = as_u64();
        else if (key == "train_projector") cfg.train_projector = as_u64() != 0;
        else if (key == "projector_epochs") cfg.projector_epochs = static_cast<std::uint32_t>(as_u64());
        else if (key == "projector_lr") cfg.projector_lr = parse_double(val);
        else if (key == "tau") cfg.tau = parse_double(val);
        else if (key == "batch_pairs") cfg.batch_pairs = as_u64();
        else if (key == "matcher_epochs") cfg.matcher_epochs = static_cast<std::uint32_t>(as_u64());
        else if (key == "matcher_lr") cfg.matcher_lr = parse_double(val);
        else if (key == "matcher_in_w") cfg.matcher.in_w = static_cast<std::uint32_t>(as_u64());
        else if (key == "matcher_in_h") cfg.matcher.in_h = static_cast<std::uint32_t>(as_u64());
        else if (key == "matcher_patch") cfg.matcher.patch = static_cast<std::uint32_t>(as_u64());
        else if (key == "matcher_d_model") cfg.matcher.d_model = static_cast<std::uint32_t>(as_u64());
        else if (key == "matcher_hidden") cfg.matcher.hidden = static_cast<std::uint32_t>(as_u64());
        else throw FormatError("unknown config key: " + key);
    }
    if (cfg.k_per_method < 1) throw ArgumentError("k_per_method must be >= 1");
    if (cfg.grid < 2) throw ArgumentError("grid must be >= 2");
    if (cfg.scorer != "matcher" && cfg.scorer != "baseline")
        throw ArgumentError("scorer must be 'matcher' or 'baseline'");
    return cfg;
}

std::string RunReport::to_text() const {
    std::ostringstream os;
    for (const auto& [k, v] : entries) os << k << "=" << v << "\n";
    return os.str();
}

// -- end-to-end --------------------------------------------------------

namespace {

std::vector<std::pair<std::string, Image>> load_image_dir(const std::string& dir) {
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().extension() == ".ppm") names.push_back(e.path().filename().string());
    }
    std::sort(names.begin(), names.end());
    std::vector<std::pair<std::string, Image>> images;
    images.reserve(names.size());
    for (const auto& n : names)
        images.emplace_back(fs::path(n).stem().string(),
                            load_ppm_file((fs::path(dir) / n).string()));
    return images;
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                     start).count();
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config,
                            const std::string& dataset_dir,
                            const std::string& out_dir) {
    const unsigned threads =
        config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
    fs::create_directories(out_dir);
    const fs::path out(out_dir);

    PipelineResult result;
    RunReport& report = result.report;
    RunReport manifest;
    manifest.add("command", "pipeline");
    manifest.add("dataset_dir", dataset_dir);
    manifest.add("seed", std::to_string(config.seed));
    manifest.add("k_per_method", std::to_string(config.k_per_method));
    manifest.add("grid", std::to_string(config.grid));
    manifest.add("dim", std::to_string(config.dim));
    manifest.add("scorer", config.scorer);

    Rng64 master(config.seed);
    const auto t0 = std::chrono::steady_clock::now();

    const auto refs = load_image_dir((fs::path(dataset_dir) / "refs").string());
    const auto queries = load_image_dir((fs::path(dataset_dir) / "queries").string());
    const GroundTruth gt = read_gt_csv((fs::path(dataset_dir) / "gt.csv").string());
    report.add("n_refs", std::to_string(refs.size()));
    report.add("n_queries", std::to_string(queries.size()));
    report.add("n_gt_pairs", std::to_string(gt.total_positives()));
    report.add("load_ms", format_double(elapsed_ms(t0)));

    // Projector: trained on reference images, or seeded random.
    auto t = std::chrono::steady_clock::now();
    Projector projector;
    if (config.train_projector) {
        std::vector<Image> train_imgs;
        train_imgs.reserve(refs.size());
        for (const auto& [id, img] : refs) train_imgs.push_back(img);
        auto [proj, log] = train_projector(
            train_imgs, Rng64(master.next_u64()), config.projector_epochs,
            config.projector_lr, config.tau, config.batch_pairs, config.dim,
            config.feature_grid);
        projector = std::move(proj);
        if (!log.epoch_loss.empty()) {
            report.add("projector_loss_first", format_double(log.epoch_loss.front()));
            report.add("projector_loss_last", format_double(log.epoch_loss.back()));
        }
    } else {
        projector = random_projector(config.dim, raw_feature_len(config.feature_grid),
                                     Rng64(master.next_u64()));
    }
    save_projector((out / "projector.iscp").string(), projector);
    report.add("projector_ms", format_double(elapsed_ms(t)));

    // Descriptor extraction goes through the ISCD files so a staged CLI
    // run and this one-shot path see identical (f32-quantized) vectors.
    t = std::chrono::steady_clock::now();
    save_descriptors((out / "refs.iscd").string(), static_cast<std::uint32_t>(config.dim),
                     extract_descriptors(refs, projector, config.grid, config.feature_grid));
    save_descriptors((out / "queries.iscd").string(), static_cast<std::uint32_t>(config.dim),
                     extract_descriptors(queries, projector, config.grid, config.feature_grid));
    const auto ref_records = load_descriptors((out / "refs.iscd").string());
    const auto query_records = load_descriptors((out / "queries.iscd").string());
    report.add("extract_ms", format_double(elapsed_ms(t)));

    t = std::chrono::steady_clock::now();
    auto [ref_full, ref_partial] = build_ref_indexes(ref_records);
    const auto query_groups = group_query_descriptors(query_records);
    const auto candidates = generate_candidates(query_groups, ref_full, ref_partial,
                                                config.k_per_method, threads);
    write_candidates_csv((out / "candidates.csv").string(), candidates);
    report.add("n_candidates", std::to_string(candidates.size()));
    report.add("retrieve_ms", format_double(elapsed_ms(t)));

    std::map<std::string, Image> query_map(queries.begin(), queries.end());
    std::map<std::string, Image> ref_map(refs.begin(), refs.end());

    t = std::chrono::steady_clock::now();
    PairScorer scorer;
    TinyMatcherParams matcher;
    if (config.scorer == "matcher" && gt.total_positives() >= 2) {
        std::vector<PairExample> examples;
        std::vector<std::pair<std::string, std::string>> gt_pairs(gt.pairs().begin(),
                                                                  gt.pairs().end());
        Rng64 neg_rng(master.next_u64());
        for (const auto& [qid, rid] : gt_pairs) {
            const auto q = query_map.find(qid);
            const auto r = ref_map.find(rid);
            if (q == query_map.end() || r == ref_map.end())
                throw LookupError("ground truth id missing from dataset");
            examples.push_back({concat_pair(q->second, r->second, config.matcher.in_w,
                                            config.matcher.in_h),
                                1});
            // Negative: same reference, query copied from another item.
            std::size_t other;
            do {
                other = static_cast<std::size_t>(
                    neg_rng.next_int(0, static_cast<int>(gt_pairs.size()) - 1));
            } while (gt_pairs[other].first == qid && gt_pairs.size() > 1);
            const auto& neg_q = query_map.at(gt_pairs[other].first);
            examples.push_back({concat_pair(neg_q, r->second, config.matcher.in_w,
                                            config.matcher.in_h),
                                0});
        }
        auto [params, log] = train_tiny_matcher(examples, config.matcher,
                                                config.matcher_epochs, config.matcher_lr,
                                                Rng64(master.next_u64()));
        matcher = std::move(params);
        save_matcher((out / "matcher.iscm").string(), matcher);
        if (!log.epoch_loss.empty()) {
            report.add("matcher_loss_first", format_double(log.epoch_loss.front()));
            report.add("matcher_loss_last", format_double(log.epoch_loss.back()));
        }
        scorer = matcher_scorer(matcher, query_map, ref_map);
    } else {
        scorer = baseline_scorer();
    }
    report.add("train_ms", format_double(elapsed_ms(t)));

    t = std::chrono::steady_clock::now();
    auto preds = score_candidates(candidates, scorer);
    if (config.best_only) preds = select_best_per_query(preds);
    write_submission_csv((out / "submission.csv").string(), preds);
    report.add("rerank_ms", format_double(elapsed_ms(t)));

    result.micro_ap = gt.total_positives() > 0 ? micro_average_precision(preds, gt) : 0.0;
    result.predictions = std::move(preds);
    report.add("micro_ap", format_double(result.micro_ap));
    report.add("total_ms", format_double(elapsed_ms(t0)));

    for (const char* artifact : {"projector.iscp", "refs.iscd", "queries.iscd",
                                 "candidates.csv", "submission.csv"}) {
        const auto path = out / artifact;
        if (fs::exists(path)) {
            char hex[17];
            std::snprintf(hex, sizeof(hex), "%016llx",
                          static_cast<unsigned long long>(file_checksum(path.string())));
            manifest.add(std::string("checksum.") + artifact, hex);
        }
    }
    if (fs::exists(out / "matcher.iscm")) {
        char hex[17];
        std::snprintf(hex, sizeof(hex), "%016llx",
                      static_cast<unsigned long long>(
                          file_checksum((out / "matcher.iscm").string())));
        manifest.add("checksum.matcher.iscm", hex);
    }
    manifest.add("micro_ap", format_double(result.micro_ap));
    write_text_file((out / "manifest.txt").string(), manifest.to_text());
    write_text_file((out / "report.txt").string(), report.to_text());
    return result;
}

}  // namespace isc
