// isc: image copy-detection pipeline front end.
//
// Subcommands cover the whole flow: gen-data -> extract -> retrieve ->
// train-matcher / train-projector -> rerank -> evaluate, plus a one-shot
// `pipeline` driver. Every command is a pure function of its inputs,
// flags, and seed; re-running reproduces byte-identical artifacts.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "isc/descriptor.hpp"
#include "isc/errors.hpp"
#include "isc/eval.hpp"
#include "isc/image.hpp"
#include "isc/index.hpp"
#include "isc/learning.hpp"
#include "isc/pipeline.hpp"

namespace fs = std::filesystem;
using namespace isc;

namespace {

std::string checksum_hex(const std::string& path) {
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(file_checksum(path)));
    return hex;
}

std::vector<std::pair<std::string, Image>> load_image_dir(const std::string& dir) {
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".ppm") names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    std::vector<std::pair<std::string, Image>> images;
    for (const auto& n : names)
        images.emplace_back(fs::path(n).stem().string(),
                            load_ppm_file((fs::path(dir) / n).string()));
    return images;
}

void write_manifest(const std::string& path, const RunReport& manifest) {
    write_text_file(path, manifest.to_text());
}

int cmd_gen_data(std::uint32_t refs, std::uint32_t pos, std::uint32_t distractors,
                 std::uint64_t seed, std::uint32_t image_size, const std::string& out) {
    const auto ds = make_synthetic_dataset(refs, pos, distractors, Rng64(seed), image_size);
    fs::create_directories(fs::path(out) / "refs");
    fs::create_directories(fs::path(out) / "queries");
    for (const auto& [id, img] : ds.refs)
        save_ppm_file((fs::path(out) / "refs" / (id + ".ppm")).string(), img);
    for (const auto& [id, img] : ds.queries)
        save_ppm_file((fs::path(out) / "queries" / (id + ".ppm")).string(), img);
    write_gt_csv((fs::path(out) / "gt.csv").string(), ds.gt);
    {
        std::ostringstream os;
        for (const auto& id : ds.overlay_query_ids) os << id << "\n";
        write_text_file((fs::path(out) / "overlay_queries.txt").string(), os.str());
    }
    RunReport manifest;
    manifest.add("command", "gen-data");
    manifest.add("refs", std::to_string(refs));
    manifest.add("pos", std::to_string(pos));
    manifest.add("distractors", std::to_string(distractors));
    manifest.add("seed", std::to_string(seed));
    manifest.add("image_size", std::to_string(image_size));
    manifest.add("checksum.gt.csv", checksum_hex((fs::path(out) / "gt.csv").string()));
    write_manifest((fs::path(out) / "manifest.txt").string(), manifest);
    std::cout << "wrote " << ds.refs.size() << " refs, " << ds.queries.size()
              << " queries, " << ds.gt.size() << " gt pairs to " << out << "\n";
    return 0;
}

int cmd_extract(const std::string& images_dir, std::uint32_t grid, std::size_t dim,
                const std::string& projector_file, std::uint64_t seed,
                std::uint32_t feature_grid, const std::string& out) {
    const auto images = load_image_dir(images_dir);
    Projector proj;
    if (!projector_file.empty()) {
        proj = load_projector(projector_file);
        if (proj.in_dim != raw_feature_len(feature_grid))
            throw ArgumentError("projector input size does not match feature grid");
    } else {
        proj = random_projector(dim, raw_feature_len(feature_grid), Rng64(seed));
    }
    const auto records = extract_descriptors(images, proj, grid, feature_grid);
    save_descriptors(out, static_cast<std::uint32_t>(proj.out_dim), records);
    std::cout << "wrote " << records.size() << " descriptor records to " << out << "\n";
    return 0;
}

int cmd_retrieve(const std::string& query_desc, const std::string& ref_desc,
                 std::size_t k, unsigned threads, const std::string& out) {
    std::uint32_t qdim = 0, rdim = 0;
    const auto query_records = load_descriptors(query_desc, &qdim);
    const auto ref_records = load_descriptors(ref_desc, &rdim);
    if (qdim != rdim) throw ArgumentError("descriptor dimension mismatch between files");
    auto [ref_full, ref_partial] = build_ref_indexes(ref_records);
    const auto groups = group_query_descriptors(query_records);
    const auto cands = generate_candidates(groups, ref_full, ref_partial, k, threads);
    write_candidates_csv(out, cands);
    std::cout << "wrote " << cands.size() << " candidates to " << out << "\n";
    return 0;
}

void write_training_log(const std::string& path, const TrainingLog& log) {
    std::ostringstream os;
    os << "epoch,mean_loss\n";
    for (std::size_t i = 0; i < log.epoch_loss.size(); ++i)
        os << i << "," << format_double(log.epoch_loss[i]) << "\n";
    write_text_file(path, os.str());
}

int cmd_train_matcher(const std::string& data_dir, std::uint32_t epochs, double lr,
                      std::uint64_t seed, const MatcherConfig& cfg,
                      const std::string& out) {
    const auto refs = load_image_dir((fs::path(data_dir) / "refs").string());
    const auto queries = load_image_dir((fs::path(data_dir) / "queries").string());
    const GroundTruth gt = read_gt_csv((fs::path(data_dir) / "gt.csv").string());
    if (gt.total_positives() < 2)
        throw ArgumentError("need at least 2 ground-truth pairs to sample negatives");
    std::map<std::string, Image> qmap(queries.begin(), queries.end());
    std::map<std::string, Image> rmap(refs.begin(), refs.end());

    Rng64 rng(seed);
    std::vector<std::pair<std::string, std::string>> pairs(gt.pairs().begin(),
                                                           gt.pairs().end());
    std::vector<PairExample> examples;
    for (const auto& [qid, rid] : pairs) {
        examples.push_back({concat_pair(qmap.at(qid), rmap.at(rid), cfg.in_w, cfg.in_h), 1});
        std::size_t other;
        do {
            other = static_cast<std::size_t>(rng.next_int(0, static_cast<int>(pairs.size()) - 1));
        } while (pairs[other].first == qid);
        examples.push_back(
            {concat_pair(qmap.at(pairs[other].first), rmap.at(rid), cfg.in_w, cfg.in_h), 0});
    }
    auto [params, log] = train_tiny_matcher(examples, cfg, epochs, lr, rng);
    save_matcher(out, params);
    write_training_log(out + ".log.csv", log);
    std::cout << "trained matcher on " << examples.size() << " examples, final loss "
              << (log.epoch_loss.empty() ? 0.0 : log.epoch_loss.back()) << "\n";
    return 0;
}

int cmd_train_projector(const std::string& data_dir, std::uint32_t epochs, double lr,
                        double tau, std::size_t batch_pairs, std::size_t dim,
                        std::uint32_t feature_grid, std::uint64_t seed,
                        const std::string& out) {
    const auto refs = load_image_dir((fs::path(data_dir) / "refs").string());
    std::vector<Image> imgs;
    imgs.reserve(refs.size());
    for (const auto& [id, img] : refs) imgs.push_back(img);
    auto [proj, log] = train_projector(imgs, Rng64(seed), epochs, lr, tau, batch_pairs,
                                       dim, feature_grid);
    save_projector(out, proj);
    write_training_log(out + ".log.csv", log);
    std::cout << "trained projector, final loss "
              << (log.epoch_loss.empty() ? 0.0 : log.epoch_loss.back()) << "\n";
    return 0;
}

int cmd_rerank(const std::string& candidates_file, const std::string& matcher_file,
               const std::string& data_dir, bool best_only, const std::string& out) {
    const auto cands = read_candidates_csv(candidates_file);
    PairScorer scorer;
    TinyMatcherParams params;
    std::map<std::string, Image> qmap, rmap;
    if (!matcher_file.empty()) {
        params = load_matcher(matcher_file);
        for (auto& [id, img] : load_image_dir((fs::path(data_dir) / "queries").string()))
            qmap.emplace(id, std::move(img));
        for (auto& [id, img] : load_image_dir((fs::path(data_dir) / "refs").string()))
            rmap.emplace(id, std::move(img));
        scorer = matcher_scorer(params, qmap, rmap);
    } else {
        scorer = baseline_scorer();  // retrieval similarity pass-through
    }
    auto preds = score_candidates(cands, scorer);
    if (best_only) preds = select_best_per_query(preds);
    write_submission_csv(out, preds);
    std::cout << "wrote " << preds.size() << " predictions to " << out << "\n";
    return 0;
}

int cmd_evaluate(const std::string& submission_file, const std::string& gt_file,
                 const std::string& curve_file) {
    const auto preds = read_submission_csv(submission_file);
    const GroundTruth gt = read_gt_csv(gt_file);
    const double ap = preds.empty() ? 0.0 : micro_average_precision(preds, gt);
    std::cout << "micro_ap=" << format_double(ap) << "\n";
    std::cout << "n_predictions=" << preds.size() << "\n";
    std::cout << "n_gt_pairs=" << gt.total_positives() << "\n";
    if (!curve_file.empty() && !preds.empty()) {
        const auto curve = pr_curve(preds, gt);
        std::ostringstream os;
        os << "rank,score,precision,recall\n";
        for (const auto& p : curve)
            os << p.rank << "," << format_double(p.score) << ","
               << format_double(p.precision) << "," << format_double(p.recall) << "\n";
        write_text_file(curve_file, os.str());
    }
    return 0;
}

int cmd_pipeline(const std::string& config_file, const std::string& data_dir,
                 const std::string& out_dir) {
    const PipelineConfig cfg = parse_pipeline_config(read_text_file(config_file));
    const auto result = run_pipeline(cfg, data_dir, out_dir);
    std::cout << "micro_ap=" << format_double(result.micro_ap) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"image copy-detection pipeline"};
    app.require_subcommand(1);

    // gen-data
    std::uint32_t refs = 10, pos = 5, distractors = 2, image_size = 64;
    std::uint64_t seed = 1;
    std::string out_path, data_dir, images_dir;
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
    gen->add_option("--refs", refs, "number of reference images");
    gen->add_option("--pos", pos, "number of positive queries");
    gen->add_option("--distractors", distractors, "number of distractor queries");
    gen->add_option("--seed", seed, "dataset seed");
    gen->add_option("--image-size", image_size, "image side length");
    gen->add_option("--out", out_path, "output directory")->required();

    // extract
    std::uint32_t grid = 2, feature_grid = 4;
    std::size_t dim = 256;
    std::string projector_file;
    auto* extract = app.add_subcommand("extract", "extract view descriptors (ISCD)");
    extract->add_option("--images", images_dir, "PPM directory")->required();
    extract->add_option("--grid", grid, "partial-view grid");
    extract->add_option("--dim", dim, "descriptor dimension");
    extract->add_option("--feature-grid", feature_grid, "tile-statistics grid");
    extract->add_option("--projector", projector_file, "ISCP projector file");
    extract->add_option("--seed", seed, "seed for the random projector");
    extract->add_option("--out", out_path, "output ISCD file")->required();

    // retrieve
    std::string query_desc, ref_desc;
    std::size_t k = 10;
    unsigned threads = 0;
    auto* retrieve = app.add_subcommand("retrieve", "three-method candidate retrieval");
    retrieve->add_option("--query-desc", query_desc, "query ISCD file")->required();
    retrieve->add_option("--ref-desc", ref_desc, "reference ISCD file")->required();
    retrieve->add_option("--k", k, "neighbors per method");
    retrieve->add_option("--threads", threads, "scan threads (0 = auto)");
    retrieve->add_option("--out", out_path, "candidates CSV")->required();

    // train-matcher
    std::uint32_t epochs = 30;
    double lr = 0.05;
    MatcherConfig mcfg;
    auto* tm = app.add_subcommand("train-matcher", "train the pair matcher (ISCM)");
    tm->add_option("--data", data_dir, "dataset directory")->required();
    tm->add_option("--epochs", epochs, "training epochs");
    tm->add_option("--lr", lr, "learning rate");
    tm->add_option("--seed", seed, "training seed");
    tm->add_option("--d-model", mcfg.d_model, "matcher embedding width");
    tm->add_option("--hidden", mcfg.hidden, "matcher MLP width");
    tm->add_option("--out", out_path, "output ISCM file")->required();

    // train-projector
    double plr = 0.5, tau = 0.1;
    std::uint32_t pepochs = 12;
    std::size_t batch_pairs = 8;
    auto* tp = app.add_subcommand("train-projector", "train the linear projector (ISCP)");
    tp->add_option("--data", data_dir, "dataset directory")->required();
    tp->add_option("--epochs", pepochs, "training epochs");
    tp->add_option("--lr", plr, "learning rate");
    tp->add_option("--tau", tau, "NT-Xent temperature");
    tp->add_option("--batch", batch_pairs, "pairs per batch");
    tp->add_option("--dim", dim, "descriptor dimension");
    tp->add_option("--feature-grid", feature_grid, "tile-statistics grid");
    tp->add_option("--seed", seed, "training seed");
    tp->add_option("--out", out_path, "output ISCP file")->required();

    // rerank
    std::string candidates_file, matcher_file;
    bool best_only = true;
    auto* rerank = app.add_subcommand("rerank", "score candidates, keep best per query");
    rerank->add_option("--candidates", candidates_file, "candidates CSV")->required();
    rerank->add_option("--matcher", matcher_file, "ISCM matcher (omit for baseline)");
    rerank->add_option("--data", data_dir, "dataset directory (needed with --matcher)");
    rerank->add_flag("--best-only,!--all-pairs", best_only, "one row per query (default)");
    rerank->add_option("--out", out_path, "submission CSV")->required();

    // evaluate
    std::string submission_file, gt_file, curve_file;
    auto* eval_cmd = app.add_subcommand("evaluate", "micro-average precision");
    eval_cmd->add_option("--submission", submission_file, "submission CSV")->required();
    eval_cmd->add_option("--gt", gt_file, "ground-truth CSV")->required();
    eval_cmd->add_option("--curve", curve_file, "optional PR-curve CSV output");

    // pipeline
    std::string config_file;
    auto* pipe = app.add_subcommand("pipeline", "end-to-end run from a config file");
    pipe->add_option("--config", config_file, "key=value config file")->required();
    pipe->add_option("--data", data_dir, "dataset directory")->required();
    pipe->add_option("--out", out_path, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (gen->parsed())
            return cmd_gen_data(refs, pos, distractors, seed, image_size, out_path);
        if (extract->parsed())
            return cmd_extract(images_dir, grid, dim, projector_file, seed, feature_grid,
                               out_path);
        if (retrieve->parsed())
            return cmd_retrieve(query_desc, ref_desc, k, threads, out_path);
        if (tm->parsed())
            return cmd_train_matcher(data_dir, epochs, lr, seed, mcfg, out_path);
        if (tp->parsed())
            return cmd_train_projector(data_dir, pepochs, plr, tau, batch_pairs, dim,
                                       feature_grid, seed, out_path);
        if (rerank->parsed()) {
            if (!matcher_file.empty() && data_dir.empty())
                throw ArgumentError("--matcher requires --data");
            return cmd_rerank(candidates_file, matcher_file, data_dir, best_only, out_path);
        }
        if (eval_cmd->parsed())
            return cmd_evaluate(submission_file, gt_file, curve_file);
        if (pipe->parsed())
            return cmd_pipeline(config_file, data_dir, out_path);
    } catch (const ArgumentError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {  // format / validation / lookup
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
