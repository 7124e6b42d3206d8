#include "lfsgg/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include <CLI11.hpp>
#include <json.hpp>

#include "lfsgg/codec.hpp"
#include "lfsgg/errors.hpp"
#include "lfsgg/io.hpp"
#include "lfsgg/matcher.hpp"
#include "lfsgg/metrics.hpp"
#include "lfsgg/retrieval.hpp"
#include "lfsgg/rng.hpp"
#include "lfsgg/synth.hpp"

namespace lfsgg::cli {
namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

// Matching flags shared by every command that runs the matcher.
struct MatchFlags {
    int branching_factor = 3;
    std::int64_t max_branches = 1'000'000;
    bool directed = false;
    bool dedup_gt = false;
    bool static_neighborhoods = false;

    void attach(CLI::App* cmd, bool with_b = true) {
        if (with_b)
            cmd->add_option("-B,--branching-factor", branching_factor,
                            "top-scoring candidates explored per ground-truth instance")
                ->check(CLI::PositiveNumber)
                ->capture_default_str();
        cmd->add_option("--max-branches", max_branches,
                        "fail instead of completing more mappings than this")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        cmd->add_flag("--directed-neighborhood", directed,
                      "distinguish outgoing from incoming edges in overlap scores");
        cmd->add_flag("--dedup-gt", dedup_gt,
                      "collapse duplicate ground-truth quintuples before matching");
        cmd->add_flag("--static-neighborhoods", static_neighborhoods,
                      "score against the full graphs instead of the unmapped remainder");
    }

    MatchConfig config() const {
        MatchConfig cfg;
        cfg.branching_factor = branching_factor;
        cfg.max_branches = max_branches;
        cfg.directed_neighborhood = directed;
        cfg.dedup_gt = dedup_gt;
        cfg.static_neighborhoods = static_neighborhoods;
        return cfg;
    }
};

void write_text(const std::string& text, const std::string& out_path, std::ostream& out) {
    if (out_path.empty()) {
        out << text;
        return;
    }
    std::ofstream f(out_path, std::ios::binary);
    if (!f) throw Error("cannot open for writing: " + out_path);
    f << text;
}

// ---- evaluate ----------------------------------------------------------

struct EvaluateArgs {
    std::string gt_path, pred_path, vocab_path, out_path;
    std::vector<int> ks{20, 50, 100};
    MatchFlags match;
    int jobs = 1;
    bool timings = false;
    bool no_precision = false;
};

int run_evaluate(const EvaluateArgs& a, std::ostream& out) {
    const Vocabulary vocab = load_vocabulary(a.vocab_path);
    const auto gt = load_graphs(a.gt_path, vocab);
    const auto pred = load_graphs(a.pred_path, vocab);

    EvalOptions opts;
    opts.ks = a.ks;
    opts.match = a.match.config();
    opts.jobs = a.jobs;
    opts.with_precision = !a.no_precision;
    const EvalReport report = evaluate_dataset(gt, pred, opts);

    const std::string text = report_to_json(report, a.timings);
    if (a.out_path.empty()) {
        out << text;
        return 0;
    }
    write_text(text, a.out_path, out);
    for (const auto& [k, v] : report.aggregate_recall_at)
        out << "R@" << k << " " << fmt(v) << "\n";
    if (report.f1)
        out << "precision " << fmt(*report.precision) << "  recall " << fmt(*report.recall)
            << "  f1 " << fmt(*report.f1) << "\n";
    out << "report written to " << a.out_path << "\n";
    return 0;
}

// ---- match -------------------------------------------------------------

struct MatchArgs {
    std::string gt_path, pred_path, image_id, vocab_path;
    MatchFlags match;
    bool exhaustive = false;
};

const SceneGraph& find_graph(const std::vector<SceneGraph>& graphs, const std::string& image_id,
                             const std::string& path) {
    for (const auto& g : graphs)
        if (g.image_id == image_id) return g;
    throw UnknownImageId("image_id '" + image_id + "' not found in " + path);
}

int run_match(const MatchArgs& a, std::ostream& out) {
    const Vocabulary vocab = a.vocab_path.empty()
                                 ? infer_vocabulary({a.gt_path, a.pred_path})
                                 : load_vocabulary(a.vocab_path);
    const auto gt_graphs = load_graphs(a.gt_path, vocab);
    const auto pred_graphs = load_graphs(a.pred_path, vocab);
    const SceneGraph& gt = find_graph(gt_graphs, a.image_id, a.gt_path);
    const SceneGraph& pred = find_graph(pred_graphs, a.image_id, a.pred_path);

    const MatchConfig cfg = a.match.config();
    const InstanceMapping m =
        a.exhaustive ? exhaustive_match(gt, pred, cfg.dedup_gt) : hts_match(gt, pred, cfg);

    for (const auto& [g, p] : m.pairs)
        out << vocab.classes.at(g.cls) << "#" << g.idx << " -> " << vocab.classes.at(p.cls) << "#"
            << p.idx << "\n";
    const std::size_t denom =
        cfg.dedup_gt ? top_k_unique(gt, std::max<int>(1, static_cast<int>(gt.size()))).size()
                     : gt.size();
    out << "recall " << fmt(m.recall) << " (" << m.matched << "/" << denom << " quintuples)\n";
    return 0;
}

// ---- sweep-b -----------------------------------------------------------

struct SweepArgs {
    std::string gt_path, pred_path, vocab_path, out_path;
    std::vector<int> b_list{1, 2, 3, 4, 5, 6};
    int k = 20;
    int jobs = 1;
    MatchFlags match;
};

int run_sweep(const SweepArgs& a, std::ostream& out) {
    const Vocabulary vocab = load_vocabulary(a.vocab_path);
    const auto gt = load_graphs(a.gt_path, vocab);
    const auto pred = load_graphs(a.pred_path, vocab);

    std::ostringstream table;
    table << "B\trecall@" << a.k << "\twall_ms\n";
    for (int b : a.b_list) {
        EvalOptions opts;
        opts.ks = {a.k};
        opts.match = a.match.config();
        opts.match.branching_factor = b;
        opts.jobs = a.jobs;
        opts.with_precision = false;

        const auto t0 = std::chrono::steady_clock::now();
        const EvalReport report = evaluate_dataset(gt, pred, opts);
        const auto t1 = std::chrono::steady_clock::now();
        const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        char row[96];
        std::snprintf(row, sizeof(row), "%d\t%.6f\t%.3f\n", b,
                      report.aggregate_recall_at.front().second, ms);
        table << row;
    }
    write_text(table.str(), a.out_path, out);
    if (!a.out_path.empty()) out << "table written to " << a.out_path << "\n";
    return 0;
}

// ---- synth -------------------------------------------------------------

struct SynthArgs {
    std::string config_path, out_gt, out_pred, out_mapping, out_vocab;
};

SynthConfig parse_synth_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path + ": invalid JSON: " + e.what());
    }
    if (!j.is_object()) throw ParseError(path + ": config must be a JSON object");

    SynthConfig cfg;
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "seed") cfg.seed = value.get<std::uint64_t>();
            else if (key == "n_images") cfg.n_images = value.get<int>();
            else if (key == "num_classes") cfg.num_classes = value.get<int>();
            else if (key == "num_predicates") cfg.num_predicates = value.get<int>();
            else if (key == "min_nodes") cfg.min_nodes = value.get<int>();
            else if (key == "max_nodes") cfg.max_nodes = value.get<int>();
            else if (key == "max_instances_per_class") cfg.max_instances_per_class = value.get<int>();
            else if (key == "min_quintuples") cfg.min_quintuples = value.get<int>();
            else if (key == "max_quintuples") cfg.max_quintuples = value.get<int>();
            else if (key == "instance_shuffle") cfg.instance_shuffle = value.get<double>();
            else if (key == "edge_drop") cfg.edge_drop = value.get<double>();
            else if (key == "edge_add") cfg.edge_add = value.get<double>();
            else if (key == "label_noise") cfg.label_noise = value.get<double>();
            else throw ParseError(path + ": unknown config key '" + key + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": bad config value: " + e.what());
    }
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw ParseError(path + ": " + e.what());
    }
    return cfg;
}

int run_synth(const SynthArgs& a, std::ostream& out) {
    const SynthConfig cfg = parse_synth_config(a.config_path);
    const Vocabulary vocab = synth_vocabulary(cfg);
    const std::vector<SynthPair> pairs = generate(cfg);

    std::vector<SceneGraph> gt, pred;
    gt.reserve(pairs.size());
    pred.reserve(pairs.size());
    for (const auto& p : pairs) {
        gt.push_back(p.gt);
        pred.push_back(p.pred);
    }
    save_graphs(gt, vocab, a.out_gt);
    save_graphs(pred, vocab, a.out_pred);
    if (!a.out_mapping.empty()) save_mappings(pairs, vocab, a.out_mapping);
    if (!a.out_vocab.empty()) save_vocabulary(vocab, a.out_vocab);
    out << "generated " << pairs.size() << " graph pairs\n";
    return 0;
}

// ---- codec -------------------------------------------------------------

struct CodecEncodeArgs {
    std::string in_path, vocab_path, out_path;
    std::optional<std::uint64_t> seed;
};

int run_codec_encode(const CodecEncodeArgs& a, std::ostream& out) {
    const Vocabulary vocab = load_vocabulary(a.vocab_path);
    const TokenSpace space = TokenSpace::from_vocabulary(vocab);
    const auto graphs = load_graphs(a.in_path, vocab);

    std::vector<TokenSequence> sequences;
    std::vector<std::string> ids;
    sequences.reserve(graphs.size());
    for (std::size_t i = 0; i < graphs.size(); ++i) {
        const std::optional<std::uint64_t> line_seed =
            a.seed ? std::optional(derive_seed(*a.seed, i)) : std::nullopt;
        sequences.push_back(encode(graphs[i], space, line_seed));
        ids.push_back(graphs[i].image_id);
    }
    save_token_lines(sequences, a.out_path);
    save_id_lines(ids, a.out_path + ".ids");
    out << "encoded " << sequences.size() << " graphs to " << a.out_path << "\n";
    return 0;
}

struct CodecDecodeArgs {
    std::string in_path, vocab_path, out_path;
    int max_quintuples = 300;
};

int run_codec_decode(const CodecDecodeArgs& a, std::ostream& out, std::ostream& err) {
    const Vocabulary vocab = load_vocabulary(a.vocab_path);
    const TokenSpace space = TokenSpace::from_vocabulary(vocab);
    const auto sequences = load_token_lines(a.in_path, &space);

    std::vector<std::string> ids;
    if (std::ifstream probe(a.in_path + ".ids", std::ios::binary); probe) {
        probe.close();
        ids = load_id_lines(a.in_path + ".ids");
        if (ids.size() != sequences.size()) ids.clear(); // stale sidecar: fall back
    }

    std::vector<SceneGraph> graphs;
    graphs.reserve(sequences.size());
    int malformed = 0, truncated = 0, stopped = 0;
    for (std::size_t i = 0; i < sequences.size(); ++i) {
        DecodeResult res = decode(sequences[i], space, a.max_quintuples);
        if (i < ids.size()) {
            res.graph.image_id = ids[i];
        } else {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "seq-%06zu", i);
            res.graph.image_id = buf;
        }
        malformed += res.report.malformed;
        truncated += res.report.truncated;
        stopped += res.report.stopped ? 1 : 0;
        graphs.push_back(std::move(res.graph));
    }
    save_graphs(graphs, vocab, a.out_path);
    err << "decoded " << graphs.size() << " sequences: " << malformed << " malformed blocks, "
        << truncated << " truncated, " << stopped << " stopped early\n";
    out << "graphs written to " << a.out_path << "\n";
    return 0;
}

// ---- retrieve ----------------------------------------------------------

struct RetrieveArgs {
    std::string query_path, gallery_path, vocab_path, out_path;
    std::vector<int> ks{1, 20};
    MatchFlags match;
    int jobs = 1;
};

int run_retrieve(const RetrieveArgs& a, std::ostream& out) {
    const Vocabulary vocab = load_vocabulary(a.vocab_path);
    const auto queries = load_graphs(a.query_path, vocab);
    const auto gallery_graphs = load_graphs(a.gallery_path, vocab);

    Gallery gallery;
    gallery.entries.reserve(gallery_graphs.size());
    for (const auto& g : gallery_graphs) gallery.entries.emplace_back(g.image_id, g);
    gallery.validate();

    const MatchConfig cfg = a.match.config();
    const int kmax = *std::max_element(a.ks.begin(), a.ks.end());

    std::vector<std::vector<std::pair<std::string, double>>> ranked(queries.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= queries.size()) return;
            ranked[i] = rank(queries[i], gallery, cfg, kmax);
        }
    };
    const int n_threads = static_cast<int>(
        std::min<std::size_t>(std::max(a.jobs, 1), std::max<std::size_t>(queries.size(), 1)));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    std::ostringstream text;
    std::vector<int> hits(a.ks.size(), 0);
    for (std::size_t i = 0; i < queries.size(); ++i) {
        text << queries[i].image_id << "\t";
        for (std::size_t r = 0; r < ranked[i].size(); ++r) {
            if (r) text << ' ';
            text << ranked[i][r].first;
        }
        text << "\n";
        for (std::size_t ki = 0; ki < a.ks.size(); ++ki) {
            const int k = std::min<int>(a.ks[ki], static_cast<int>(ranked[i].size()));
            for (int r = 0; r < k; ++r)
                if (ranked[i][r].first == queries[i].image_id) {
                    ++hits[ki];
                    break;
                }
        }
    }
    for (std::size_t ki = 0; ki < a.ks.size(); ++ki) {
        const double rate = queries.empty() ? 0.0 : static_cast<double>(hits[ki]) / queries.size();
        text << "# R@" << a.ks[ki] << " " << fmt(rate) << "\n";
    }
    write_text(text.str(), a.out_path, out);
    if (!a.out_path.empty()) out << "results written to " << a.out_path << "\n";
    return 0;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"scene-graph toolkit: instance matching, recall metrics, token codecs, synthesis"};
    app.require_subcommand(1);

    EvaluateArgs ev;
    auto* evaluate = app.add_subcommand("evaluate", "score predictions against ground truth");
    evaluate->add_option("gt", ev.gt_path, "ground-truth JSONL file")->required();
    evaluate->add_option("pred", ev.pred_path, "prediction JSONL file")->required();
    evaluate->add_option("vocab", ev.vocab_path, "vocabulary JSON file")->required();
    evaluate->add_option("--k", ev.ks, "recall cutoffs")->delimiter(',')->capture_default_str();
    evaluate->add_option("--jobs", ev.jobs, "parallel image evaluations")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    evaluate->add_option("--out", ev.out_path, "write the JSON report here instead of stdout");
    evaluate->add_flag("--timings", ev.timings, "include per-image matcher times in the report");
    evaluate->add_flag("--no-precision", ev.no_precision, "skip full-graph precision/recall/F1");
    ev.match.attach(evaluate);

    MatchArgs ma;
    auto* match = app.add_subcommand("match", "print the best instance mapping for one image");
    match->add_option("gt", ma.gt_path, "ground-truth JSONL file")->required();
    match->add_option("pred", ma.pred_path, "prediction JSONL file")->required();
    match->add_option("image_id", ma.image_id, "image to match")->required();
    match->add_option("--vocab", ma.vocab_path,
                      "vocabulary JSON file (default: inferred from the graph files)");
    match->add_flag("--exhaustive", ma.exhaustive, "use the exact search instead of the heuristic");
    ma.match.attach(match);

    SweepArgs sw;
    auto* sweep = app.add_subcommand("sweep-b", "recall and wall time across branching factors");
    sweep->add_option("gt", sw.gt_path, "ground-truth JSONL file")->required();
    sweep->add_option("pred", sw.pred_path, "prediction JSONL file")->required();
    sweep->add_option("vocab", sw.vocab_path, "vocabulary JSON file")->required();
    sweep->add_option("--b-list", sw.b_list, "branching factors to sweep")
        ->delimiter(',')
        ->capture_default_str();
    sweep->add_option("--k", sw.k, "recall cutoff")->check(CLI::PositiveNumber)->capture_default_str();
    sweep->add_option("--jobs", sw.jobs, "parallel image evaluations")->check(CLI::PositiveNumber);
    sweep->add_option("--out", sw.out_path, "write the table here instead of stdout");
    sw.match.attach(sweep, /*with_b=*/false);

    SynthArgs sy;
    auto* synth = app.add_subcommand("synth", "generate a seeded synthetic corpus");
    synth->add_option("config", sy.config_path, "generator config JSON")->required();
    synth->add_option("--out-gt", sy.out_gt, "ground-truth JSONL output")->required();
    synth->add_option("--out-pred", sy.out_pred, "perturbed prediction JSONL output")->required();
    synth->add_option("--out-mapping", sy.out_mapping, "planted-mapping JSONL output");
    synth->add_option("--out-vocab", sy.out_vocab, "vocabulary JSON output");

    auto* codec = app.add_subcommand("codec", "token-sequence conversion");
    codec->require_subcommand(1);
    CodecEncodeArgs ce;
    std::uint64_t encode_seed = 0;
    auto* codec_encode = codec->add_subcommand("encode", "graphs -> token lines");
    codec_encode->add_option("in", ce.in_path, "graph JSONL file")->required();
    codec_encode->add_option("vocab", ce.vocab_path, "vocabulary JSON file")->required();
    codec_encode->add_option("--out", ce.out_path, "token output file")->required();
    auto* seed_opt = codec_encode->add_option(
        "--seed", encode_seed, "shuffle quintuple order per graph with this seed");
    CodecDecodeArgs cd;
    auto* codec_decode = codec->add_subcommand("decode", "token lines -> graphs");
    codec_decode->add_option("in", cd.in_path, "token file, one sequence per line")->required();
    codec_decode->add_option("vocab", cd.vocab_path, "vocabulary JSON file")->required();
    codec_decode->add_option("--out", cd.out_path, "graph JSONL output file")->required();
    codec_decode->add_option("--max-quintuples", cd.max_quintuples, "decode budget per sequence")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    RetrieveArgs re;
    auto* retrieve = app.add_subcommand("retrieve", "rank a gallery against each query graph");
    retrieve->add_option("query", re.query_path, "query JSONL file")->required();
    retrieve->add_option("gallery", re.gallery_path, "gallery JSONL file")->required();
    retrieve->add_option("vocab", re.vocab_path, "vocabulary JSON file")->required();
    retrieve->add_option("--k", re.ks, "hit-rate cutoffs")->delimiter(',')->capture_default_str();
    retrieve->add_option("--jobs", re.jobs, "parallel queries")->check(CLI::PositiveNumber);
    retrieve->add_option("--out", re.out_path, "write rankings here instead of stdout");
    re.match.attach(retrieve);

    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("lfsgg");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return 2;
    }

    try {
        if (evaluate->parsed()) return run_evaluate(ev, out);
        if (match->parsed()) return run_match(ma, out);
        if (sweep->parsed()) return run_sweep(sw, out);
        if (synth->parsed()) return run_synth(sy, out);
        if (codec->parsed()) {
            if (seed_opt->count()) ce.seed = encode_seed;
            if (codec_encode->parsed()) return run_codec_encode(ce, out);
            if (codec_decode->parsed()) return run_codec_decode(cd, out, err);
        }
        if (retrieve->parsed()) return run_retrieve(re, out);
        err << "error: no command given\n";
        return 2;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const UnknownImageId& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const InvalidVocabulary& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    } catch (const UnknownLabel& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    } catch (const VocabularyOverflow& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    } catch (const SearchSpaceTooLarge& e) {
        err << "error: " << e.what() << "\n";
        return 4;
    } catch (const BranchBudgetExceeded& e) {
        err << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace lfsgg::cli
