#include "lfsgg/io.hpp"

#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>

#include <json.hpp>

#include "lfsgg/errors.hpp"

namespace lfsgg {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void fail_line(int lineno, const std::string& what) {
    throw ParseError("line " + std::to_string(lineno) + ": " + what);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open for writing: " + path);
    return out;
}

bool blank(const std::string& line) {
    return line.find_first_not_of(" \t\r\n") == std::string::npos;
}

const json& field(const json& j, const char* name, int lineno) {
    auto it = j.find(name);
    if (it == j.end()) fail_line(lineno, std::string("missing field '") + name + "'");
    return *it;
}

EntityInstance parse_entity(const json& j, const Vocabulary& vocab, int lineno) {
    if (!j.is_object()) fail_line(lineno, "entity must be an object");
    const json& cls = field(j, "cls", lineno);
    if (!cls.is_string()) fail_line(lineno, "entity 'cls' must be a string");
    const json& idx = field(j, "idx", lineno);
    if (!idx.is_number_integer()) fail_line(lineno, "entity 'idx' must be an integer");
    const int i = idx.get<int>();
    if (i < 0) fail_line(lineno, "entity 'idx' must be >= 0");
    if (i >= vocab.max_instance_count)
        throw VocabularyOverflow("line " + std::to_string(lineno) + ": idx " + std::to_string(i) +
                                 " exceeds max_instances " +
                                 std::to_string(vocab.max_instance_count));
    try {
        return {vocab.class_index(cls.get<std::string>()), i};
    } catch (const UnknownLabel& e) {
        throw UnknownLabel("line " + std::to_string(lineno) + ": " + e.what());
    }
}

const std::string& class_label(const Vocabulary& vocab, int cls) {
    if (cls < 0 || cls >= vocab.num_classes())
        throw UnknownLabel("class index out of range: " + std::to_string(cls));
    return vocab.classes[cls];
}

const std::string& predicate_label(const Vocabulary& vocab, int pred) {
    if (pred < 0 || pred >= vocab.num_predicates())
        throw UnknownLabel("predicate index out of range: " + std::to_string(pred));
    return vocab.predicates[pred];
}

ordered_json entity_json(const EntityInstance& e, const Vocabulary& vocab) {
    ordered_json j;
    j["cls"] = class_label(vocab, e.cls);
    j["idx"] = e.idx;
    return j;
}

} // namespace

std::vector<SceneGraph> load_graphs(const std::string& path, const Vocabulary& vocab) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path);

    std::vector<SceneGraph> graphs;
    std::unordered_map<std::string, int> seen; // image_id -> first line
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (blank(line)) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            fail_line(lineno, std::string("invalid JSON: ") + e.what());
        }
        if (!j.is_object()) fail_line(lineno, "record must be a JSON object");

        SceneGraph g;
        const json& id = field(j, "image_id", lineno);
        if (!id.is_string()) fail_line(lineno, "'image_id' must be a string");
        g.image_id = id.get<std::string>();
        if (auto [it, inserted] = seen.emplace(g.image_id, lineno); !inserted)
            fail_line(lineno, "duplicate image_id '" + g.image_id + "' (first seen on line " +
                                  std::to_string(it->second) + ")");

        const json& triplets = field(j, "triplets", lineno);
        if (!triplets.is_array()) fail_line(lineno, "'triplets' must be an array");
        for (const json& t : triplets) {
            if (!t.is_object()) fail_line(lineno, "triplet must be an object");
            Quintuple q;
            q.sub = parse_entity(field(t, "sub", lineno), vocab, lineno);
            q.obj = parse_entity(field(t, "obj", lineno), vocab, lineno);
            const json& pred = field(t, "pred", lineno);
            if (!pred.is_string()) fail_line(lineno, "'pred' must be a string");
            try {
                q.pred = vocab.predicate_index(pred.get<std::string>());
            } catch (const UnknownLabel& e) {
                throw UnknownLabel("line " + std::to_string(lineno) + ": " + e.what());
            }
            if (auto it = t.find("score"); it != t.end()) {
                if (!it->is_number()) fail_line(lineno, "'score' must be a number");
                q.score = it->get<double>();
            }
            g.quintuples.push_back(q);
        }
        graphs.push_back(std::move(g));
    }
    return graphs;
}

void save_graphs(const std::vector<SceneGraph>& graphs, const Vocabulary& vocab,
                 const std::string& path) {
    std::ofstream out = open_out(path);
    for (const auto& g : graphs) {
        ordered_json j;
        j["image_id"] = g.image_id;
        ordered_json triplets = ordered_json::array();
        for (const auto& q : g.quintuples) {
            ordered_json t;
            t["sub"] = entity_json(q.sub, vocab);
            t["pred"] = predicate_label(vocab, q.pred);
            t["obj"] = entity_json(q.obj, vocab);
            if (q.score) t["score"] = *q.score;
            triplets.push_back(std::move(t));
        }
        j["triplets"] = std::move(triplets);
        out << j.dump() << '\n';
    }
}

Vocabulary load_vocabulary(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw ParseError(path + ": invalid JSON: " + e.what());
    }
    if (!j.is_object()) throw ParseError(path + ": vocabulary must be a JSON object");

    Vocabulary vocab;
    const json& classes = field(j, "classes", 1);
    const json& predicates = field(j, "predicates", 1);
    if (!classes.is_array() || !predicates.is_array())
        throw ParseError(path + ": 'classes' and 'predicates' must be arrays");
    for (const json& c : classes) {
        if (!c.is_string()) throw ParseError(path + ": class labels must be strings");
        vocab.classes.push_back(c.get<std::string>());
    }
    for (const json& p : predicates) {
        if (!p.is_string()) throw ParseError(path + ": predicate labels must be strings");
        vocab.predicates.push_back(p.get<std::string>());
    }
    if (auto it = j.find("max_instances"); it != j.end()) {
        if (!it->is_number_integer()) throw ParseError(path + ": 'max_instances' must be an integer");
        vocab.max_instance_count = it->get<int>();
    }
    vocab.validate();
    return vocab;
}

void save_vocabulary(const Vocabulary& vocab, const std::string& path) {
    ordered_json j;
    j["classes"] = vocab.classes;
    j["predicates"] = vocab.predicates;
    j["max_instances"] = vocab.max_instance_count;
    std::ofstream out = open_out(path);
    out << j.dump(2) << '\n';
}

Vocabulary infer_vocabulary(const std::vector<std::string>& paths) {
    Vocabulary vocab;
    vocab.max_instance_count = 1;
    std::unordered_map<std::string, int> classes, predicates;

    auto see_entity = [&](const json& j, int lineno) {
        if (!j.is_object()) fail_line(lineno, "entity must be an object");
        const json& cls = field(j, "cls", lineno);
        if (!cls.is_string()) fail_line(lineno, "entity 'cls' must be a string");
        const json& idx = field(j, "idx", lineno);
        if (!idx.is_number_integer() || idx.get<int>() < 0)
            fail_line(lineno, "entity 'idx' must be a non-negative integer");
        if (classes.emplace(cls.get<std::string>(), 0).second)
            vocab.classes.push_back(cls.get<std::string>());
        vocab.max_instance_count = std::max(vocab.max_instance_count, idx.get<int>() + 1);
    };

    for (const auto& path : paths) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ParseError("cannot open " + path);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (blank(line)) continue;
            json j;
            try {
                j = json::parse(line);
            } catch (const json::parse_error& e) {
                fail_line(lineno, std::string("invalid JSON: ") + e.what());
            }
            if (!j.is_object()) fail_line(lineno, "record must be a JSON object");
            const json& triplets = field(j, "triplets", lineno);
            if (!triplets.is_array()) fail_line(lineno, "'triplets' must be an array");
            for (const json& t : triplets) {
                if (!t.is_object()) fail_line(lineno, "triplet must be an object");
                see_entity(field(t, "sub", lineno), lineno);
                see_entity(field(t, "obj", lineno), lineno);
                const json& pred = field(t, "pred", lineno);
                if (!pred.is_string()) fail_line(lineno, "'pred' must be a string");
                if (predicates.emplace(pred.get<std::string>(), 0).second)
                    vocab.predicates.push_back(pred.get<std::string>());
            }
        }
    }
    return vocab;
}

std::vector<TokenSequence> load_token_lines(const std::string& path, const TokenSpace* space) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path);

    std::vector<TokenSequence> sequences;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (blank(line)) continue;
        TokenSequence seq;
        std::istringstream is(line);
        std::string word;
        while (is >> word) {
            int tok = 0;
            try {
                std::size_t used = 0;
                tok = std::stoi(word, &used);
                if (used != word.size()) throw std::invalid_argument(word);
            } catch (const std::exception&) {
                fail_line(lineno, "not an integer token: '" + word + "'");
            }
            if (space && (tok < 0 || tok >= space->vocab_size()))
                fail_line(lineno, "token " + std::to_string(tok) + " outside the token space [0, " +
                                      std::to_string(space->vocab_size()) + ")");
            seq.push_back(tok);
        }
        sequences.push_back(std::move(seq));
    }
    return sequences;
}

void save_token_lines(const std::vector<TokenSequence>& sequences, const std::string& path) {
    std::ofstream out = open_out(path);
    for (const auto& seq : sequences) {
        for (std::size_t i = 0; i < seq.size(); ++i) {
            if (i) out << ' ';
            out << seq[i];
        }
        out << '\n';
    }
}

std::vector<std::string> load_id_lines(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path);
    std::vector<std::string> ids;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) ids.push_back(line);
    }
    return ids;
}

void save_id_lines(const std::vector<std::string>& ids, const std::string& path) {
    std::ofstream out = open_out(path);
    for (const auto& id : ids) out << id << '\n';
}

void save_mappings(const std::vector<SynthPair>& pairs, const Vocabulary& vocab,
                   const std::string& path) {
    std::ofstream out = open_out(path);
    for (const auto& sp : pairs) {
        ordered_json j;
        j["image_id"] = sp.gt.image_id;
        j["recall"] = sp.planted.recall;
        j["matched"] = sp.planted.matched;
        ordered_json arr = ordered_json::array();
        for (const auto& [g, p] : sp.planted.pairs) {
            ordered_json pair;
            pair["cls"] = class_label(vocab, g.cls);
            pair["gt"] = g.idx;
            pair["pred"] = p.idx;
            arr.push_back(std::move(pair));
        }
        j["pairs"] = std::move(arr);
        out << j.dump() << '\n';
    }
}

std::vector<std::pair<std::string, InstanceMapping>> load_mappings(const std::string& path,
                                                                   const Vocabulary& vocab) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path);

    std::vector<std::pair<std::string, InstanceMapping>> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (blank(line)) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            fail_line(lineno, std::string("invalid JSON: ") + e.what());
        }
        InstanceMapping m;
        const json& id = field(j, "image_id", lineno);
        if (!id.is_string()) fail_line(lineno, "'image_id' must be a string");
        if (auto it = j.find("recall"); it != j.end()) m.recall = it->get<double>();
        if (auto it = j.find("matched"); it != j.end()) m.matched = it->get<int>();
        const json& arr = field(j, "pairs", lineno);
        if (!arr.is_array()) fail_line(lineno, "'pairs' must be an array");
        for (const json& p : arr) {
            const json& cls = field(p, "cls", lineno);
            if (!cls.is_string()) fail_line(lineno, "'cls' must be a string");
            int c;
            try {
                c = vocab.class_index(cls.get<std::string>());
            } catch (const UnknownLabel& e) {
                throw UnknownLabel("line " + std::to_string(lineno) + ": " + e.what());
            }
            const int gi = field(p, "gt", lineno).get<int>();
            const int pi = field(p, "pred", lineno).get<int>();
            m.pairs.emplace_back(EntityInstance{c, gi}, EntityInstance{c, pi});
        }
        out.emplace_back(id.get<std::string>(), std::move(m));
    }
    return out;
}

std::string report_to_json(const EvalReport& report, bool with_timings) {
    ordered_json j;
    ordered_json ks = ordered_json::array();
    for (const auto& [k, v] : report.aggregate_recall_at) ks.push_back(k);
    j["ks"] = std::move(ks);

    ordered_json agg;
    ordered_json agg_recall;
    for (const auto& [k, v] : report.aggregate_recall_at) agg_recall[std::to_string(k)] = v;
    agg["recall_at"] = std::move(agg_recall);
    if (report.precision) {
        agg["precision"] = *report.precision;
        agg["recall"] = *report.recall;
        agg["f1"] = *report.f1;
    }
    j["aggregate"] = std::move(agg);

    ordered_json images = ordered_json::array();
    for (const auto& ev : report.per_image) {
        ordered_json e;
        e["image_id"] = ev.image_id;
        ordered_json rk;
        for (const auto& [k, v] : ev.recall_at) rk[std::to_string(k)] = v;
        e["recall_at"] = std::move(rk);
        if (ev.precision) {
            e["precision"] = *ev.precision;
            e["recall"] = *ev.recall;
            e["f1"] = *ev.f1;
        }
        if (with_timings) e["matcher_time_ms"] = ev.matcher_time_ms;
        images.push_back(std::move(e));
    }
    j["per_image"] = std::move(images);
    return j.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("report: invalid JSON: ") + e.what());
    }
    EvalReport report;
    std::vector<int> ks;
    for (const json& k : field(j, "ks", 1)) ks.push_back(k.get<int>());

    const json& agg = field(j, "aggregate", 1);
    const json& agg_recall = field(agg, "recall_at", 1);
    for (int k : ks)
        report.aggregate_recall_at.emplace_back(k, agg_recall.at(std::to_string(k)).get<double>());
    if (auto it = agg.find("precision"); it != agg.end()) {
        report.precision = it->get<double>();
        report.recall = agg.at("recall").get<double>();
        report.f1 = agg.at("f1").get<double>();
    }

    for (const json& e : field(j, "per_image", 1)) {
        ImageEval ev;
        ev.image_id = field(e, "image_id", 1).get<std::string>();
        const json& rk = field(e, "recall_at", 1);
        for (int k : ks) ev.recall_at.emplace_back(k, rk.at(std::to_string(k)).get<double>());
        if (auto it = e.find("precision"); it != e.end()) {
            ev.precision = it->get<double>();
            ev.recall = e.at("recall").get<double>();
            ev.f1 = e.at("f1").get<double>();
        }
        if (auto it = e.find("matcher_time_ms"); it != e.end())
            ev.matcher_time_ms = it->get<double>();
        report.per_image.push_back(std::move(ev));
    }
    return report;
}

void save_report(const EvalReport& report, const std::string& path, bool with_timings) {
    std::ofstream out = open_out(path);
    out << report_to_json(report, with_timings);
}

EvalReport load_report(const std::string& path) { return report_from_json(read_file(path)); }

} // namespace lfsgg
