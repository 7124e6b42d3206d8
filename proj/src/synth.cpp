#include "lfsgg/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_set>

#include "lfsgg/errors.hpp"
#include "lfsgg/rng.hpp"

namespace lfsgg {
namespace {

std::string padded(const char* prefix, int value, int width) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%0*d", prefix, width, value);
    return buf;
}

SceneGraph make_gt(std::mt19937_64& rng, const SynthConfig& cfg, int image_index,
                   std::vector<int>& per_class) {
    SceneGraph gt;
    gt.image_id = padded("synth-", image_index, 6);

    const int n_nodes = rand_between(rng, cfg.min_nodes, cfg.max_nodes);
    const int capacity = cfg.num_classes * cfg.max_instances_per_class;
    std::vector<EntityInstance> pool;
    pool.reserve(n_nodes);
    for (int j = 0; j < n_nodes && static_cast<int>(pool.size()) < capacity; ++j) {
        int cls;
        do {
            cls = static_cast<int>(rand_below(rng, cfg.num_classes));
        } while (per_class[cls] >= cfg.max_instances_per_class);
        pool.push_back({cls, per_class[cls]++});
    }

    const int n_q = rand_between(rng, cfg.min_quintuples, cfg.max_quintuples);
    gt.quintuples.reserve(n_q);
    for (int j = 0; j < n_q; ++j) {
        Quintuple q;
        q.sub = pool[rand_below(rng, pool.size())];
        q.obj = pool[rand_below(rng, pool.size())];
        q.pred = static_cast<int>(rand_below(rng, cfg.num_predicates));
        gt.quintuples.push_back(q);
    }
    return gt;
}

} // namespace

void SynthConfig::validate() const {
    if (n_images < 0) throw std::invalid_argument("n_images must be >= 0");
    if (num_classes < 1 || num_predicates < 1)
        throw std::invalid_argument("need at least one class and one predicate");
    if (min_nodes < 1 || min_nodes > max_nodes)
        throw std::invalid_argument("node range is empty or non-positive");
    if (max_instances_per_class < 1)
        throw std::invalid_argument("max_instances_per_class must be >= 1");
    if (min_nodes > num_classes * max_instances_per_class)
        throw std::invalid_argument("min_nodes exceeds the instance capacity of the label set");
    if (min_quintuples < 0 || min_quintuples > max_quintuples)
        throw std::invalid_argument("quintuple range is empty or negative");
    for (double rate : {instance_shuffle, edge_drop, edge_add, label_noise})
        if (rate < 0.0 || rate > 1.0) throw std::invalid_argument("rates must lie in [0, 1]");
}

Vocabulary synth_vocabulary(const SynthConfig& cfg) {
    cfg.validate();
    Vocabulary vocab;
    vocab.classes.reserve(cfg.num_classes);
    for (int c = 0; c < cfg.num_classes; ++c) vocab.classes.push_back(padded("class_", c, 2));
    vocab.predicates.reserve(cfg.num_predicates);
    for (int p = 0; p < cfg.num_predicates; ++p) vocab.predicates.push_back(padded("pred_", p, 2));
    vocab.max_instance_count = std::max(8, cfg.max_instances_per_class);
    vocab.validate();
    return vocab;
}

std::vector<SynthPair> generate(const SynthConfig& cfg) {
    cfg.validate();
    std::vector<SynthPair> out;
    out.reserve(cfg.n_images);

    for (int i = 0; i < cfg.n_images; ++i) {
        std::mt19937_64 rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(i)));
        SynthPair pair;
        std::vector<int> per_class(cfg.num_classes, 0);
        pair.gt = make_gt(rng, cfg, i, per_class);

        // per-class instance-id permutation, recorded as the planted mapping
        std::vector<std::vector<int>> perm(cfg.num_classes);
        for (int cls = 0; cls < cfg.num_classes; ++cls) {
            perm[cls].resize(per_class[cls]);
            std::iota(perm[cls].begin(), perm[cls].end(), 0);
            if (per_class[cls] > 1 && rand_bernoulli(rng, cfg.instance_shuffle))
                shuffle_in_place(rng, perm[cls]);
        }
        auto relabeled = [&](const EntityInstance& e) {
            return EntityInstance{e.cls, perm[e.cls][e.idx]};
        };
        for (const auto& n : nodes(pair.gt)) pair.planted.pairs.emplace_back(n, relabeled(n));

        SceneGraph relabel;
        relabel.image_id = pair.gt.image_id;
        for (const auto& q : pair.gt.quintuples) {
            Quintuple r;
            r.sub = relabeled(q.sub);
            r.obj = relabeled(q.obj);
            r.pred = q.pred;
            relabel.quintuples.push_back(r);
        }
        const std::vector<EntityInstance> pred_pool = nodes(relabel);

        // drops
        SceneGraph kept;
        kept.image_id = relabel.image_id;
        for (const auto& q : relabel.quintuples)
            if (!rand_bernoulli(rng, cfg.edge_drop)) kept.quintuples.push_back(q);

        // predicate corruption prefers predicates the image never uses, so a
        // corrupted quintuple cannot accidentally match a different one
        std::unordered_set<int> used_preds;
        for (const auto& q : pair.gt.quintuples) used_preds.insert(q.pred);
        std::vector<int> unused_preds;
        for (int p = 0; p < cfg.num_predicates; ++p)
            if (!used_preds.count(p)) unused_preds.push_back(p);
        for (auto& q : kept.quintuples) {
            if (!rand_bernoulli(rng, cfg.label_noise)) continue;
            if (!unused_preds.empty()) {
                q.pred = unused_preds[rand_below(rng, unused_preds.size())];
            } else if (cfg.num_predicates > 1) {
                int alt;
                do {
                    alt = static_cast<int>(rand_below(rng, cfg.num_predicates));
                } while (alt == q.pred);
                q.pred = alt;
            }
        }

        // additions draw endpoints from the prediction's node set only
        const std::size_t n_candidates = relabel.quintuples.size();
        for (std::size_t j = 0; j < n_candidates && !pred_pool.empty(); ++j) {
            if (!rand_bernoulli(rng, cfg.edge_add)) continue;
            Quintuple q;
            q.sub = pred_pool[rand_below(rng, pred_pool.size())];
            q.obj = pred_pool[rand_below(rng, pred_pool.size())];
            q.pred = static_cast<int>(rand_below(rng, cfg.num_predicates));
            kept.quintuples.push_back(q);
        }

        pair.pred = std::move(kept);
        const InstanceMapping scored =
            evaluate_mapping(pair.gt, pair.pred, pair.planted.pairs, false);
        pair.planted.recall = scored.recall;
        pair.planted.matched = scored.matched;
        out.push_back(std::move(pair));
    }
    return out;
}

std::pair<SceneGraph, SceneGraph> adversarial_tie_case(std::uint64_t seed,
                                                       int max_instances_per_class) {
    if (max_instances_per_class < 2)
        throw GenerationFailed("a local tie needs at least two instances of one class");

    // Two interlocked 2-cycles: within each class the two instances have
    // identical one-hop neighborhoods, so every per-class score ties, yet
    // only a coordinated assignment across both classes matches any edge.
    constexpr int A = 0, B = 1, r = 0, s = 1;
    auto add = [](SceneGraph& g, int scls, int sidx, int pred, int ocls, int oidx) {
        g.quintuples.push_back({{scls, sidx}, {ocls, oidx}, pred, std::nullopt});
    };
    SceneGraph gt;
    gt.image_id = "adversarial";
    add(gt, A, 0, r, B, 0);
    add(gt, B, 0, s, A, 0);
    add(gt, A, 1, r, B, 1);
    add(gt, B, 1, s, A, 1);

    const std::pair<int, int> combos[4] = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    const int start = static_cast<int>(seed % 4);
    for (int attempt = 0; attempt < 4; ++attempt) {
        const auto [swap_a, swap_b] = combos[(start + attempt) % 4];
        SceneGraph pred;
        pred.image_id = gt.image_id;
        for (const auto& q : gt.quintuples) {
            Quintuple c = q;
            if (c.sub.cls == A && swap_a) c.sub.idx ^= 1;
            if (c.sub.cls == B && swap_b) c.sub.idx ^= 1;
            if (c.obj.cls == A && swap_a) c.obj.idx ^= 1;
            if (c.obj.cls == B && swap_b) c.obj.idx ^= 1;
            pred.quintuples.push_back(c);
        }

        const InstanceMapping oracle = exhaustive_match(gt, pred);
        const InstanceMapping baseline = first_order_match(gt, pred);
        MatchConfig two;
        two.branching_factor = 2;
        const InstanceMapping deep = hts_match(gt, pred, two);
        if (baseline.recall < oracle.recall && deep.recall == oracle.recall) return {gt, pred};
    }
    throw GenerationFailed("no instance relabeling defeated the one-shot baseline");
}

} // namespace lfsgg
