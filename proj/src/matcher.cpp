#include "lfsgg/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "lfsgg/errors.hpp"

namespace lfsgg {
namespace {

constexpr double kExhaustiveGuard = 1e7;

// Dense view of one graph. Instance ids are assigned in (class, idx) order,
// so comparing dense ids is the (class, idx) tie-break.
struct Indexed {
    std::vector<EntityInstance> instances;
    struct Edge {
        int sub, obj, pred;
    };
    std::vector<Edge> edges;
    std::vector<std::vector<int>> incident; // instance -> edge ids, self-loops listed once

    int find(const EntityInstance& e) const {
        auto it = std::lower_bound(instances.begin(), instances.end(), e);
        if (it == instances.end() || *it != e) return -1;
        return static_cast<int>(it - instances.begin());
    }
};

struct ArrayHash {
    std::size_t operator()(const std::array<int, 5>& a) const {
        std::size_t h = 0;
        for (int v : a) h = h * 1000003u + static_cast<std::size_t>(v) + 0x9e37u;
        return h;
    }
};

Indexed build_indexed(const SceneGraph& g, bool dedup) {
    Indexed ix;
    std::vector<const Quintuple*> qs;
    qs.reserve(g.quintuples.size());
    if (dedup) {
        std::unordered_set<std::array<int, 5>, ArrayHash> seen;
        for (const auto& q : g.quintuples)
            if (seen.insert(q.key()).second) qs.push_back(&q);
    } else {
        for (const auto& q : g.quintuples) qs.push_back(&q);
    }

    for (const auto* q : qs) {
        ix.instances.push_back(q->sub);
        ix.instances.push_back(q->obj);
    }
    std::sort(ix.instances.begin(), ix.instances.end());
    ix.instances.erase(std::unique(ix.instances.begin(), ix.instances.end()), ix.instances.end());

    ix.incident.resize(ix.instances.size());
    ix.edges.reserve(qs.size());
    for (const auto* q : qs) {
        Indexed::Edge e{ix.find(q->sub), ix.find(q->obj), q->pred};
        int id = static_cast<int>(ix.edges.size());
        ix.edges.push_back(e);
        ix.incident[e.sub].push_back(id);
        if (e.obj != e.sub) ix.incident[e.obj].push_back(id);
    }
    return ix;
}

inline std::uint64_t nbhd_key(int pred, int cls, int dir) {
    return (static_cast<std::uint64_t>(pred) << 32) | (static_cast<std::uint64_t>(cls) << 2) |
           static_cast<std::uint64_t>(dir);
}

inline std::uint64_t edge_key(int sub, int obj, int pred) {
    return (static_cast<std::uint64_t>(sub) << 43) | (static_cast<std::uint64_t>(obj) << 22) |
           static_cast<std::uint64_t>(pred);
}

// One-hop neighborhood of `inst` as sorted packed keys. In reduced mode,
// edges whose other endpoint is no longer alive are excluded.
void collect_nbhd(const Indexed& g, int inst, const std::vector<char>& alive, bool directed,
                  bool reduced, std::vector<std::uint64_t>& out) {
    out.clear();
    for (int e : g.incident[inst]) {
        const auto& ed = g.edges[e];
        const bool is_subject = (ed.sub == inst);
        const int other = is_subject ? ed.obj : ed.sub;
        if (reduced && !alive[other]) continue;
        const int dir = directed ? (is_subject ? 1 : 2) : 0;
        out.push_back(nbhd_key(ed.pred, g.instances[other].cls, dir));
    }
    std::sort(out.begin(), out.end());
}

int sorted_common_count(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
    int common = 0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] < b[j]) {
            ++i;
        } else if (b[j] < a[i]) {
            ++j;
        } else {
            ++common;
            ++i;
            ++j;
        }
    }
    return common;
}

// Scores completed mappings against the predicted quintuple multiset and
// keeps the best one. Recall ties are broken by the lexicographically
// smallest (gt instance, pred instance) pair list; dense id order equals
// (class, idx) order, so comparing dense pairs implements that.
struct LeafScorer {
    const Indexed& gt;
    const Indexed& pred;
    std::unordered_map<std::uint64_t, int> pred_edge_count;
    std::vector<std::unordered_map<std::uint64_t, int>::iterator> touched;

    double best_recall = -1.0;
    int best_matched = 0;
    std::vector<std::pair<int, int>> best_pairs;
    bool has_result = false;

    LeafScorer(const Indexed& g, const Indexed& p) : gt(g), pred(p) {
        pred_edge_count.reserve(pred.edges.size() * 2 + 1);
        for (const auto& e : pred.edges) ++pred_edge_count[edge_key(e.sub, e.obj, e.pred)];
    }

    int matched_count(const std::vector<int>& mapping) {
        touched.clear();
        int matched = 0;
        for (const auto& e : gt.edges) {
            const int ms = mapping[e.sub];
            const int mo = mapping[e.obj];
            if (ms < 0 || mo < 0) continue;
            auto it = pred_edge_count.find(edge_key(ms, mo, e.pred));
            if (it != pred_edge_count.end() && it->second > 0) {
                --it->second;
                touched.push_back(it);
                ++matched;
            }
        }
        for (auto it : touched) ++it->second; // restore the multiset
        return matched;
    }

    void offer(const std::vector<int>& mapping) {
        const int matched = matched_count(mapping);
        const int total = static_cast<int>(gt.edges.size());
        const double recall = total == 0 ? 1.0 : static_cast<double>(matched) / total;
        if (has_result && recall < best_recall) return;
        std::vector<std::pair<int, int>> pairs;
        for (int i = 0; i < static_cast<int>(mapping.size()); ++i)
            if (mapping[i] >= 0) pairs.emplace_back(i, mapping[i]);
        if (!has_result || recall > best_recall || pairs < best_pairs) {
            best_recall = recall;
            best_matched = matched;
            best_pairs = std::move(pairs);
            has_result = true;
        }
    }

    InstanceMapping result() const {
        InstanceMapping m;
        m.recall = best_recall < 0 ? (gt.edges.empty() ? 1.0 : 0.0) : best_recall;
        m.matched = best_matched;
        m.pairs.reserve(best_pairs.size());
        for (const auto& [gi, pi] : best_pairs)
            m.pairs.emplace_back(gt.instances[gi], pred.instances[pi]);
        return m;
    }
};

// Ground-truth processing order plus the neighborhood each instance is
// scored with. The choice at depth d depends only on which ground-truth
// instances were consumed before it, never on the predicted branch taken, so
// the whole plan can be computed once up front.
struct GtPlan {
    std::vector<int> order;
    std::vector<std::vector<std::uint64_t>> nbhd;
};

GtPlan build_gt_plan(const Indexed& gt, bool directed, bool static_mode) {
    const int n = static_cast<int>(gt.instances.size());
    GtPlan plan;
    plan.order.reserve(n);
    plan.nbhd.reserve(n);
    std::vector<char> alive(n, 1);

    auto degree_of = [&](int i) {
        int d = 0;
        for (int e : gt.incident[i]) {
            const auto& ed = gt.edges[e];
            const int other = ed.sub == i ? ed.obj : ed.sub;
            if (static_mode || alive[other]) ++d;
        }
        return d;
    };

    for (int step = 0; step < n; ++step) {
        int best = -1;
        int best_deg = -1;
        for (int i = 0; i < n; ++i) {
            if (!alive[i]) continue;
            const int d = degree_of(i);
            if (d > best_deg) { // first max wins: dense order is the tie-break
                best = i;
                best_deg = d;
            }
        }
        std::vector<std::uint64_t> keys;
        collect_nbhd(gt, best, alive, directed, !static_mode, keys);
        plan.order.push_back(best);
        plan.nbhd.push_back(std::move(keys));
        alive[best] = false;
    }
    return plan;
}

std::unordered_map<int, std::vector<int>> group_by_class(const Indexed& g) {
    std::unordered_map<int, std::vector<int>> by_class;
    for (int i = 0; i < static_cast<int>(g.instances.size()); ++i)
        by_class[g.instances[i].cls].push_back(i); // ascending dense id == ascending idx
    return by_class;
}

struct HtsSearch {
    const Indexed& gt;
    const Indexed& pred;
    const MatchConfig& cfg;
    const GtPlan& plan;
    std::unordered_map<int, std::vector<int>> pred_by_class;
    std::vector<char> pred_alive;
    std::vector<int> mapping;
    std::vector<int> gt_left; // same-class GT instances at this depth or later
    std::vector<std::uint64_t> scratch_nbhd;
    std::vector<std::pair<double, int>> scratch_scored;
    std::int64_t completed = 0;
    LeafScorer scorer;

    HtsSearch(const Indexed& g, const Indexed& p, const MatchConfig& c, const GtPlan& pl)
        : gt(g), pred(p), cfg(c), plan(pl), pred_by_class(group_by_class(p)),
          pred_alive(p.instances.size(), 1), mapping(g.instances.size(), -1), scorer(g, p) {
        gt_left.resize(plan.order.size());
        std::unordered_map<int, int> tally;
        for (int d = static_cast<int>(plan.order.size()) - 1; d >= 0; --d)
            gt_left[d] = ++tally[gt.instances[plan.order[d]].cls];
    }

    void run() { recurse(0); }

    void recurse(int depth) {
        if (depth == static_cast<int>(plan.order.size())) {
            if (++completed > cfg.max_branches)
                throw BranchBudgetExceeded(
                    "completed branches exceed max_branches = " + std::to_string(cfg.max_branches) +
                    "; raise the cap or lower the branching factor");
            scorer.offer(mapping);
            return;
        }

        const int y = plan.order[depth];
        const auto& gt_nb = plan.nbhd[depth];

        auto it = pred_by_class.find(gt.instances[y].cls);
        auto& scored = scratch_scored;
        scored.clear();
        if (it != pred_by_class.end()) {
            for (int p : it->second) {
                if (!pred_alive[p]) continue;
                double s = 0.0;
                if (!gt_nb.empty()) {
                    collect_nbhd(pred, p, pred_alive, cfg.directed_neighborhood,
                                 !cfg.static_neighborhoods, scratch_nbhd);
                    s = static_cast<double>(sorted_common_count(gt_nb, scratch_nbhd)) /
                        static_cast<double>(gt_nb.size());
                }
                scored.emplace_back(s, p);
            }
        }

        if (scored.empty()) { // class absent or exhausted: map to nothing
            recurse(depth + 1);
            return;
        }

        std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });

        const int avail = static_cast<int>(scored.size());
        const int take = std::min<int>(cfg.branching_factor, avail);
        // scratch_scored is reused by deeper levels; copy the slice we branch on
        std::vector<int> branch_targets;
        branch_targets.reserve(take);
        for (int i = 0; i < take; ++i) branch_targets.push_back(scored[i].second);

        for (int p : branch_targets) {
            mapping[y] = p;
            pred_alive[p] = 0;
            recurse(depth + 1);
            pred_alive[p] = 1;
            mapping[y] = -1;
        }

        // When a class has more GT instances left than surviving predictions,
        // some of them must stay unmapped no matter what; the optimum may
        // prefer sacrificing this node to a later sibling, so explore that
        // too. Not limited by B: the candidate list above still only grows
        // with B, which keeps recall monotone in the branching factor.
        if (gt_left[depth] > avail) recurse(depth + 1);
    }
};

double count_maximal_injections(int g, int p) {
    const int m = std::min(g, p);
    double c = 1.0; // C(g, m)
    for (int i = 0; i < m; ++i) c = c * (g - i) / (i + 1);
    double perm = 1.0; // P(p, m)
    for (int i = 0; i < m; ++i) perm *= (p - i);
    return c * perm;
}

struct ExhaustiveSearch {
    const Indexed& gt;
    const Indexed& pred;
    // per class: ground-truth dense ids, predicted dense ids
    std::vector<std::pair<std::vector<int>, std::vector<int>>> classes;
    std::vector<std::vector<char>> used;
    std::vector<int> mapping;
    LeafScorer scorer;

    ExhaustiveSearch(const Indexed& g, const Indexed& p)
        : gt(g), pred(p), mapping(g.instances.size(), -1), scorer(g, p) {
        auto gt_by_class = group_by_class(g);
        auto pred_by_class = group_by_class(p);
        std::vector<int> class_ids;
        for (const auto& [cls, ids] : gt_by_class) class_ids.push_back(cls);
        std::sort(class_ids.begin(), class_ids.end());
        for (int cls : class_ids) {
            std::vector<int> preds;
            if (auto it = pred_by_class.find(cls); it != pred_by_class.end()) preds = it->second;
            classes.emplace_back(gt_by_class[cls], std::move(preds));
        }
        for (const auto& [gts, preds] : classes) used.emplace_back(preds.size(), 0);
    }

    void check_guard() const {
        double total = 1.0;
        for (const auto& [gts, preds] : classes) {
            total *= count_maximal_injections(static_cast<int>(gts.size()),
                                              static_cast<int>(preds.size()));
            if (total > kExhaustiveGuard) {
                std::ostringstream msg;
                msg << "exhaustive search space exceeds " << kExhaustiveGuard
                    << " mappings; per-class (gt, pred) instance counts:";
                for (const auto& [gs, ps] : classes)
                    msg << " class " << gt.instances[gs.front()].cls << ": (" << gs.size() << ", "
                        << ps.size() << ")";
                throw SearchSpaceTooLarge(msg.str());
            }
        }
    }

    void run() {
        check_guard();
        recurse_class(0);
    }

    void recurse_class(std::size_t ci) {
        if (ci == classes.size()) {
            scorer.offer(mapping);
            return;
        }
        const auto& [gts, preds] = classes[ci];
        const int skips = static_cast<int>(gts.size()) -
                          std::min<int>(static_cast<int>(gts.size()), static_cast<int>(preds.size()));
        recurse_inst(ci, 0, skips);
    }

    // Enumerates every maximal injection for class ci: each ground-truth
    // instance either takes an unused predicted instance or consumes one of
    // the exactly (g - min(g, p)) allowed skips.
    void recurse_inst(std::size_t ci, std::size_t k, int skips_left) {
        const auto& [gts, preds] = classes[ci];
        if (k == gts.size()) {
            recurse_class(ci + 1);
            return;
        }
        if (skips_left > 0) recurse_inst(ci, k + 1, skips_left - 1);
        for (std::size_t j = 0; j < preds.size(); ++j) {
            if (used[ci][j]) continue;
            used[ci][j] = 1;
            mapping[gts[k]] = preds[j];
            recurse_inst(ci, k + 1, skips_left);
            mapping[gts[k]] = -1;
            used[ci][j] = 0;
        }
    }
};

// Square-matrix Kuhn-Munkres, minimization, O(n^3) shortest augmenting path.
std::vector<int> hungarian_min(const std::vector<std::vector<double>>& cost) {
    const int n = static_cast<int>(cost.size());
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, std::numeric_limits<double>::infinity());
        std::vector<char> visited(n + 1, 0);
        do {
            visited[j0] = 1;
            const int i0 = p[j0];
            int j1 = 0;
            double delta = std::numeric_limits<double>::infinity();
            for (int j = 1; j <= n; ++j) {
                if (visited[j]) continue;
                const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (visited[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> rowsol(n, -1);
    for (int j = 1; j <= n; ++j)
        if (p[j] > 0) rowsol[p[j] - 1] = j - 1;
    return rowsol;
}

} // namespace

double overlap_score(const Neighborhood& gt_nbhd, const Neighborhood& pred_nbhd) {
    if (gt_nbhd.empty())
        throw std::invalid_argument("overlap_score requires a non-empty ground-truth neighborhood");
    int common = 0;
    std::size_t i = 0, j = 0;
    while (i < gt_nbhd.size() && j < pred_nbhd.size()) {
        if (gt_nbhd[i] < pred_nbhd[j]) {
            ++i;
        } else if (pred_nbhd[j] < gt_nbhd[i]) {
            ++j;
        } else {
            ++common;
            ++i;
            ++j;
        }
    }
    return static_cast<double>(common) / static_cast<double>(gt_nbhd.size());
}

InstanceMapping hts_match(const SceneGraph& gt, const SceneGraph& pred, const MatchConfig& cfg) {
    if (cfg.branching_factor < 1) throw std::invalid_argument("branching_factor must be >= 1");
    if (cfg.max_branches < 1) throw std::invalid_argument("max_branches must be >= 1");
    const Indexed gti = build_indexed(gt, cfg.dedup_gt);
    const Indexed predi = build_indexed(pred, false);
    const GtPlan plan = build_gt_plan(gti, cfg.directed_neighborhood, cfg.static_neighborhoods);
    HtsSearch search(gti, predi, cfg, plan);
    search.run();
    return search.scorer.result();
}

InstanceMapping exhaustive_match(const SceneGraph& gt, const SceneGraph& pred, bool dedup_gt) {
    const Indexed gti = build_indexed(gt, dedup_gt);
    const Indexed predi = build_indexed(pred, false);
    ExhaustiveSearch search(gti, predi);
    search.run();
    return search.scorer.result();
}

InstanceMapping first_order_match(const SceneGraph& gt, const SceneGraph& pred,
                                  const MatchConfig& cfg) {
    const Indexed gti = build_indexed(gt, cfg.dedup_gt);
    const Indexed predi = build_indexed(pred, false);

    auto gt_by_class = group_by_class(gti);
    auto pred_by_class = group_by_class(predi);
    std::vector<int> class_ids;
    for (const auto& [cls, ids] : gt_by_class) class_ids.push_back(cls);
    std::sort(class_ids.begin(), class_ids.end());

    const std::vector<char> gt_all_alive(gti.instances.size(), 1);
    const std::vector<char> pred_all_alive(predi.instances.size(), 1);
    std::vector<int> mapping(gti.instances.size(), -1);
    std::vector<std::uint64_t> gt_nb, pred_nb;

    for (int cls : class_ids) {
        auto pit = pred_by_class.find(cls);
        if (pit == pred_by_class.end()) continue;
        const auto& gts = gt_by_class[cls];
        const auto& preds = pit->second;
        const int n = static_cast<int>(gts.size());
        const int k = static_cast<int>(preds.size());
        const int dim = std::max(n, k);

        // scores on the full graphs; padding cells cost nothing
        std::vector<std::vector<double>> cost(dim, std::vector<double>(dim, 0.0));
        for (int i = 0; i < n; ++i) {
            collect_nbhd(gti, gts[i], gt_all_alive, cfg.directed_neighborhood, false, gt_nb);
            for (int j = 0; j < k; ++j) {
                collect_nbhd(predi, preds[j], pred_all_alive, cfg.directed_neighborhood, false,
                             pred_nb);
                const double s = gt_nb.empty()
                                     ? 0.0
                                     : static_cast<double>(sorted_common_count(gt_nb, pred_nb)) /
                                           static_cast<double>(gt_nb.size());
                cost[i][j] = -s;
            }
        }

        const std::vector<int> rowsol = hungarian_min(cost);
        std::vector<char> pred_used(k, 0);
        for (int i = 0; i < n; ++i) {
            const int j = rowsol[i];
            if (j >= 0 && j < k) {
                mapping[gts[i]] = preds[j];
                pred_used[j] = 1;
            }
        }
        // the optimum may route zero-score pairs through padding; complete
        // the matching so the mapping is maximal
        std::size_t next_free = 0;
        for (int i = 0; i < n; ++i) {
            if (mapping[gts[i]] >= 0) continue;
            while (next_free < pred_used.size() && pred_used[next_free]) ++next_free;
            if (next_free == pred_used.size()) break;
            mapping[gts[i]] = preds[next_free];
            pred_used[next_free] = 1;
        }
    }

    LeafScorer scorer(gti, predi);
    scorer.offer(mapping);
    return scorer.result();
}

SceneGraph apply_mapping(const SceneGraph& pred, const InstanceMapping& m, int max_instance_count) {
    std::unordered_map<std::int64_t, int> relabel; // packed (cls, idx) -> new idx
    auto pack = [](const EntityInstance& e) {
        return (static_cast<std::int64_t>(e.cls) << 32) | static_cast<std::uint32_t>(e.idx);
    };
    for (const auto& [g, p] : m.pairs) relabel[pack(p)] = g.idx;

    std::unordered_map<int, int> fresh_per_class;
    for (const auto& n : nodes(pred)) {
        if (relabel.count(pack(n))) continue;
        relabel[pack(n)] = max_instance_count + fresh_per_class[n.cls]++;
    }

    SceneGraph out;
    out.image_id = pred.image_id;
    out.quintuples.reserve(pred.quintuples.size());
    for (const auto& q : pred.quintuples) {
        Quintuple r = q;
        r.sub.idx = relabel.at(pack(q.sub));
        r.obj.idx = relabel.at(pack(q.obj));
        out.quintuples.push_back(r);
    }
    return out;
}

InstanceMapping evaluate_mapping(const SceneGraph& gt, const SceneGraph& pred,
                                 const std::vector<std::pair<EntityInstance, EntityInstance>>& pairs,
                                 bool dedup_gt) {
    const Indexed gti = build_indexed(gt, dedup_gt);
    const Indexed predi = build_indexed(pred, false);
    std::vector<int> mapping(gti.instances.size(), -1);
    std::vector<char> pred_taken(predi.instances.size(), 0);
    for (const auto& [g, p] : pairs) {
        if (g.cls != p.cls) throw Error("mapping pair is not class-consistent");
        const int gi = gti.find(g);
        const int pi = predi.find(p);
        if (gi < 0 || pi < 0) continue; // endpoint absent from its graph: contributes nothing
        if (mapping[gi] >= 0 || pred_taken[pi]) throw Error("mapping is not injective");
        mapping[gi] = pi;
        pred_taken[pi] = 1;
    }
    LeafScorer scorer(gti, predi);
    scorer.offer(mapping);
    return scorer.result();
}

} // namespace lfsgg
