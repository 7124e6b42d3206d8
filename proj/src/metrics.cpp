#include "lfsgg/metrics.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <exception>
#include <iterator>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "lfsgg/codec.hpp"
#include "lfsgg/errors.hpp"

namespace lfsgg {
namespace {

double harmonic_f1(double precision, double recall) {
    const double denom = precision + recall;
    return denom > 0.0 ? 2.0 * precision * recall / denom : 0.0;
}

} // namespace

double recall_at_k(const SceneGraph& gt, const SceneGraph& pred, int k, const MatchConfig& cfg) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    if (gt.empty()) return 1.0;
    const SceneGraph top = top_k_unique(pred, k);
    return hts_match(gt, top, cfg).recall;
}

std::tuple<double, double, double> precision_recall_f1(const SceneGraph& gt,
                                                       const SceneGraph& pred,
                                                       const MatchConfig& cfg) {
    const int n_pred = static_cast<int>(pred.size());
    const SceneGraph unique_pred = top_k_unique(pred, std::max(1, n_pred));
    const double n_unique = static_cast<double>(unique_pred.size());

    if (gt.empty() && unique_pred.empty()) return {1.0, 1.0, 1.0};
    if (unique_pred.empty()) return {0.0, 0.0, 0.0};
    if (gt.empty()) return {0.0, 1.0, 0.0}; // nothing to recall, all predictions spurious

    // Recall is matched on the full multisets, so repeated predictions can
    // cover repeated ground-truth rows and a graph evaluated against itself
    // scores perfectly. Precision then asks how many of the *distinct*
    // predicted quintuples that same mapping explains.
    const InstanceMapping m = hts_match(gt, pred, cfg);

    std::map<EntityInstance, int> to_pred;
    for (const auto& [g, p] : m.pairs) to_pred.emplace(g, p.idx);

    std::vector<std::array<int, 5>> translated;
    translated.reserve(gt.size());
    for (const auto& q : gt.quintuples) {
        const auto s = to_pred.find(q.sub);
        const auto o = to_pred.find(q.obj);
        if (s == to_pred.end() || o == to_pred.end()) continue;
        translated.push_back({q.sub.cls, s->second, q.obj.cls, o->second, q.pred});
    }
    std::sort(translated.begin(), translated.end());
    translated.erase(std::unique(translated.begin(), translated.end()), translated.end());

    std::vector<std::array<int, 5>> distinct;
    distinct.reserve(unique_pred.size());
    for (const auto& q : unique_pred.quintuples) distinct.push_back(q.key());
    std::sort(distinct.begin(), distinct.end());

    std::vector<std::array<int, 5>> covered;
    std::set_intersection(translated.begin(), translated.end(), distinct.begin(),
                          distinct.end(), std::back_inserter(covered));

    const double precision = static_cast<double>(covered.size()) / n_unique;
    return {precision, m.recall, harmonic_f1(precision, m.recall)};
}

EvalReport evaluate_dataset(const std::vector<SceneGraph>& gt, const std::vector<SceneGraph>& pred,
                            const EvalOptions& opts) {
    if (opts.jobs < 1) throw std::invalid_argument("jobs must be >= 1");
    if (opts.ks.empty()) throw std::invalid_argument("at least one K is required");
    for (int k : opts.ks)
        if (k < 1) throw std::invalid_argument("every k must be >= 1");

    std::unordered_set<std::string> gt_ids;
    for (const auto& g : gt)
        if (!gt_ids.insert(g.image_id).second)
            throw ParseError("duplicate image_id in ground truth: " + g.image_id);

    std::unordered_map<std::string, const SceneGraph*> pred_by_id;
    for (const auto& p : pred) {
        if (!gt_ids.count(p.image_id))
            throw UnknownImageId("prediction for unknown image_id: " + p.image_id);
        if (!pred_by_id.emplace(p.image_id, &p).second)
            throw ParseError("duplicate image_id in predictions: " + p.image_id);
    }

    // Evaluation order is fixed by image_id up front so the fan-out cannot
    // influence the report.
    std::vector<const SceneGraph*> ordered;
    ordered.reserve(gt.size());
    for (const auto& g : gt) ordered.push_back(&g);
    std::sort(ordered.begin(), ordered.end(),
              [](const SceneGraph* a, const SceneGraph* b) { return a->image_id < b->image_id; });

    const SceneGraph empty_pred;
    EvalReport report;
    report.per_image.resize(ordered.size());

    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;

    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= ordered.size()) return;
            try {
                const SceneGraph& g = *ordered[i];
                auto it = pred_by_id.find(g.image_id);
                const SceneGraph& p = it == pred_by_id.end() ? empty_pred : *it->second;

                ImageEval ev;
                ev.image_id = g.image_id;
                const auto t0 = std::chrono::steady_clock::now();
                for (int k : opts.ks) ev.recall_at.emplace_back(k, recall_at_k(g, p, k, opts.match));
                if (opts.with_precision) {
                    const auto [pr, rc, f] = precision_recall_f1(g, p, opts.match);
                    ev.precision = pr;
                    ev.recall = rc;
                    ev.f1 = f;
                }
                const auto t1 = std::chrono::steady_clock::now();
                ev.matcher_time_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
                report.per_image[i] = std::move(ev);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    const int n_threads =
        static_cast<int>(std::min<std::size_t>(opts.jobs, std::max<std::size_t>(ordered.size(), 1)));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    const double n = static_cast<double>(report.per_image.size());
    for (std::size_t ki = 0; ki < opts.ks.size(); ++ki) {
        double sum = 0.0;
        for (const auto& ev : report.per_image) sum += ev.recall_at[ki].second;
        report.aggregate_recall_at.emplace_back(opts.ks[ki], n > 0 ? sum / n : 0.0);
    }
    if (opts.with_precision && n > 0) {
        double psum = 0.0, rsum = 0.0;
        for (const auto& ev : report.per_image) {
            psum += *ev.precision;
            rsum += *ev.recall;
        }
        report.precision = psum / n;
        report.recall = rsum / n;
        report.f1 = harmonic_f1(*report.precision, *report.recall);
    }
    return report;
}

} // namespace lfsgg
