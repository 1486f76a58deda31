#ifndef VARCLUST_MERGE_HPP
#define VARCLUST_MERGE_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "varclust/format.hpp"
#include "varclust/summary.hpp"

namespace varclust {

struct MergeConfig {
    enum class ConstraintMode { normalized_variance, raw_sse };

    ConstraintMode constraint_mode = ConstraintMode::normalized_variance;
    double sigma_factor = 2.0;          // the "twice" in the merge limit
    double border_fraction = 0.2;       // border size as a fraction of member count
    double multi_attr_epsilon = 0.1;    // near-equidistance slack for multi-attributed members
    int max_perturbation_passes = 5;
    double zero_variance_floor = 1e-12;  // relative to squared coordinate scale
};

struct TraceEvent {
    enum class Kind { merge, move, reject };

    Kind kind = Kind::merge;
    std::vector<SubClusterId> actors;  // merge: the two cluster reps; move/reject: moved id, src rep, dst rep
    double variance_delta = 0.0;
    double total_sse_after = 0.0;
};

inline const char* to_string(TraceEvent::Kind k) {
    switch (k) {
        case TraceEvent::Kind::merge: return "merge";
        case TraceEvent::Kind::move: return "move";
        default: return "reject";
    }
}

// Ordered log of merge/perturbation actions; serializes one event per line
// for regression diffing.
struct MergeTrace {
    std::vector<TraceEvent> events;

    void write(std::ostream& os) const {
        for (const TraceEvent& e : events) os << to_line(e) << '\n';
    }

    static std::string to_line(const TraceEvent& e) {
        std::string line = to_string(e.kind);
        for (const SubClusterId& id : e.actors) line += " " + id.str();
        line += " " + format_double(e.variance_delta);
        line += " " + format_double(e.total_sse_after);
        return line;
    }
};

// Absolute floor used by the zero-variance merge rule: relative floor scaled
// by the squared coordinate magnitude of the summaries involved.
inline double resolve_zero_floor(std::span<const SubClusterSummary> summaries,
                                 const MergeConfig& cfg) {
    double scale = 1.0;
    for (const SubClusterSummary& s : summaries)
        for (double c : s.center) scale = std::max(scale, std::abs(c));
    return cfg.zero_variance_floor * scale * scale;
}

// Admissibility of merging two cluster summaries: the pooled (normalized)
// variance must stay below sigma_factor times the highest individual
// sub-cluster variance. For two bare summaries that reference is their own
// variances; when folding grown clusters, greedy_merge passes the maximum
// over all gathered sub-clusters via sigma_ref_a/b, which keeps the limit
// anchored to the local granularity instead of growing with the unions.
// Zero-increase merges are always admissible. When the reference is zero the
// limit degenerates, so the increase per point is compared against the
// zero-variance floor instead.
inline bool merge_predicate(const SubClusterSummary& a, const SubClusterSummary& b,
                            const MergeConfig& cfg, double zero_floor_abs = -1.0,
                            double sigma_ref_a = -1.0, double sigma_ref_b = -1.0) {
    const double inc = variance_increase(a, b);
    if (inc == 0.0) return true;
    const bool raw = cfg.constraint_mode == MergeConfig::ConstraintMode::raw_sse;
    if (sigma_ref_a < 0.0) sigma_ref_a = raw ? a.sse : a.normalized_variance();
    if (sigma_ref_b < 0.0) sigma_ref_b = raw ? b.sse : b.normalized_variance();
    const double limit = cfg.sigma_factor * std::max(sigma_ref_a, sigma_ref_b);
    const double n_new = static_cast<double>(a.count + b.count);
    if (limit == 0.0) {
        if (zero_floor_abs < 0.0) {
            const SubClusterSummary ops[] = {a, b};
            zero_floor_abs = resolve_zero_floor(ops, cfg);
        }
        return inc / n_new < zero_floor_abs;
    }
    const double sse_new = a.sse + b.sse + inc;
    return (raw ? sse_new : sse_new / n_new) < limit;
}

namespace detail {

inline std::map<SubClusterId, const SubClusterSummary*> index_summaries(
    std::span<const SubClusterSummary> summaries) {
    std::map<SubClusterId, const SubClusterSummary*> index;
    for (const SubClusterSummary& s : summaries)
        if (!index.emplace(s.id, &s).second)
            throw std::invalid_argument("duplicate sub-cluster id " + s.id.str());
    return index;
}

inline const SubClusterSummary& lookup(
    const std::map<SubClusterId, const SubClusterSummary*>& index, const SubClusterId& id) {
    const auto it = index.find(id);
    if (it == index.end())
        throw std::invalid_argument("unknown sub-cluster id " + id.str());
    return *it->second;
}

}  // namespace detail

// The k member sub-clusters whose centers lie farthest from the cluster's
// aggregate center. k = 0 gives the empty set, k >= member count gives all
// members. Ties break toward the smaller id.
inline std::vector<SubClusterId> compute_border(const GlobalCluster& g,
                                                std::span<const SubClusterSummary> summaries,
                                                int k) {
    if (k <= 0) return {};
    const auto index = detail::index_summaries(summaries);
    std::vector<std::pair<double, SubClusterId>> by_distance;
    by_distance.reserve(g.members.size());
    for (const SubClusterId& id : g.members) {
        const SubClusterSummary& s = detail::lookup(index, id);
        by_distance.emplace_back(euclidean_distance(s.center, g.summary.center), id);
    }
    std::sort(by_distance.begin(), by_distance.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    const std::size_t take = std::min<std::size_t>(k, by_distance.size());
    std::vector<SubClusterId> out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i) out.push_back(by_distance[i].second);
    return out;
}

// Members nearly equidistant between their own global center and the nearest
// foreign one: dist(x, foreign) <= (1 + eps) * dist(x, own).
inline std::vector<SubClusterId> find_multi_attributed(
    const std::vector<GlobalCluster>& globals, std::span<const SubClusterSummary> summaries,
    const MergeConfig& cfg) {
    if (globals.size() < 2) return {};
    const auto index = detail::index_summaries(summaries);
    std::vector<SubClusterId> out;
    for (std::size_t i = 0; i < globals.size(); ++i) {
        for (const SubClusterId& id : globals[i].members) {
            const SubClusterSummary& s = detail::lookup(index, id);
            const double own = euclidean_distance(s.center, globals[i].summary.center);
            double foreign = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < globals.size(); ++j)
                if (j != i)
                    foreign = std::min(foreign,
                                       euclidean_distance(s.center, globals[j].summary.center));
            if (foreign <= (1.0 + cfg.multi_attr_epsilon) * own) out.push_back(id);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

struct MergeResult {
    std::vector<GlobalCluster> globals;
    MergeTrace trace;
};

// The merge limit reference used by greedy_merge: the highest individual
// variance (or raw SSE in raw mode) over the gathered sub-cluster summaries.
inline double highest_individual_variance(std::span<const SubClusterSummary> summaries,
                                          const MergeConfig& cfg) {
    const bool raw = cfg.constraint_mode == MergeConfig::ConstraintMode::raw_sse;
    double ref = 0.0;
    for (const SubClusterSummary& s : summaries)
        ref = std::max(ref, raw ? s.sse : s.normalized_variance());
    return ref;
}

// Greedy logical merge: repeatedly unite the admissible pair of clusters with
// the minimum variance increase until none qualifies. The admissibility limit
// is sigma_factor times the highest individual sub-cluster variance of the
// input, fixed up front. Input order is irrelevant — summaries are
// canonicalized by id, and ties break toward the lexicographically smallest
// pair of representative ids.
inline MergeResult greedy_merge(std::vector<SubClusterSummary> summaries, const MergeConfig& cfg) {
    if (summaries.empty()) throw std::invalid_argument("greedy_merge: no summaries");
    std::sort(summaries.begin(), summaries.end(),
              [](const SubClusterSummary& a, const SubClusterSummary& b) { return a.id < b.id; });
    detail::index_summaries(summaries);  // id uniqueness check
    const double zero_floor = resolve_zero_floor(summaries, cfg);
    const double sigma_ref = highest_individual_variance(summaries, cfg);

    MergeResult res;
    res.globals.reserve(summaries.size());
    double running_total = 0.0;
    for (SubClusterSummary& s : summaries) {
        running_total += s.sse;
        res.globals.push_back(GlobalCluster{{s.id}, std::move(s), std::nullopt});
    }

    auto& globals = res.globals;
    while (globals.size() > 1) {
        std::size_t best_i = 0, best_j = 0;
        double best_inc = std::numeric_limits<double>::infinity();
        bool found = false;
        for (std::size_t i = 0; i + 1 < globals.size(); ++i) {
            for (std::size_t j = i + 1; j < globals.size(); ++j) {
                const double inc = variance_increase(globals[i].summary, globals[j].summary);
                if (inc >= best_inc) continue;
                if (!merge_predicate(globals[i].summary, globals[j].summary, cfg, zero_floor,
                                     sigma_ref, sigma_ref))
                    continue;
                best_inc = inc;
                best_i = i;
                best_j = j;
                found = true;
            }
        }
        if (!found) break;
        GlobalCluster& dst = globals[best_i];
        GlobalCluster& src = globals[best_j];
        res.trace.events.push_back(TraceEvent{TraceEvent::Kind::merge,
                                              {dst.summary.id, src.summary.id},
                                              best_inc,
                                              running_total + best_inc});
        running_total += best_inc;
        dst.summary = merge_stats(dst.summary, src.summary);
        std::vector<SubClusterId> merged;
        merged.reserve(dst.members.size() + src.members.size());
        std::merge(dst.members.begin(), dst.members.end(), src.members.begin(), src.members.end(),
                   std::back_inserter(merged));
        dst.members = std::move(merged);
        globals.erase(globals.begin() + best_j);
    }
    return res;
}

struct PerturbResult {
    std::vector<GlobalCluster> globals;
    MergeTrace trace;
    int passes = 0;
};

namespace detail {

inline int border_size(double fraction, std::size_t member_count) {
    return std::max<int>(1, static_cast<int>(std::llround(fraction * static_cast<double>(member_count))));
}

}  // namespace detail

// Border/multi-attributed refinement after merging: candidates are tried
// closest-to-foreign-cluster first, each move is applied only when the total
// SSE strictly decreases, and a source cluster is never emptied. Passes
// repeat until one makes no move or the configured cap is hit. The returned
// clusters carry their final borders.
inline PerturbResult perturb(std::vector<GlobalCluster> globals,
                             std::span<const SubClusterSummary> summaries,
                             const MergeConfig& cfg) {
    const auto index = detail::index_summaries(summaries);
    PerturbResult res;
    double running_total = 0.0;
    for (const GlobalCluster& g : globals) running_total += g.summary.sse;

    auto cluster_of = [&globals](const SubClusterId& id) {
        for (std::size_t i = 0; i < globals.size(); ++i)
            if (std::binary_search(globals[i].members.begin(), globals[i].members.end(), id))
                return i;
        throw std::invalid_argument("perturb: id " + id.str() + " not in any cluster");
    };

    if (globals.size() >= 2) {
        for (int pass = 0; pass < cfg.max_perturbation_passes; ++pass) {
            ++res.passes;
            std::set<SubClusterId> candidate_set;
            for (const GlobalCluster& g : globals) {
                const int kb = detail::border_size(cfg.border_fraction, g.members.size());
                for (const SubClusterId& id : compute_border(g, summaries, kb))
                    candidate_set.insert(id);
            }
            for (const SubClusterId& id : find_multi_attributed(globals, summaries, cfg))
                candidate_set.insert(id);

            std::vector<std::pair<double, SubClusterId>> ordered;
            ordered.reserve(candidate_set.size());
            for (const SubClusterId& id : candidate_set) {
                const SubClusterSummary& s = detail::lookup(index, id);
                const std::size_t own = cluster_of(id);
                double foreign = std::numeric_limits<double>::infinity();
                for (std::size_t j = 0; j < globals.size(); ++j)
                    if (j != own)
                        foreign = std::min(
                            foreign, euclidean_distance(s.center, globals[j].summary.center));
                ordered.emplace_back(foreign, id);
            }
            std::sort(ordered.begin(), ordered.end());

            bool moved_any = false;
            for (const auto& entry : ordered) {
                const SubClusterId id = entry.second;
                const SubClusterSummary& x = detail::lookup(index, id);
                const std::size_t src = cluster_of(id);
                if (globals[src].members.size() < 2) continue;  // never empty a cluster
                std::size_t dst = src;
                double best = std::numeric_limits<double>::infinity();
                for (std::size_t j = 0; j < globals.size(); ++j) {
                    if (j == src) continue;
                    const double d = euclidean_distance(x.center, globals[j].summary.center);
                    if (d < best) {
                        best = d;
                        dst = j;
                    }
                }
                const SubClusterSummary new_src = remove_stats(globals[src].summary, x);
                const SubClusterSummary new_dst = merge_stats(globals[dst].summary, x);
                const double delta = new_src.sse + new_dst.sse -
                                     (globals[src].summary.sse + globals[dst].summary.sse);
                TraceEvent event;
                event.actors = {id, globals[src].summary.id, globals[dst].summary.id};
                event.variance_delta = delta;
                if (delta < 0.0) {
                    auto& sm = globals[src].members;
                    sm.erase(std::lower_bound(sm.begin(), sm.end(), id));
                    auto& dm = globals[dst].members;
                    dm.insert(std::lower_bound(dm.begin(), dm.end(), id), id);
                    globals[src].summary = new_src;
                    globals[src].summary.id = sm.front();
                    globals[dst].summary = new_dst;
                    running_total += delta;
                    event.kind = TraceEvent::Kind::move;
                    moved_any = true;
                } else {
                    event.kind = TraceEvent::Kind::reject;
                }
                event.total_sse_after = running_total;
                res.trace.events.push_back(std::move(event));
            }
            if (!moved_any) break;
        }
    }

    for (GlobalCluster& g : globals) {
        const int kb = detail::border_size(cfg.border_fraction, g.members.size());
        g.border = compute_border(g, summaries, kb);
    }
    res.globals = std::move(globals);
    return res;
}

}  // namespace varclust

#endif  // VARCLUST_MERGE_HPP
