#ifndef VARCLUST_SUMMARY_HPP
#define VARCLUST_SUMMARY_HPP

#include <algorithm>
#include <atomic>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "varclust/dataset.hpp"

namespace varclust {

// Identifier of a locally produced sub-cluster: (site, dense local index).
struct SubClusterId {
    int site = 0;
    int index = 0;

    auto operator<=>(const SubClusterId&) const = default;

    std::string str() const { return std::to_string(site) + ":" + std::to_string(index); }
};

// The unit of communication between sites: size, center and unnormalized SSE
// of one sub-cluster. `sse` is the sum of squared deviations from `center`,
// not divided by the count; the normalized view is computed on demand.
struct SubClusterSummary {
    SubClusterId id;
    std::int64_t count = 0;
    std::vector<double> center;
    double sse = 0.0;

    double normalized_variance() const { return sse / static_cast<double>(count); }
};

// A logical union of sub-clusters. `members` are ids only; raw data is never
// pooled. `summary` is the fold of merge_stats over the members.
struct GlobalCluster {
    std::vector<SubClusterId> members;
    SubClusterSummary summary;
    std::optional<std::vector<SubClusterId>> border;
};

// Count of clamp events where a removal produced a negative SSE beyond the
// cancellation tolerance. Exposed so callers and tests can detect misuse.
inline std::atomic<std::uint64_t>& numeric_warning_count() {
    static std::atomic<std::uint64_t> count{0};
    return count;
}

namespace detail {
inline void check_same_dim(const SubClusterSummary& a, const SubClusterSummary& b) {
    if (a.center.size() != b.center.size())
        throw std::invalid_argument("summary dimension mismatch: " +
                                    std::to_string(a.center.size()) + " vs " +
                                    std::to_string(b.center.size()));
}
}  // namespace detail

// Exact SSE growth when pooling two clusters, identical to Ward's linkage:
// (n_a * n_b / (n_a + n_b)) * ||c_a - c_b||^2. Symmetric and nonnegative;
// zero exactly when the centers coincide.
inline double variance_increase(const SubClusterSummary& a, const SubClusterSummary& b) {
    detail::check_same_dim(a, b);
    const double na = static_cast<double>(a.count);
    const double nb = static_cast<double>(b.count);
    return na * nb / (na + nb) * squared_distance(a.center, b.center);
}

// Pools two summaries. The result is exactly the summary of the union of the
// underlying point sets: counts add, the center is the count-weighted mean,
// and the SSE picks up the variance increase. The result takes the smaller id
// so that folds stay deterministic.
inline SubClusterSummary merge_stats(const SubClusterSummary& a, const SubClusterSummary& b) {
    detail::check_same_dim(a, b);
    if (a.id == b.id)
        throw std::invalid_argument("merge_stats: operands share id " + a.id.str());
    SubClusterSummary out;
    out.id = std::min(a.id, b.id);
    out.count = a.count + b.count;
    const double na = static_cast<double>(a.count);
    const double nb = static_cast<double>(b.count);
    const double n = na + nb;
    out.center.resize(a.center.size());
    for (std::size_t i = 0; i < out.center.size(); ++i)
        out.center[i] = (na * a.center[i] + nb * b.center[i]) / n;
    out.sse = a.sse + b.sse + variance_increase(a, b);
    return out;
}

// Exact inverse of merge_stats: removes `part` from `whole`, recovering the
// summary of the complement. Small negative SSE from cancellation (within
// 1e-9 * whole.sse) is clamped silently; larger negatives are clamped too but
// bump numeric_warning_count(), since they indicate the part was never merged
// into the whole.
inline SubClusterSummary remove_stats(const SubClusterSummary& whole, const SubClusterSummary& part) {
    detail::check_same_dim(whole, part);
    if (part.count >= whole.count)
        throw std::invalid_argument("remove_stats: part.count (" + std::to_string(part.count) +
                                    ") must be < whole.count (" + std::to_string(whole.count) + ")");
    SubClusterSummary out;
    out.id = whole.id;
    out.count = whole.count - part.count;
    const double nw = static_cast<double>(whole.count);
    const double np = static_cast<double>(part.count);
    const double nr = nw - np;
    out.center.resize(whole.center.size());
    for (std::size_t i = 0; i < out.center.size(); ++i)
        out.center[i] = (nw * whole.center[i] - np * part.center[i]) / nr;
    out.sse = whole.sse - part.sse - variance_increase(out, part);
    if (out.sse < 0.0) {
        if (out.sse < -1e-9 * whole.sse) numeric_warning_count().fetch_add(1);
        out.sse = 0.0;
    }
    return out;
}

// Exact summary of a point set: two-pass mean then squared deviations.
inline SubClusterSummary summarize(const Dataset& points, SubClusterId id = {}) {
    if (points.empty()) throw std::invalid_argument("summarize: empty point set");
    const std::size_t n = points.size();
    const std::size_t d = points.dim();
    SubClusterSummary out;
    out.id = id;
    out.count = static_cast<std::int64_t>(n);
    out.center.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = points.row(i);
        for (std::size_t j = 0; j < d; ++j) out.center[j] += row[j];
    }
    for (std::size_t j = 0; j < d; ++j) out.center[j] /= static_cast<double>(n);
    out.sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) out.sse += squared_distance(points.row(i), out.center);
    return out;
}

inline SubClusterSummary summarize(const std::vector<Point>& points, SubClusterId id = {}) {
    return summarize(Dataset::from_points(points), id);
}

// S = sum of per-cluster SSE over the current global clustering.
inline double total_sse(const std::vector<GlobalCluster>& globals) {
    double s = 0.0;
    for (const GlobalCluster& g : globals) s += g.summary.sse;
    return s;
}

}  // namespace varclust

#endif  // VARCLUST_SUMMARY_HPP
