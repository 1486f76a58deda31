#ifndef VARCLUST_LOCAL_CLUSTERING_HPP
#define VARCLUST_LOCAL_CLUSTERING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "varclust/dataset.hpp"
#include "varclust/rng.hpp"
#include "varclust/summary.hpp"

namespace varclust {

enum class Algorithm { kmeans, kharmonic };

inline const char* to_string(Algorithm a) {
    return a == Algorithm::kmeans ? "kmeans" : "kharmonic";
}

struct LocalClusteringConfig {
    Algorithm algorithm = Algorithm::kmeans;
    int k = 1;
    int max_iterations = 100;
    double convergence_tol = 1e-6;
    std::uint64_t seed = 0;
    double khm_power = 3.5;  // distance power p of KHM_p, must be > 2
};

struct LocalResult {
    std::vector<int> assignment;               // dense sub-cluster index per point
    std::vector<SubClusterSummary> summaries;  // ids (site, 0..k_effective-1)
    std::vector<double> objective_trace;       // objective after each iteration
    int k_effective = 0;
};

// One summary per nonempty label, ids (site, dense re-index by ascending
// label). Concatenation of the per-label groups covers every point once.
inline std::vector<SubClusterSummary> summarize_result(const Dataset& points,
                                                       std::span<const int> assignment,
                                                       int site_index) {
    if (assignment.size() != points.size())
        throw std::invalid_argument("summarize_result: assignment length mismatch");
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < assignment.size(); ++i)
        groups[assignment[i]].push_back(i);
    std::vector<SubClusterSummary> out;
    out.reserve(groups.size());
    int next = 0;
    for (const auto& [label, rows] : groups) {
        Dataset member_points(points.dim());
        for (std::size_t r : rows) member_points.push_back(points.row(r));
        out.push_back(summarize(member_points, SubClusterId{site_index, next++}));
    }
    return out;
}

namespace detail {

inline void check_clustering_inputs(const Dataset& points, const LocalClusteringConfig& cfg) {
    if (points.empty()) throw std::invalid_argument("clustering: empty dataset");
    if (cfg.k < 1) throw std::invalid_argument("clustering: k must be >= 1");
    if (static_cast<std::size_t>(cfg.k) > points.size())
        throw std::invalid_argument("clustering: k (" + std::to_string(cfg.k) +
                                    ") exceeds point count (" + std::to_string(points.size()) + ")");
    if (cfg.max_iterations < 1) throw std::invalid_argument("clustering: max_iterations must be >= 1");
    if (cfg.convergence_tol < 0.0) throw std::invalid_argument("clustering: negative convergence_tol");
    if (cfg.algorithm == Algorithm::kharmonic && cfg.khm_power <= 2.0)
        throw std::invalid_argument("clustering: khm_power must be > 2");
}

inline std::pair<int, double> nearest_center(std::span<const double> row,
                                             const std::vector<std::vector<double>>& centers) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < centers.size(); ++j) {
        const double d = squared_distance(row, centers[j]);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(j);
        }
    }
    return {best, best_d};
}

// Relabels to dense indices in ascending label order and drops empty labels.
inline std::vector<int> densify_labels(std::vector<int>& assignment, int k) {
    std::vector<int> remap(k, -1);
    std::vector<char> seen(k, 0);
    for (int a : assignment) seen[a] = 1;
    int next = 0;
    for (int label = 0; label < k; ++label)
        if (seen[label]) remap[label] = next++;
    for (int& a : assignment) a = remap[a];
    return remap;
}

inline LocalResult finalize_result(const Dataset& points, std::vector<int> assignment, int k,
                                   std::vector<double> trace, int site_index) {
    densify_labels(assignment, k);
    LocalResult res;
    res.summaries = summarize_result(points, assignment, site_index);
    res.assignment = std::move(assignment);
    res.objective_trace = std::move(trace);
    res.k_effective = static_cast<int>(res.summaries.size());
    return res;
}

}  // namespace detail

// k-means++ D^2 seeding. Falls back to the first unchosen point when all
// remaining weights vanish (duplicate-heavy data).
inline std::vector<std::vector<double>> kmeanspp_centers(const Dataset& points, int k, Rng& rng) {
    const std::size_t n = points.size();
    std::vector<std::vector<double>> centers;
    centers.reserve(k);
    std::vector<char> chosen(n, 0);
    std::size_t first = rng.uniform_index(n);
    chosen[first] = 1;
    centers.emplace_back(points.row(first).begin(), points.row(first).end());
    std::vector<double> dist2(n);
    for (std::size_t i = 0; i < n; ++i) dist2[i] = squared_distance(points.row(i), centers[0]);
    while (static_cast<int>(centers.size()) < k) {
        double total = 0.0;
        for (double w : dist2) total += w;
        std::size_t pick = n;
        if (total > 0.0) {
            pick = rng.categorical(dist2);
        } else {
            for (std::size_t i = 0; i < n; ++i)
                if (!chosen[i]) {
                    pick = i;
                    break;
                }
            if (pick == n) pick = 0;
        }
        chosen[pick] = 1;
        centers.emplace_back(points.row(pick).begin(), points.row(pick).end());
        for (std::size_t i = 0; i < n; ++i)
            dist2[i] = std::min(dist2[i], squared_distance(points.row(i), centers.back()));
    }
    return centers;
}

// Lloyd iterations from explicit initial centers. Deterministic: nearest-center
// ties go to the lowest index, and emptied clusters are re-seeded at the point
// farthest from its assigned center (skipped when that distance is zero or the
// donor cluster is a singleton).
inline LocalResult kmeans_from_centers(const Dataset& points,
                                       std::vector<std::vector<double>> centers,
                                       const LocalClusteringConfig& cfg, int site_index = 0) {
    detail::check_clustering_inputs(points, cfg);
    const std::size_t n = points.size();
    const std::size_t d = points.dim();
    const int k = static_cast<int>(centers.size());
    std::vector<int> assignment(n, 0);
    std::vector<int> prev_assignment;
    std::vector<std::int64_t> sizes(k, 0);
    std::vector<double> trace;
    double prev_obj = std::numeric_limits<double>::infinity();

    for (int iter = 0; iter < cfg.max_iterations; ++iter) {
        prev_assignment = assignment;
        std::fill(sizes.begin(), sizes.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            assignment[i] = detail::nearest_center(points.row(i), centers).first;
            ++sizes[assignment[i]];
        }
        bool repaired = false;
        for (int c = 0; c < k; ++c) {
            if (sizes[c] != 0) continue;
            double worst = 0.0;
            std::size_t worst_idx = n;
            for (std::size_t i = 0; i < n; ++i) {
                if (sizes[assignment[i]] < 2) continue;
                const double dist = squared_distance(points.row(i), centers[assignment[i]]);
                if (dist > worst) {
                    worst = dist;
                    worst_idx = i;
                }
            }
            if (worst_idx == n) continue;  // only zero-distance or singleton donors left
            --sizes[assignment[worst_idx]];
            assignment[worst_idx] = c;
            sizes[c] = 1;
            centers[c].assign(points.row(worst_idx).begin(), points.row(worst_idx).end());
            repaired = true;
        }
        for (int c = 0; c < k; ++c) {
            if (sizes[c] == 0) continue;
            std::fill(centers[c].begin(), centers[c].end(), 0.0);
            for (std::size_t i = 0; i < n; ++i)
                if (assignment[i] == c)
                    for (std::size_t j = 0; j < d; ++j) centers[c][j] += points.row(i)[j];
            for (std::size_t j = 0; j < d; ++j) centers[c][j] /= static_cast<double>(sizes[c]);
        }
        double obj = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            obj += squared_distance(points.row(i), centers[assignment[i]]);
        trace.push_back(obj);
        if (!repaired && assignment == prev_assignment) break;
        if (std::isfinite(prev_obj) && prev_obj - obj <= cfg.convergence_tol * prev_obj) break;
        prev_obj = obj;
    }
    return detail::finalize_result(points, std::move(assignment), k, std::move(trace), site_index);
}

// KHM_p center updates from explicit initial centers. Per-point distances are
// floored at 1e-12 and the update weights are computed relative to the
// nearest-center distance, which keeps d^-p and d^-(p+2) in range for any
// coordinate scale. The final hard assignment is nearest-center.
inline LocalResult kharmonic_from_centers(const Dataset& points,
                                          std::vector<std::vector<double>> centers,
                                          const LocalClusteringConfig& cfg, int site_index = 0) {
    detail::check_clustering_inputs(points, cfg);
    constexpr double kDistFloor = 1e-12;
    const std::size_t n = points.size();
    const std::size_t d = points.dim();
    const int k = static_cast<int>(centers.size());
    const double p = cfg.khm_power;
    std::vector<double> trace;
    std::vector<double> dist(k);
    std::vector<std::vector<double>> num(k, std::vector<double>(d));
    std::vector<double> den(k);
    double prev_obj = std::numeric_limits<double>::infinity();

    for (int iter = 0; iter < cfg.max_iterations; ++iter) {
        for (int c = 0; c < k; ++c) {
            std::fill(num[c].begin(), num[c].end(), 0.0);
            den[c] = 0.0;
        }
        for (std::size_t i = 0; i < n; ++i) {
            const auto row = points.row(i);
            double dmin = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                dist[c] = std::max(euclidean_distance(row, centers[c]), kDistFloor);
                dmin = std::min(dmin, dist[c]);
            }
            // q_c = d_c^-(p+2) / (sum_l d_l^-p)^2, expressed via ratios r = dmin/d
            double sum_rp = 0.0;
            for (int c = 0; c < k; ++c) sum_rp += std::pow(dmin / dist[c], p);
            const double scale = std::pow(dmin, p - 2.0) / (sum_rp * sum_rp);
            for (int c = 0; c < k; ++c) {
                const double q = scale * std::pow(dmin / dist[c], p + 2.0);
                den[c] += q;
                for (std::size_t j = 0; j < d; ++j) num[c][j] += q * row[j];
            }
        }
        for (int c = 0; c < k; ++c) {
            if (den[c] <= 0.0) continue;  // no point contributes; keep position
            for (std::size_t j = 0; j < d; ++j) centers[c][j] = num[c][j] / den[c];
        }
        double obj = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto row = points.row(i);
            double dmin = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                dist[c] = std::max(euclidean_distance(row, centers[c]), kDistFloor);
                dmin = std::min(dmin, dist[c]);
            }
            double sum_rp = 0.0;
            for (int c = 0; c < k; ++c) sum_rp += std::pow(dmin / dist[c], p);
            obj += static_cast<double>(k) * std::pow(dmin, p) / sum_rp;
        }
        trace.push_back(obj);
        if (std::isfinite(prev_obj) && std::abs(prev_obj - obj) <= cfg.convergence_tol * prev_obj)
            break;
        prev_obj = obj;
    }
    std::vector<int> assignment(n);
    for (std::size_t i = 0; i < n; ++i)
        assignment[i] = detail::nearest_center(points.row(i), centers).first;
    return detail::finalize_result(points, std::move(assignment), k, std::move(trace), site_index);
}

inline LocalResult kmeans(const Dataset& points, const LocalClusteringConfig& cfg,
                          int site_index = 0) {
    detail::check_clustering_inputs(points, cfg);
    Rng rng(cfg.seed);
    return kmeans_from_centers(points, kmeanspp_centers(points, cfg.k, rng), cfg, site_index);
}

inline LocalResult kharmonic_means(const Dataset& points, const LocalClusteringConfig& cfg,
                                   int site_index = 0) {
    detail::check_clustering_inputs(points, cfg);
    Rng rng(cfg.seed);
    return kharmonic_from_centers(points, kmeanspp_centers(points, cfg.k, rng), cfg, site_index);
}

inline LocalResult run_local_clustering(const Dataset& points, const LocalClusteringConfig& cfg,
                                        int site_index = 0) {
    return cfg.algorithm == Algorithm::kmeans ? kmeans(points, cfg, site_index)
                                              : kharmonic_means(points, cfg, site_index);
}

}  // namespace varclust

#endif  // VARCLUST_LOCAL_CLUSTERING_HPP
