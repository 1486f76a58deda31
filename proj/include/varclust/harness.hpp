#ifndef VARCLUST_HARNESS_HPP
#define VARCLUST_HARNESS_HPP

#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "varclust/dataset.hpp"
#include "varclust/local_clustering.hpp"
#include "varclust/merge.hpp"
#include "varclust/rng.hpp"
#include "varclust/summary.hpp"

namespace varclust {

enum class PartitionStrategy { random_uniform, contiguous };

inline const char* to_string(PartitionStrategy s) {
    return s == PartitionStrategy::random_uniform ? "random_uniform" : "contiguous";
}

// A site's slice of the input, with row indices back into the full dataset.
struct Shard {
    Dataset points;
    std::vector<std::size_t> source_rows;
};

// Disjoint cover of the dataset over `sites` shards. random_uniform draws a
// site per point from the seed; contiguous splits into blocks (the first
// N % sites blocks get the extra point).
inline std::vector<Shard> partition(const Dataset& dataset, int sites, PartitionStrategy strategy,
                                    std::uint64_t seed) {
    if (sites < 1) throw std::invalid_argument("partition: need at least one site");
    const std::size_t n = dataset.size();
    if (static_cast<std::size_t>(sites) > n)
        throw std::invalid_argument("partition: more sites (" + std::to_string(sites) +
                                    ") than points (" + std::to_string(n) + ")");
    std::vector<Shard> shards(sites);
    for (Shard& s : shards) s.points = Dataset(dataset.dim());
    if (strategy == PartitionStrategy::random_uniform) {
        Rng rng(seed);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t site = rng.uniform_index(sites);
            shards[site].points.push_back(dataset.row(i));
            shards[site].source_rows.push_back(i);
        }
    } else {
        const std::size_t base = n / sites;
        const std::size_t extra = n % sites;
        std::size_t next = 0;
        for (int s = 0; s < sites; ++s) {
            const std::size_t len = base + (static_cast<std::size_t>(s) < extra ? 1 : 0);
            for (std::size_t i = 0; i < len; ++i, ++next) {
                shards[s].points.push_back(dataset.row(next));
                shards[s].source_rows.push_back(next);
            }
        }
    }
    return shards;
}

struct SiteState {
    int site_index = 0;
    Shard shard;
    LocalResult local_result;
};

// Exact communication accounting for the gather step. Each summary costs
// d + 2 scalars (center, count, variance); the local-index bookkeeping is
// counted apart. The paper-model figure of 3 * d * sum(k_i) is reported
// as-is, without correcting it to the actual scalar count.
struct CommLedger {
    std::vector<std::int64_t> per_site_numbers_sent;
    std::int64_t id_overhead_numbers = 0;
    std::int64_t paper_model_elements = 0;
    std::int64_t bytes_at_64bit = 0;

    std::int64_t total_numbers_sent() const {
        return std::accumulate(per_site_numbers_sent.begin(), per_site_numbers_sent.end(),
                               std::int64_t{0});
    }
};

struct RunMetrics {
    double total_sse = 0.0;
    int k_global = 0;
    std::optional<double> centralized_baseline_sse;
    std::optional<double> adjusted_rand_index;
};

struct RunResult {
    std::vector<GlobalCluster> global_clusters;  // sorted by smallest member id
    std::map<SubClusterId, int> global_label_map;
    std::vector<SiteState> sites;
    std::vector<std::vector<int>> site_labels;  // global label per point, per site
    MergeTrace trace;
    CommLedger ledger;
    RunMetrics metrics;
    int perturbation_passes = 0;
    std::vector<std::string> warnings;
};

struct BaselineConfig {
    bool enabled = false;
    int k = 0;  // 0: use the discovered k_global
    std::optional<Algorithm> algorithm;
};

struct PipelineConfig {
    std::vector<LocalClusteringConfig> site_configs;  // one per site
    MergeConfig merge;
    PartitionStrategy partition_strategy = PartitionStrategy::random_uniform;
    int merging_site = 0;
    std::uint64_t seed = 0;
    BaselineConfig baseline;
};

struct BaselineResult {
    std::vector<int> assignment;
    double sse = 0.0;
    int k_effective = 0;
};

// Runs the chosen algorithm on the full dataset; used for SSE/ARI comparison.
inline BaselineResult centralized_baseline(const Dataset& dataset, int k, Algorithm algorithm,
                                           std::uint64_t seed) {
    LocalClusteringConfig cfg;
    cfg.algorithm = algorithm;
    cfg.k = k;
    cfg.seed = seed;
    const LocalResult local = run_local_clustering(dataset, cfg, 0);
    double sse = 0.0;
    for (const SubClusterSummary& s : local.summaries) sse += s.sse;
    return BaselineResult{local.assignment, sse, local.k_effective};
}

// Standard adjusted Rand index between two labelings of the same points.
// 1.0 for identical partitions up to relabeling.
inline double adjusted_rand_index(std::span<const int> labels_a, std::span<const int> labels_b) {
    if (labels_a.size() != labels_b.size())
        throw std::invalid_argument("adjusted_rand_index: length mismatch");
    const double n = static_cast<double>(labels_a.size());
    std::map<std::pair<int, int>, double> contingency;
    std::map<int, double> row_sums, col_sums;
    for (std::size_t i = 0; i < labels_a.size(); ++i) {
        contingency[{labels_a[i], labels_b[i]}] += 1.0;
        row_sums[labels_a[i]] += 1.0;
        col_sums[labels_b[i]] += 1.0;
    }
    const auto comb2 = [](double m) { return m * (m - 1.0) / 2.0; };
    double index = 0.0, sum_a = 0.0, sum_b = 0.0;
    for (const auto& [key, c] : contingency) index += comb2(c);
    for (const auto& [key, c] : row_sums) sum_a += comb2(c);
    for (const auto& [key, c] : col_sums) sum_b += comb2(c);
    const double expected = sum_a * sum_b / comb2(n);
    const double max_index = 0.5 * (sum_a + sum_b);
    if (max_index == expected) return index == expected ? 1.0 : 0.0;
    return (index - expected) / (max_index - expected);
}

namespace detail {

// Seed streams for the pipeline stages; site i uses stream i.
constexpr std::uint64_t kPartitionStream = 1u << 20;
constexpr std::uint64_t kBaselineStream = 1u << 21;

}  // namespace detail

// The full multi-site simulation: partition, per-site local clustering,
// gather with exact communication accounting, greedy merge, perturbation and
// label projection. Deterministic for a given (dataset, config, seed); the
// merging site only changes the (simulated) gather order, which the merge
// canonicalizes away.
inline RunResult run_pipeline(const Dataset& dataset, const PipelineConfig& cfg,
                              const std::vector<int>* ground_truth = nullptr) {
    const int sites = static_cast<int>(cfg.site_configs.size());
    if (sites < 1) throw std::invalid_argument("run_pipeline: no site configs");
    if (cfg.merging_site < 0 || cfg.merging_site >= sites)
        throw std::invalid_argument("run_pipeline: merging_site out of range");
    if (ground_truth && ground_truth->size() != dataset.size())
        throw std::invalid_argument("run_pipeline: ground truth length mismatch");

    RunResult res;
    std::vector<Shard> shards =
        partition(dataset, sites, cfg.partition_strategy, mix_seed(cfg.seed, detail::kPartitionStream));

    const std::size_t d = dataset.dim();
    std::int64_t configured_k_total = 0;
    for (int i = 0; i < sites; ++i) {
        LocalClusteringConfig site_cfg = cfg.site_configs[i];
        configured_k_total += site_cfg.k;
        if (static_cast<std::size_t>(site_cfg.k) > shards[i].points.size())
            throw std::invalid_argument("run_pipeline: site " + std::to_string(i) + " has " +
                                        std::to_string(shards[i].points.size()) +
                                        " points but k = " + std::to_string(site_cfg.k));
        site_cfg.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(i));
        SiteState state;
        state.site_index = i;
        state.local_result = run_local_clustering(shards[i].points, site_cfg, i);
        state.shard = std::move(shards[i]);
        if (state.local_result.k_effective < site_cfg.k)
            res.warnings.push_back("site " + std::to_string(i) + ": k_effective " +
                                   std::to_string(state.local_result.k_effective) + " < k " +
                                   std::to_string(site_cfg.k));
        res.sites.push_back(std::move(state));
    }

    // Gather at the merging site: its own summaries first, then the rest in
    // site order. The ledger counts every site's summaries, self-delivery
    // included.
    std::vector<SubClusterSummary> gathered;
    res.ledger.per_site_numbers_sent.assign(sites, 0);
    auto gather_site = [&](int i) {
        const LocalResult& lr = res.sites[i].local_result;
        gathered.insert(gathered.end(), lr.summaries.begin(), lr.summaries.end());
        res.ledger.per_site_numbers_sent[i] =
            static_cast<std::int64_t>(d + 2) * lr.k_effective;
        res.ledger.id_overhead_numbers += lr.k_effective;
    };
    gather_site(cfg.merging_site);
    for (int i = 0; i < sites; ++i)
        if (i != cfg.merging_site) gather_site(i);
    res.ledger.paper_model_elements = 3 * static_cast<std::int64_t>(d) * configured_k_total;
    res.ledger.bytes_at_64bit = 8 * res.ledger.total_numbers_sent();

    MergeResult merged = greedy_merge(gathered, cfg.merge);
    PerturbResult refined = perturb(std::move(merged.globals), gathered, cfg.merge);
    res.trace = std::move(merged.trace);
    res.trace.events.insert(res.trace.events.end(), refined.trace.events.begin(),
                            refined.trace.events.end());
    res.perturbation_passes = refined.passes;

    res.global_clusters = std::move(refined.globals);
    std::sort(res.global_clusters.begin(), res.global_clusters.end(),
              [](const GlobalCluster& a, const GlobalCluster& b) {
                  return a.members.front() < b.members.front();
              });
    for (std::size_t g = 0; g < res.global_clusters.size(); ++g)
        for (const SubClusterId& id : res.global_clusters[g].members)
            res.global_label_map[id] = static_cast<int>(g);

    res.site_labels.resize(sites);
    for (int i = 0; i < sites; ++i) {
        const LocalResult& lr = res.sites[i].local_result;
        res.site_labels[i].resize(lr.assignment.size());
        for (std::size_t p = 0; p < lr.assignment.size(); ++p)
            res.site_labels[i][p] = res.global_label_map.at(lr.summaries[lr.assignment[p]].id);
    }

    res.metrics.total_sse = total_sse(res.global_clusters);
    res.metrics.k_global = static_cast<int>(res.global_clusters.size());

    if (cfg.baseline.enabled) {
        const int k = cfg.baseline.k > 0 ? cfg.baseline.k : res.metrics.k_global;
        const Algorithm algo = cfg.baseline.algorithm.value_or(cfg.site_configs[0].algorithm);
        res.metrics.centralized_baseline_sse =
            centralized_baseline(dataset, k, algo, mix_seed(cfg.seed, detail::kBaselineStream)).sse;
    }

    if (ground_truth) {
        std::vector<int> predicted(dataset.size(), -1);
        for (int i = 0; i < sites; ++i)
            for (std::size_t p = 0; p < res.sites[i].shard.source_rows.size(); ++p)
                predicted[res.sites[i].shard.source_rows[p]] = res.site_labels[i][p];
        res.metrics.adjusted_rand_index = adjusted_rand_index(predicted, *ground_truth);
    }
    return res;
}

}  // namespace varclust

#endif  // VARCLUST_HARNESS_HPP
