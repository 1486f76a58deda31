#ifndef VARCLUST_EXPERIMENT_HPP
#define VARCLUST_EXPERIMENT_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "varclust/dataio.hpp"
#include "varclust/harness.hpp"

namespace varclust {

// Configuration / usage problems; the CLI maps these to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CsvSource {
    std::string path;
    bool has_header = false;
    std::optional<int> label_column;
};

// One experiment: dataset source, site layout, per-site clustering settings,
// merge settings and output location. Mirrors the JSON config document.
struct ExperimentConfig {
    std::string name = "custom";
    std::optional<GaussianMixtureSpec> generator;
    std::optional<std::uint64_t> generator_seed;  // unset: derived from the run seed
    std::optional<CsvSource> csv;
    FeatureRecipe features = FeatureRecipe::identity;
    int sites = 1;
    std::vector<LocalClusteringConfig> local;  // one entry, or one per site
    MergeConfig merge;
    PartitionStrategy partition = PartitionStrategy::random_uniform;
    int merging_site = 0;
    BaselineConfig baseline;
    std::uint64_t seed = 1;
    std::string out_dir;  // empty: nothing written
};

namespace detail {

constexpr std::uint64_t kGeneratorStream = 1u << 22;

inline Algorithm parse_algorithm(const std::string& s) {
    if (s == "kmeans") return Algorithm::kmeans;
    if (s == "kharmonic" || s == "khm") return Algorithm::kharmonic;
    throw ConfigError("unknown algorithm '" + s + "' (expected kmeans|khm)");
}

inline MergeConfig::ConstraintMode parse_constraint(const std::string& s) {
    if (s == "normalized" || s == "normalized_variance") return MergeConfig::ConstraintMode::normalized_variance;
    if (s == "raw" || s == "raw_sse") return MergeConfig::ConstraintMode::raw_sse;
    throw ConfigError("unknown constraint mode '" + s + "' (expected normalized|raw)");
}

inline PartitionStrategy parse_partition(const std::string& s) {
    if (s == "random_uniform") return PartitionStrategy::random_uniform;
    if (s == "contiguous") return PartitionStrategy::contiguous;
    throw ConfigError("unknown partition strategy '" + s + "'");
}

inline FeatureRecipe parse_features(const std::string& s) {
    if (s == "identity") return FeatureRecipe::identity;
    if (s == "iris_areas") return FeatureRecipe::iris_areas;
    throw ConfigError("unknown feature recipe '" + s + "'");
}

inline const char* constraint_name(MergeConfig::ConstraintMode m) {
    return m == MergeConfig::ConstraintMode::normalized_variance ? "normalized_variance"
                                                                 : "raw_sse";
}

}  // namespace detail

inline void from_json(const nlohmann::json& j, LocalClusteringConfig& cfg) {
    if (j.contains("algorithm")) cfg.algorithm = detail::parse_algorithm(j.at("algorithm"));
    cfg.k = j.value("k", cfg.k);
    cfg.max_iterations = j.value("max_iterations", cfg.max_iterations);
    cfg.convergence_tol = j.value("convergence_tol", cfg.convergence_tol);
    cfg.khm_power = j.value("khm_power", cfg.khm_power);
}

inline void to_json(nlohmann::json& j, const LocalClusteringConfig& cfg) {
    j = {{"algorithm", to_string(cfg.algorithm)},
         {"k", cfg.k},
         {"max_iterations", cfg.max_iterations},
         {"convergence_tol", cfg.convergence_tol},
         {"khm_power", cfg.khm_power}};
}

inline void from_json(const nlohmann::json& j, MergeConfig& cfg) {
    if (j.contains("constraint")) cfg.constraint_mode = detail::parse_constraint(j.at("constraint"));
    cfg.sigma_factor = j.value("sigma_factor", cfg.sigma_factor);
    cfg.border_fraction = j.value("border_fraction", cfg.border_fraction);
    cfg.multi_attr_epsilon = j.value("multi_attr_epsilon", cfg.multi_attr_epsilon);
    cfg.max_perturbation_passes = j.value("max_perturbation_passes", cfg.max_perturbation_passes);
    cfg.zero_variance_floor = j.value("zero_variance_floor", cfg.zero_variance_floor);
}

inline void to_json(nlohmann::json& j, const MergeConfig& cfg) {
    j = {{"constraint", detail::constraint_name(cfg.constraint_mode)},
         {"sigma_factor", cfg.sigma_factor},
         {"border_fraction", cfg.border_fraction},
         {"multi_attr_epsilon", cfg.multi_attr_epsilon},
         {"max_perturbation_passes", cfg.max_perturbation_passes},
         {"zero_variance_floor", cfg.zero_variance_floor}};
}

inline void from_json(const nlohmann::json& j, GaussianMixtureSpec& spec) {
    spec.total_points = j.at("total_points").get<std::int64_t>();
    spec.components.clear();
    for (const nlohmann::json& c : j.at("components")) {
        GaussianComponent comp;
        comp.weight = c.at("weight").get<double>();
        comp.mean = c.at("mean").get<std::vector<double>>();
        comp.stddev = c.at("stddev").get<std::vector<double>>();
        spec.components.push_back(std::move(comp));
    }
}

inline void to_json(nlohmann::json& j, const GaussianMixtureSpec& spec) {
    nlohmann::json comps = nlohmann::json::array();
    for (const GaussianComponent& c : spec.components)
        comps.push_back({{"weight", c.weight}, {"mean", c.mean}, {"stddev", c.stddev}});
    j = {{"total_points", spec.total_points}, {"components", std::move(comps)}};
}

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    cfg.name = j.value("name", cfg.name);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.sites = j.value("sites", cfg.sites);
    cfg.merging_site = j.value("merging_site", cfg.merging_site);
    cfg.out_dir = j.value("out_dir", cfg.out_dir);
    if (j.contains("partition")) cfg.partition = detail::parse_partition(j.at("partition"));
    if (j.contains("dataset")) {
        const nlohmann::json& ds = j.at("dataset");
        if (ds.contains("generator")) {
            cfg.generator = ds.at("generator").get<GaussianMixtureSpec>();
            if (ds.at("generator").contains("seed"))
                cfg.generator_seed = ds.at("generator").at("seed").get<std::uint64_t>();
        }
        if (ds.contains("csv")) {
            CsvSource src;
            src.path = ds.at("csv").at("path").get<std::string>();
            src.has_header = ds.at("csv").value("has_header", false);
            if (ds.at("csv").contains("label_column") && !ds.at("csv").at("label_column").is_null())
                src.label_column = ds.at("csv").at("label_column").get<int>();
            cfg.csv = std::move(src);
        }
        if (ds.contains("features")) cfg.features = detail::parse_features(ds.at("features"));
    }
    if (j.contains("local")) {
        const nlohmann::json& local = j.at("local");
        if (local.is_array())
            cfg.local = local.get<std::vector<LocalClusteringConfig>>();
        else
            cfg.local = {local.get<LocalClusteringConfig>()};
    }
    if (j.contains("merge")) cfg.merge = j.at("merge").get<MergeConfig>();
    if (j.contains("baseline")) {
        const nlohmann::json& b = j.at("baseline");
        cfg.baseline.enabled = b.value("enabled", true);
        cfg.baseline.k = b.value("k", 0);
        if (b.contains("algorithm"))
            cfg.baseline.algorithm = detail::parse_algorithm(b.at("algorithm"));
    }
    return cfg;
}

inline nlohmann::json experiment_config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["name"] = cfg.name;
    j["seed"] = cfg.seed;
    j["sites"] = cfg.sites;
    j["merging_site"] = cfg.merging_site;
    j["partition"] = to_string(cfg.partition);
    nlohmann::json ds;
    if (cfg.generator) {
        ds["generator"] = *cfg.generator;
        if (cfg.generator_seed) ds["generator"]["seed"] = *cfg.generator_seed;
    }
    if (cfg.csv) {
        ds["csv"] = {{"path", cfg.csv->path}, {"has_header", cfg.csv->has_header}};
        if (cfg.csv->label_column) ds["csv"]["label_column"] = *cfg.csv->label_column;
    }
    ds["features"] = to_string(cfg.features);
    j["dataset"] = std::move(ds);
    j["local"] = cfg.local;
    j["merge"] = cfg.merge;
    nlohmann::json b;
    b["enabled"] = cfg.baseline.enabled;
    b["k"] = cfg.baseline.k;
    if (cfg.baseline.algorithm) b["algorithm"] = to_string(*cfg.baseline.algorithm);
    j["baseline"] = std::move(b);
    return j;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config file not found: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    return experiment_config_from_json(j);
}

// The two setups reproduced from the experiments: a 1150-point 2-D mixture of
// three well-separated Gaussians over 3 sites with local k-means (k_i = 10),
// and the Iris measurements over 2 sites with local k-harmonic-means
// (k_i = 5) against a centralized k = 3 baseline.
inline ExperimentConfig make_preset(const std::string& name,
                                    const std::string& iris_csv_path = "data/iris.csv") {
    ExperimentConfig cfg;
    cfg.name = name;
    if (name == "synthetic3") {
        GaussianMixtureSpec spec;
        spec.total_points = 1150;
        const double third = 1.0 / 3.0;
        spec.components = {
            {third, {0.0, 0.0}, {1.0, 1.0}},
            {third, {10.0, 0.0}, {1.0, 1.0}},
            {third, {5.0, 8.66}, {1.0, 1.0}},
        };
        cfg.generator = std::move(spec);
        cfg.sites = 3;
        LocalClusteringConfig local;
        local.algorithm = Algorithm::kmeans;
        local.k = 10;
        cfg.local = {local};
        cfg.baseline.enabled = true;  // centralized run at the discovered k
    } else if (name == "iris") {
        // clusters the four raw measurements; the derived area features are
        // only the figure-style presentation
        cfg.csv = CsvSource{iris_csv_path, true, 4};
        cfg.features = FeatureRecipe::identity;
        cfg.sites = 2;
        LocalClusteringConfig local;
        local.algorithm = Algorithm::kharmonic;
        local.k = 5;
        cfg.local = {local};
        cfg.baseline.enabled = true;
        cfg.baseline.k = 3;
        cfg.baseline.algorithm = Algorithm::kharmonic;
    } else {
        throw ConfigError("unknown preset '" + name + "' (expected synthetic3|iris)");
    }
    return cfg;
}

// Fills in derived values and checks consistency: the per-site config list is
// replicated to `sites` entries when given once, and the dataset source must
// be exactly one of generator/csv.
inline ExperimentConfig resolve_experiment_config(ExperimentConfig cfg) {
    if (cfg.sites < 1) throw ConfigError("sites must be >= 1");
    if (cfg.generator.has_value() == cfg.csv.has_value())
        throw ConfigError("exactly one dataset source (generator or csv) required");
    if (cfg.csv && !std::filesystem::exists(cfg.csv->path))
        throw ConfigError("input file not found: " + cfg.csv->path);
    if (cfg.local.empty()) cfg.local = {LocalClusteringConfig{}};
    if (cfg.local.size() == 1 && cfg.sites > 1) {
        const LocalClusteringConfig proto = cfg.local.front();
        cfg.local.assign(cfg.sites, proto);
    }
    if (cfg.local.size() != static_cast<std::size_t>(cfg.sites))
        throw ConfigError("local config list has " + std::to_string(cfg.local.size()) +
                          " entries for " + std::to_string(cfg.sites) + " sites");
    if (cfg.merging_site < 0 || cfg.merging_site >= cfg.sites)
        throw ConfigError("merging_site out of range");
    return cfg;
}

struct ExperimentOutput {
    ExperimentConfig config;  // resolved
    LabeledDataset data;
    RunResult result;
};

inline nlohmann::json run_result_to_json(const RunResult& res, const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["k_global"] = res.metrics.k_global;
    nlohmann::json clusters = nlohmann::json::array();
    for (const GlobalCluster& g : res.global_clusters) {
        nlohmann::json c;
        c["count"] = g.summary.count;
        c["center"] = g.summary.center;
        c["sse"] = g.summary.sse;
        nlohmann::json members = nlohmann::json::array();
        for (const SubClusterId& id : g.members) members.push_back(id.str());
        c["members"] = std::move(members);
        if (g.border) {
            nlohmann::json border = nlohmann::json::array();
            for (const SubClusterId& id : *g.border) border.push_back(id.str());
            c["border"] = std::move(border);
        }
        clusters.push_back(std::move(c));
    }
    j["clusters"] = std::move(clusters);
    nlohmann::json label_map;
    for (const auto& [id, label] : res.global_label_map) label_map[id.str()] = label;
    j["global_label_map"] = std::move(label_map);
    nlohmann::json metrics;
    metrics["total_sse"] = res.metrics.total_sse;
    metrics["k_global"] = res.metrics.k_global;
    if (res.metrics.centralized_baseline_sse)
        metrics["centralized_baseline_sse"] = *res.metrics.centralized_baseline_sse;
    if (res.metrics.adjusted_rand_index)
        metrics["adjusted_rand_index"] = *res.metrics.adjusted_rand_index;
    j["metrics"] = std::move(metrics);
    nlohmann::json ledger;
    ledger["per_site_numbers_sent"] = res.ledger.per_site_numbers_sent;
    ledger["total_numbers_sent"] = res.ledger.total_numbers_sent();
    ledger["id_overhead_numbers"] = res.ledger.id_overhead_numbers;
    ledger["paper_model_elements"] = res.ledger.paper_model_elements;
    ledger["bytes_at_64bit"] = res.ledger.bytes_at_64bit;
    j["ledger"] = std::move(ledger);
    nlohmann::json sites = nlohmann::json::array();
    for (const SiteState& s : res.sites) {
        sites.push_back({{"site", s.site_index},
                         {"n_points", s.shard.points.size()},
                         {"k_effective", s.local_result.k_effective}});
    }
    j["sites"] = std::move(sites);
    j["perturbation_passes"] = res.perturbation_passes;
    j["warnings"] = res.warnings;
    ExperimentConfig echo = cfg;
    echo.out_dir.clear();  // keep result.json independent of where it is written
    j["config"] = experiment_config_to_json(echo);
    return j;
}

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

}  // namespace detail

// Writes result.json, trace.log, labels_site<i>.csv and points_labeled.csv
// into cfg.out_dir.
inline void write_experiment_outputs(const ExperimentOutput& out) {
    const ExperimentConfig& cfg = out.config;
    if (cfg.out_dir.empty()) return;
    const std::filesystem::path dir(cfg.out_dir);
    std::filesystem::create_directories(dir);

    detail::write_file(dir / "result.json", run_result_to_json(out.result, cfg).dump(2) + "\n");

    std::ostringstream trace;
    out.result.trace.write(trace);
    detail::write_file(dir / "trace.log", trace.str());

    const std::size_t d = out.data.points.dim();
    for (const SiteState& s : out.result.sites) {
        std::ostringstream os;
        os << "source_row";
        for (std::size_t c = 0; c < d; ++c) os << ",x" << c;
        os << ",local_subcluster,global_label\n";
        for (std::size_t p = 0; p < s.shard.points.size(); ++p) {
            os << s.shard.source_rows[p];
            const auto row = s.shard.points.row(p);
            for (std::size_t c = 0; c < d; ++c) os << ',' << format_double(row[c]);
            os << ',' << s.local_result.assignment[p] << ','
               << out.result.site_labels[s.site_index][p] << '\n';
        }
        detail::write_file(dir / ("labels_site" + std::to_string(s.site_index) + ".csv"),
                           os.str());
    }

    // one plot-ready file over the full dataset in original row order
    std::vector<int> site_of(out.data.points.size(), -1);
    std::vector<int> local_of(out.data.points.size(), -1);
    std::vector<int> global_of(out.data.points.size(), -1);
    for (const SiteState& s : out.result.sites) {
        for (std::size_t p = 0; p < s.shard.source_rows.size(); ++p) {
            const std::size_t row = s.shard.source_rows[p];
            site_of[row] = s.site_index;
            local_of[row] = s.local_result.assignment[p];
            global_of[row] = out.result.site_labels[s.site_index][p];
        }
    }
    std::ostringstream os;
    for (std::size_t c = 0; c < d; ++c) os << (c ? "," : "") << 'x' << c;
    os << ",site,local_subcluster,global_label\n";
    for (std::size_t i = 0; i < out.data.points.size(); ++i) {
        const auto row = out.data.points.row(i);
        for (std::size_t c = 0; c < d; ++c) os << (c ? "," : "") << format_double(row[c]);
        os << ',' << site_of[i] << ',' << local_of[i] << ',' << global_of[i] << '\n';
    }
    detail::write_file(dir / "points_labeled.csv", os.str());
}

// Loads or generates the dataset, runs the pipeline and writes outputs.
inline ExperimentOutput run_experiment(const ExperimentConfig& raw) {
    ExperimentOutput out;
    out.config = resolve_experiment_config(raw);
    const ExperimentConfig& cfg = out.config;

    if (cfg.generator) {
        GaussianMixtureSpec spec = *cfg.generator;
        spec.seed = cfg.generator_seed.value_or(mix_seed(cfg.seed, detail::kGeneratorStream));
        out.data = generate_mixture(spec);
    } else {
        out.data = load_csv(cfg.csv->path, cfg.csv->has_header, cfg.csv->label_column);
    }
    out.data.points = derive_features(out.data.points, cfg.features);

    PipelineConfig pipeline;
    pipeline.site_configs = cfg.local;
    pipeline.merge = cfg.merge;
    pipeline.partition_strategy = cfg.partition;
    pipeline.merging_site = cfg.merging_site;
    pipeline.seed = cfg.seed;
    pipeline.baseline = cfg.baseline;
    const std::vector<int>* truth = out.data.labels.empty() ? nullptr : &out.data.labels;
    out.result = run_pipeline(out.data.points, pipeline, truth);

    write_experiment_outputs(out);
    return out;
}

}  // namespace varclust

#endif  // VARCLUST_EXPERIMENT_HPP
