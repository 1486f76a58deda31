#ifndef VARCLUST_CLI_HPP
#define VARCLUST_CLI_HPP

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "varclust/experiment.hpp"

namespace varclust {

namespace detail {

inline std::string short_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

inline void print_summary(const ExperimentOutput& out, std::ostream& os) {
    const RunResult& r = out.result;
    os << "experiment        " << out.config.name << '\n';
    os << "points x dim      " << out.data.points.size() << " x " << out.data.points.dim() << '\n';
    os << "sites             " << out.config.sites << " (merging at site " << out.config.merging_site
       << ")\n";
    os << "k_global          " << r.metrics.k_global << '\n';
    os << "total SSE         " << short_double(r.metrics.total_sse) << '\n';
    if (r.metrics.centralized_baseline_sse)
        os << "baseline SSE      " << short_double(*r.metrics.centralized_baseline_sse) << '\n';
    if (r.metrics.adjusted_rand_index)
        os << "ARI vs truth      " << short_double(*r.metrics.adjusted_rand_index) << '\n';
    os << "numbers sent      " << r.ledger.total_numbers_sent() << " actual (+"
       << r.ledger.id_overhead_numbers << " id bookkeeping), paper model "
       << r.ledger.paper_model_elements << '\n';
    os << "bytes at 64-bit   " << r.ledger.bytes_at_64bit << '\n';
    std::size_t merges = 0;
    for (const TraceEvent& e : r.trace.events)
        if (e.kind == TraceEvent::Kind::merge) ++merges;
    os << "merge events      " << merges << ", perturbation passes " << r.perturbation_passes
       << '\n';
    for (const std::string& w : r.warnings) os << "warning           " << w << '\n';
    if (!out.config.out_dir.empty()) os << "outputs           " << out.config.out_dir << '\n';
}

}  // namespace detail

// `run` entry point; returns a process exit code (0 ok, 2 usage/config
// problem, 1 runtime failure).
inline int cli_run(int argc, const char* const* argv) {
    CLI::App app{"variance-constrained distributed clustering"};
    app.require_subcommand(1);
    CLI::App* run = app.add_subcommand("run", "run one distributed clustering experiment");

    std::string config_path, preset, algorithm, constraint, out_dir;
    std::string iris_csv = "data/iris.csv";
    int sites = 0;
    int merging_site = -1;
    std::vector<int> local_k;
    std::uint64_t seed = 0;
    double sigma_factor = 0.0, border_fraction = 0.0;

    CLI::Option* opt_config = run->add_option("--config", config_path, "experiment config JSON");
    CLI::Option* opt_preset =
        run->add_option("--preset", preset, "built-in experiment: synthetic3|iris");
    opt_config->excludes(opt_preset);
    CLI::Option* opt_sites = run->add_option("--sites", sites, "number of sites");
    CLI::Option* opt_k =
        run->add_option("--local-k", local_k, "local sub-cluster count, one value or one per site");
    CLI::Option* opt_algo = run->add_option("--algorithm", algorithm, "kmeans|khm");
    CLI::Option* opt_seed = run->add_option("--seed", seed, "run seed");
    CLI::Option* opt_sigma = run->add_option("--sigma-factor", sigma_factor, "merge limit factor");
    CLI::Option* opt_border =
        run->add_option("--border-fraction", border_fraction, "border size fraction");
    CLI::Option* opt_constraint = run->add_option("--constraint", constraint, "normalized|raw");
    CLI::Option* opt_out = run->add_option("--out", out_dir, "output directory");
    CLI::Option* opt_merging = run->add_option("--merging-site", merging_site, "gathering site");
    run->add_option("--iris-csv", iris_csv, "path to the Iris csv used by the iris preset");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        ExperimentConfig cfg;
        if (*opt_config)
            cfg = load_experiment_config(config_path);
        else if (*opt_preset)
            cfg = make_preset(preset, iris_csv);
        else
            throw ConfigError("one of --config or --preset is required");

        if (*opt_sites) cfg.sites = sites;
        if (*opt_seed) cfg.seed = seed;
        if (*opt_merging) cfg.merging_site = merging_site;
        if (*opt_sigma) cfg.merge.sigma_factor = sigma_factor;
        if (*opt_border) cfg.merge.border_fraction = border_fraction;
        if (*opt_constraint) cfg.merge.constraint_mode = detail::parse_constraint(constraint);
        if (cfg.local.empty()) cfg.local = {LocalClusteringConfig{}};
        if (*opt_algo) {
            const Algorithm a = detail::parse_algorithm(algorithm);
            for (LocalClusteringConfig& l : cfg.local) l.algorithm = a;
        }
        if (*opt_k) {
            if (local_k.size() == 1) {
                for (LocalClusteringConfig& l : cfg.local) l.k = local_k.front();
            } else {
                if (cfg.local.size() == 1) {
                    const LocalClusteringConfig proto = cfg.local.front();
                    cfg.local.assign(local_k.size(), proto);
                }
                if (local_k.size() != cfg.local.size())
                    throw ConfigError("--local-k needs 1 value or one per site");
                for (std::size_t i = 0; i < local_k.size(); ++i) cfg.local[i].k = local_k[i];
            }
        }
        if (*opt_out) cfg.out_dir = out_dir;
        if (cfg.out_dir.empty()) cfg.out_dir = "out";

        const ExperimentOutput result = run_experiment(cfg);
        detail::print_summary(result, std::cout);
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << run->help() << std::flush;
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    }
}

inline int cli_run(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.push_back("varclust");
    for (const std::string& a : args) argv.push_back(a.c_str());
    return cli_run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace varclust

#endif  // VARCLUST_CLI_HPP
