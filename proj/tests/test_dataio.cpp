#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "test_util.hpp"
#include "varclust/dataio.hpp"
#include "varclust/experiment.hpp"

using namespace varclust;
using testutil::rel_err;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

GaussianMixtureSpec three_component_spec(std::uint64_t seed) {
    GaussianMixtureSpec spec;
    spec.total_points = 1150;
    spec.seed = seed;
    const double third = 1.0 / 3.0;
    spec.components = {{third, {0.0, 0.0}, {1.0, 1.0}},
                       {third, {10.0, 0.0}, {1.0, 1.0}},
                       {third, {5.0, 8.66}, {1.0, 1.0}}};
    return spec;
}

}  // namespace

TEST_CASE("generate_mixture: deterministic and correctly labeled") {
    const GaussianMixtureSpec spec = three_component_spec(7);
    const LabeledDataset a = generate_mixture(spec);
    const LabeledDataset b = generate_mixture(spec);
    CHECK(a.points == b.points);
    CHECK(a.labels == b.labels);
    CHECK(a.points.size() == 1150);
    CHECK(a.points.dim() == 2);
    CHECK(a.labels.size() == 1150);
}

TEST_CASE("generate_mixture: component counts stay within 4 sigma of the multinomial") {
    const LabeledDataset data = generate_mixture(three_component_spec(13));
    const double n = 1150.0, p = 1.0 / 3.0;
    const double sigma = std::sqrt(n * p * (1.0 - p));  // ~16
    std::vector<int> counts(3, 0);
    for (int l : data.labels) ++counts[l];
    for (int c = 0; c < 3; ++c) CHECK(std::abs(counts[c] - n * p) <= 4.0 * sigma);
}

TEST_CASE("generate_mixture: empirical component means near the spec means") {
    const GaussianMixtureSpec spec = three_component_spec(17);
    const LabeledDataset data = generate_mixture(spec);
    for (int c = 0; c < 3; ++c) {
        std::vector<double> sum(2, 0.0);
        int n = 0;
        for (std::size_t i = 0; i < data.points.size(); ++i) {
            if (data.labels[i] != c) continue;
            ++n;
            const auto row = data.points.row(i);
            for (int j = 0; j < 2; ++j) sum[j] += row[j];
        }
        REQUIRE(n > 0);
        const double bound = 5.0 * 1.0 / std::sqrt(static_cast<double>(n));
        for (int j = 0; j < 2; ++j)
            CHECK(std::abs(sum[j] / n - spec.components[c].mean[j]) <= bound);
    }
}

TEST_CASE("generate_mixture: near-degenerate spread collapses onto the mean") {
    GaussianMixtureSpec spec;
    spec.total_points = 200;
    spec.seed = 3;
    spec.components = {{1.0, {4.0, -2.0}, {1e-9, 1e-9}}};
    const LabeledDataset data = generate_mixture(spec);
    for (std::size_t i = 0; i < data.points.size(); ++i) {
        CHECK(std::abs(data.points.row(i)[0] - 4.0) <= 1e-6);
        CHECK(std::abs(data.points.row(i)[1] + 2.0) <= 1e-6);
    }
}

TEST_CASE("generate_mixture: invalid specs are rejected") {
    GaussianMixtureSpec spec;
    spec.total_points = 10;
    spec.components = {{0.5, {0.0}, {1.0}}, {0.6, {1.0}, {1.0}}};
    CHECK_THROWS_AS(generate_mixture(spec), std::invalid_argument);  // weights sum to 1.1
    spec.components = {{0.5, {0.0}, {1.0}}, {0.5, {1.0}, {-1.0}}};
    CHECK_THROWS_AS(generate_mixture(spec), std::invalid_argument);  // negative stddev
    spec.components = {{0.5, {0.0}, {1.0}}, {0.5, {1.0, 2.0}, {1.0, 1.0}}};
    CHECK_THROWS_AS(generate_mixture(spec), std::invalid_argument);  // mixed dims
}

TEST_CASE("load_csv: hand-written file parses exactly") {
    const auto path = temp_file("varclust_tiny.csv");
    write_text(path, "1.5,2.25,3\n-4,5e-1,6.125\n7,8,9\n");
    const LabeledDataset data = load_csv(path.string(), false);
    REQUIRE(data.points.size() == 3);
    REQUIRE(data.points.dim() == 3);
    CHECK(data.points.row(0)[0] == 1.5);
    CHECK(data.points.row(0)[1] == 2.25);
    CHECK(data.points.row(1)[1] == 0.5);
    CHECK(data.points.row(2)[2] == 9.0);
    CHECK(data.labels.empty());
}

TEST_CASE("load_csv: header handling and label interning") {
    const auto path = temp_file("varclust_labels.csv");
    write_text(path, "x,y,class\n1,2,red\n3,4,blue\n5,6,red\n");
    const LabeledDataset data = load_csv(path.string(), true, 2);
    REQUIRE(data.points.size() == 3);
    CHECK(data.points.dim() == 2);
    CHECK(data.labels == std::vector<int>{0, 1, 0});
    CHECK(data.label_names == std::vector<std::string>{"red", "blue"});
}

TEST_CASE("load_csv: malformed input names the offending row") {
    const auto ragged = temp_file("varclust_ragged.csv");
    write_text(ragged, "1,2\n3,4,5\n");
    CHECK_THROWS_WITH(load_csv(ragged.string(), false),
                      Catch::Matchers::ContainsSubstring("row 2"));

    const auto alpha = temp_file("varclust_alpha.csv");
    write_text(alpha, "1,2\n3,oops\n");
    CHECK_THROWS_WITH(load_csv(alpha.string(), false),
                      Catch::Matchers::ContainsSubstring("row 2"));

    CHECK_THROWS_WITH(load_csv("/no/such/file.csv", false),
                      Catch::Matchers::ContainsSubstring("/no/such/file.csv"));
}

TEST_CASE("load_csv: the vendored iris fixture has 150 rows and three species") {
    const LabeledDataset iris =
        load_csv(std::string(VARCLUST_DATA_DIR) + "/iris.csv", true, 4);
    CHECK(iris.points.size() == 150);
    CHECK(iris.points.dim() == 4);
    CHECK(iris.label_names.size() == 3);
    std::vector<int> counts(3, 0);
    for (int l : iris.labels) ++counts[l];
    CHECK(counts == std::vector<int>{50, 50, 50});
}

TEST_CASE("derive_features: identity and iris areas") {
    Rng rng(5);
    const Dataset data = testutil::to_dataset(testutil::random_points(rng, 10, 4));
    CHECK(derive_features(data, FeatureRecipe::identity) == data);

    const Dataset row = testutil::to_dataset({{5.1, 3.5, 1.4, 0.2}, {5.0, 0.0, 4.0, 0.0}});
    const Dataset areas = derive_features(row, FeatureRecipe::iris_areas);
    REQUIRE(areas.dim() == 2);
    CHECK(rel_err(areas.row(0)[0], 17.85) <= 1e-12);
    CHECK(rel_err(areas.row(0)[1], 0.28) <= 1e-12);
    CHECK(areas.row(1)[0] == 0.0);
    CHECK(areas.row(1)[1] == 0.0);

    const Dataset narrow = testutil::to_dataset({{1.0, 2.0, 3.0}});
    CHECK_THROWS_AS(derive_features(narrow, FeatureRecipe::iris_areas), std::invalid_argument);
}

TEST_CASE("csv round-trip: write then load reproduces doubles exactly") {
    Rng rng(43);
    Dataset data(3);
    for (int i = 0; i < 50; ++i) {
        const double row[3] = {1e6 * (rng.uniform01() - 0.5), rng.normal(),
                               1e-7 * rng.uniform01()};
        data.push_back(row);
    }
    const auto path = temp_file("varclust_roundtrip.csv");
    std::ofstream out(path);
    write_csv(out, data, {"a", "b", "c"});
    out.close();
    const LabeledDataset back = load_csv(path.string(), true);
    REQUIRE(back.points.size() == data.size());
    CHECK(back.points == data);
}

TEST_CASE("experiment config: json round-trip and preset shapes") {
    const std::string doc = R"({
        "name": "demo",
        "seed": 12,
        "sites": 2,
        "partition": "contiguous",
        "dataset": {
            "csv": {"path": "some.csv", "has_header": true, "label_column": 4},
            "features": "iris_areas"
        },
        "local": {"algorithm": "khm", "k": 5, "khm_power": 3.0},
        "merge": {"constraint": "raw", "sigma_factor": 2.5},
        "baseline": {"k": 3, "algorithm": "kharmonic"}
    })";
    const ExperimentConfig cfg = experiment_config_from_json(nlohmann::json::parse(doc));
    CHECK(cfg.name == "demo");
    CHECK(cfg.seed == 12);
    CHECK(cfg.sites == 2);
    CHECK(cfg.partition == PartitionStrategy::contiguous);
    REQUIRE(cfg.csv.has_value());
    CHECK(cfg.csv->path == "some.csv");
    CHECK(cfg.csv->label_column == 4);
    CHECK(cfg.features == FeatureRecipe::iris_areas);
    REQUIRE(cfg.local.size() == 1);
    CHECK(cfg.local[0].algorithm == Algorithm::kharmonic);
    CHECK(cfg.local[0].k == 5);
    CHECK(cfg.local[0].khm_power == 3.0);
    CHECK(cfg.merge.constraint_mode == MergeConfig::ConstraintMode::raw_sse);
    CHECK(cfg.merge.sigma_factor == 2.5);
    CHECK(cfg.baseline.enabled);
    CHECK(cfg.baseline.k == 3);

    // round-trip through to_json keeps the fields
    const ExperimentConfig again =
        experiment_config_from_json(experiment_config_to_json(cfg));
    CHECK(again.sites == cfg.sites);
    CHECK(again.merge.sigma_factor == cfg.merge.sigma_factor);
    CHECK(again.local[0].k == cfg.local[0].k);
    CHECK(again.csv->path == cfg.csv->path);

    const ExperimentConfig synthetic = make_preset("synthetic3");
    REQUIRE(synthetic.generator.has_value());
    CHECK(synthetic.generator->total_points == 1150);
    CHECK(synthetic.generator->components.size() == 3);
    CHECK(synthetic.sites == 3);
    CHECK(synthetic.local[0].k == 10);
    CHECK(synthetic.local[0].algorithm == Algorithm::kmeans);

    const ExperimentConfig iris = make_preset("iris");
    REQUIRE(iris.csv.has_value());
    CHECK(iris.sites == 2);
    CHECK(iris.local[0].k == 5);
    CHECK(iris.local[0].algorithm == Algorithm::kharmonic);
    CHECK(iris.baseline.k == 3);
    CHECK(iris.features == FeatureRecipe::identity);

    CHECK_THROWS_AS(make_preset("bogus"), ConfigError);
}

TEST_CASE("experiment config: resolution catches inconsistent setups") {
    ExperimentConfig cfg = make_preset("synthetic3");
    cfg.local = {LocalClusteringConfig{}, LocalClusteringConfig{}};  // 2 configs, 3 sites
    CHECK_THROWS_AS(resolve_experiment_config(cfg), ConfigError);

    ExperimentConfig both = make_preset("synthetic3");
    both.csv = CsvSource{"x.csv", false, std::nullopt};
    CHECK_THROWS_AS(resolve_experiment_config(both), ConfigError);

    ExperimentConfig missing = make_preset("iris", "/no/such/iris.csv");
    CHECK_THROWS_WITH(resolve_experiment_config(missing),
                      Catch::Matchers::ContainsSubstring("/no/such/iris.csv"));
}
