#ifndef VARCLUST_DATAIO_HPP
#define VARCLUST_DATAIO_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "varclust/dataset.hpp"
#include "varclust/format.hpp"
#include "varclust/rng.hpp"

namespace varclust {

struct GaussianComponent {
    double weight = 1.0;
    std::vector<double> mean;
    std::vector<double> stddev;  // per axis
};

struct GaussianMixtureSpec {
    std::vector<GaussianComponent> components;
    std::int64_t total_points = 0;
    std::uint64_t seed = 0;
};

struct LabeledDataset {
    Dataset points;
    std::vector<int> labels;                // ground-truth component / class per row
    std::vector<std::string> label_names;   // name per label value, when known
};

inline void validate(const GaussianMixtureSpec& spec) {
    if (spec.components.empty()) throw std::invalid_argument("mixture: no components");
    if (spec.total_points < 1) throw std::invalid_argument("mixture: total_points must be >= 1");
    const std::size_t d = spec.components.front().mean.size();
    double weight_sum = 0.0;
    for (const GaussianComponent& c : spec.components) {
        if (c.mean.size() != d || c.stddev.size() != d)
            throw std::invalid_argument("mixture: inconsistent component dimensions");
        if (c.weight <= 0.0) throw std::invalid_argument("mixture: nonpositive weight");
        for (double s : c.stddev)
            if (s <= 0.0) throw std::invalid_argument("mixture: nonpositive stddev");
        weight_sum += c.weight;
    }
    if (std::abs(weight_sum - 1.0) > 1e-9)
        throw std::invalid_argument("mixture: weights sum to " + format_double(weight_sum));
}

// Seeded draw from the mixture: component by categorical draw on the weights,
// coordinates by per-axis normal draws. Bit-identical for a given spec+seed.
inline LabeledDataset generate_mixture(const GaussianMixtureSpec& spec) {
    validate(spec);
    Rng rng(spec.seed);
    const std::size_t d = spec.components.front().mean.size();
    std::vector<double> weights;
    weights.reserve(spec.components.size());
    for (const GaussianComponent& c : spec.components) weights.push_back(c.weight);

    LabeledDataset out;
    out.points = Dataset(d);
    out.labels.reserve(spec.total_points);
    std::vector<double> row(d);
    for (std::int64_t i = 0; i < spec.total_points; ++i) {
        const std::size_t which = rng.categorical(weights);
        const GaussianComponent& c = spec.components[which];
        for (std::size_t j = 0; j < d; ++j) row[j] = c.mean[j] + c.stddev[j] * rng.normal();
        out.points.push_back(row);
        out.labels.push_back(static_cast<int>(which));
    }
    for (std::size_t i = 0; i < spec.components.size(); ++i)
        out.label_names.push_back("component" + std::to_string(i));
    return out;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        const auto begin = cell.find_first_not_of(" \t\r");
        const auto end = cell.find_last_not_of(" \t\r");
        cells.push_back(begin == std::string::npos ? "" : cell.substr(begin, end - begin + 1));
    }
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

inline double parse_cell(const std::string& cell, std::size_t line_no, std::size_t col) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc{} || ptr != cell.data() + cell.size())
        throw std::runtime_error("csv: non-numeric cell '" + cell + "' at row " +
                                 std::to_string(line_no) + ", column " + std::to_string(col + 1));
    return value;
}

}  // namespace detail

// Rectangular numeric CSV. An optional label column (by index) is kept as
// ground truth; its values are interned in order of first appearance.
inline LabeledDataset load_csv(const std::string& path, bool has_header,
                               std::optional<int> label_column = std::nullopt) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("csv: cannot open '" + path + "'");
    LabeledDataset out;
    std::string line;
    std::size_t line_no = 0;
    std::size_t expected_cols = 0;
    std::vector<double> row;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && has_header) continue;
        if (line.empty()) continue;
        const std::vector<std::string> cells = detail::split_csv_line(line);
        if (expected_cols == 0) {
            expected_cols = cells.size();
            if (label_column && (*label_column < 0 ||
                                 static_cast<std::size_t>(*label_column) >= expected_cols))
                throw std::runtime_error("csv: label column " + std::to_string(*label_column) +
                                         " out of range for " + std::to_string(expected_cols) +
                                         " columns");
        } else if (cells.size() != expected_cols) {
            throw std::runtime_error("csv: ragged row " + std::to_string(line_no) + " has " +
                                     std::to_string(cells.size()) + " cells, expected " +
                                     std::to_string(expected_cols));
        }
        row.clear();
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (label_column && static_cast<std::size_t>(*label_column) == c) {
                const auto it =
                    std::find(out.label_names.begin(), out.label_names.end(), cells[c]);
                if (it == out.label_names.end()) {
                    out.labels.push_back(static_cast<int>(out.label_names.size()));
                    out.label_names.push_back(cells[c]);
                } else {
                    out.labels.push_back(static_cast<int>(it - out.label_names.begin()));
                }
                continue;
            }
            row.push_back(detail::parse_cell(cells[c], line_no, c));
        }
        out.points.push_back(row);
    }
    if (out.points.empty()) throw std::runtime_error("csv: no data rows in '" + path + "'");
    return out;
}

inline void write_csv(std::ostream& os, const Dataset& points,
                      const std::vector<std::string>& header = {}) {
    if (!header.empty()) {
        for (std::size_t c = 0; c < header.size(); ++c)
            os << (c ? "," : "") << header[c];
        os << '\n';
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto row = points.row(i);
        for (std::size_t c = 0; c < row.size(); ++c)
            os << (c ? "," : "") << format_double(row[c]);
        os << '\n';
    }
}

enum class FeatureRecipe { identity, iris_areas };

inline const char* to_string(FeatureRecipe r) {
    return r == FeatureRecipe::identity ? "identity" : "iris_areas";
}

// iris_areas turns the four standard Iris measurements into two derived
// attributes: sepal_length*sepal_width and petal_length*petal_width.
inline Dataset derive_features(const Dataset& dataset, FeatureRecipe recipe) {
    if (recipe == FeatureRecipe::identity) return dataset;
    if (dataset.dim() < 4)
        throw std::invalid_argument("derive_features: iris_areas needs >= 4 columns, got " +
                                    std::to_string(dataset.dim()));
    Dataset out(2);
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const auto row = dataset.row(i);
        const double areas[2] = {row[0] * row[1], row[2] * row[3]};
        out.push_back(areas);
    }
    return out;
}

}  // namespace varclust

#endif  // VARCLUST_DATAIO_HPP
