#ifndef VARCLUST_DATASET_HPP
#define VARCLUST_DATASET_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace varclust {

using Point = std::vector<double>;

// Row-major matrix of d-dimensional observations. All coordinates must be
// finite and every row has the same dimension.
class Dataset {
public:
    Dataset() = default;

    explicit Dataset(std::size_t dim) : dim_(dim) {
        if (dim == 0) throw std::invalid_argument("Dataset: dimension must be >= 1");
    }

    Dataset(std::size_t dim, std::vector<double> values) : Dataset(dim) {
        if (values.size() % dim != 0)
            throw std::invalid_argument("Dataset: value count not a multiple of dimension");
        for (double v : values)
            if (!std::isfinite(v))
                throw std::invalid_argument("Dataset: non-finite coordinate");
        values_ = std::move(values);
    }

    static Dataset from_points(const std::vector<Point>& points) {
        if (points.empty()) throw std::invalid_argument("Dataset: empty point list");
        Dataset d(points.front().size());
        d.values_.reserve(points.size() * d.dim_);
        for (const Point& p : points) d.push_back(p);
        return d;
    }

    void push_back(std::span<const double> coords) {
        if (dim_ == 0) dim_ = coords.size();
        if (coords.size() != dim_)
            throw std::invalid_argument("Dataset: row has dimension " +
                                        std::to_string(coords.size()) + ", expected " +
                                        std::to_string(dim_));
        for (double v : coords)
            if (!std::isfinite(v))
                throw std::invalid_argument("Dataset: non-finite coordinate");
        values_.insert(values_.end(), coords.begin(), coords.end());
    }

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return dim_ == 0 ? 0 : values_.size() / dim_; }
    bool empty() const { return values_.empty(); }

    std::span<const double> row(std::size_t i) const {
        return {values_.data() + i * dim_, dim_};
    }

    const std::vector<double>& values() const { return values_; }

    bool operator==(const Dataset&) const = default;

private:
    std::size_t dim_ = 0;
    std::vector<double> values_;
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        s += diff * diff;
    }
    return s;
}

inline double euclidean_distance(std::span<const double> a, std::span<const double> b) {
    return std::sqrt(squared_distance(a, b));
}

}  // namespace varclust

#endif  // VARCLUST_DATASET_HPP
