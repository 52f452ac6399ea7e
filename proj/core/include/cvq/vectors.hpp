#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cvq {

// Row-major set of fixed-dimension real vectors.
class VectorSet {
public:
    VectorSet() = default;
    explicit VectorSet(std::size_t dim) : dim_(dim) {}
    VectorSet(std::size_t dim, std::vector<double> data);

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return dim_ == 0 ? 0 : data_.size() / dim_; }
    bool empty() const { return data_.empty(); }

    std::span<const double> row(std::size_t i) const {
        return {data_.data() + i * dim_, dim_};
    }
    std::span<double> row(std::size_t i) { return {data_.data() + i * dim_, dim_}; }

    void push_back(std::span<const double> v);
    void reserve(std::size_t rows) { data_.reserve(rows * dim_); }

    const std::vector<double>& data() const { return data_; }

    // Throws ShapeError unless non-empty with dim >= 1.
    void validate() const;

private:
    std::size_t dim_ = 0;
    std::vector<double> data_;
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

// Common surface of every codebook in the toolkit: vectors in, index out,
// and back. Implementations are immutable after construction.
class VectorQuantizer {
public:
    virtual ~VectorQuantizer() = default;
    virtual std::size_t size() const = 0;
    virtual std::size_t dim() const = 0;
    virtual std::size_t encode(std::span<const double> v) const = 0;
    virtual std::span<const double> decode(std::size_t index) const = 0;
};

}  // namespace cvq
