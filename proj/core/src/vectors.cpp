#include "cvq/vectors.hpp"

#include <string>

#include "cvq/error.hpp"

namespace cvq {

VectorSet::VectorSet(std::size_t dim, std::vector<double> data) : dim_(dim), data_(std::move(data)) {
    if (dim_ == 0) throw ShapeError("vector set: dim must be >= 1");
    if (data_.size() % dim_ != 0)
        throw ShapeError("vector set: " + std::to_string(data_.size()) +
                         " values do not divide into rows of " + std::to_string(dim_));
}

void VectorSet::push_back(std::span<const double> v) {
    if (v.size() != dim_)
        throw ShapeError("vector set: row of length " + std::to_string(v.size()) +
                         ", expected " + std::to_string(dim_));
    data_.insert(data_.end(), v.begin(), v.end());
}

void VectorSet::validate() const {
    if (dim_ == 0) throw ShapeError("vector set: dim must be >= 1");
    if (data_.empty()) throw ShapeError("vector set: empty");
}

}  // namespace cvq
