#include "trimnet/tensor.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace trimnet {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_to_string(const std::vector<std::size_t>& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), values_(shape_product(shape_), 0.0) {
    for (std::size_t d : shape_) {
        if (d == 0) throw std::invalid_argument("tensor dimensions must be positive");
    }
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
    for (std::size_t d : shape_) {
        if (d == 0) throw std::invalid_argument("tensor dimensions must be positive");
    }
    if (shape_product(shape_) != values_.size()) {
        throw std::invalid_argument("tensor value count " + std::to_string(values_.size()) +
                                    " does not match shape " + shape_to_string(shape_));
    }
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t m = rows.size();
    if (m == 0) throw std::invalid_argument("matrix needs at least one row");
    const std::size_t n = rows.begin()->size();
    std::vector<double> values;
    values.reserve(m * n);
    for (const auto& row : rows) {
        if (row.size() != n) throw std::invalid_argument("ragged matrix rows");
        values.insert(values.end(), row.begin(), row.end());
    }
    return Tensor({m, n}, std::move(values));
}

Tensor Tensor::vector(std::vector<double> values) {
    const std::size_t n = values.size();
    return Tensor({n}, std::move(values));
}

bool Tensor::all_finite() const {
    for (double v : values_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

Tensor Tensor::reshaped(std::vector<std::size_t> new_shape) const {
    if (shape_product(new_shape) != values_.size()) {
        throw std::invalid_argument("reshape to " + shape_to_string(new_shape) +
                                    " changes element count");
    }
    return Tensor(std::move(new_shape), values_);
}

}  // namespace trimnet
