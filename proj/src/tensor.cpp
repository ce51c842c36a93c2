// SPDX-License-Identifier: Apache-2.0
#include "geopli/tensor.hpp"

#include <cmath>
#include <sstream>

#include "geopli/errors.hpp"

namespace geopli {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {
    for (std::size_t d : shape_) {
        if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + shape_str());
    }
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_product(shape_) != data_.size()) {
        throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                             " does not match shape " + shape_str());
    }
    for (std::size_t d : shape_) {
        if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + shape_str());
    }
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
    Tensor t(std::move(shape));
    for (double& v : t.data_) v = value;
    return t;
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = rows.begin()->size();
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw DimensionError("ragged matrix literal");
        data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor({r, c}, std::move(data));
}

Tensor Tensor::vector(std::vector<double> values) {
    const std::size_t n = values.size();
    return Tensor({n}, std::move(values));
}

std::size_t Tensor::rows() const {
    if (rank() == 1) return 1;
    if (rank() == 2) return shape_[0];
    throw DimensionError("rows() on rank-" + std::to_string(rank()) + " tensor");
}

std::size_t Tensor::cols() const {
    if (rank() == 1) return shape_[0];
    if (rank() == 2) return shape_[1];
    throw DimensionError("cols() on rank-" + std::to_string(rank()) + " tensor");
}

bool Tensor::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape_.size(); ++i) os << (i ? "x" : "") << shape_[i];
    os << "]";
    return os.str();
}

double Tensor::item() const {
    if (size() != 1) throw ContractError("item() requires a scalar tensor, got " + shape_str());
    return data_[0];
}

}  // namespace geopli
