#include "caudg/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace caudg {

std::size_t shape_numel(const std::vector<std::size_t>& dims) {
    std::size_t n = 1;
    for (std::size_t d : dims) n *= d;
    return n;
}

std::string shape_to_string(const std::vector<std::size_t>& dims) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i) os << ", ";
        os << dims[i];
    }
    os << "]";
    return os.str();
}

Tensor::Tensor(std::vector<std::size_t> dims) : shape(std::move(dims)), data(shape_numel(shape), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> dims, double fill_value)
    : shape(std::move(dims)), data(shape_numel(shape), fill_value) {}

Tensor::Tensor(std::vector<std::size_t> dims, std::vector<double> values)
    : shape(std::move(dims)), data(std::move(values)) {
    if (data.size() != shape_numel(shape)) {
        throw std::invalid_argument("Tensor: value count " + std::to_string(data.size()) +
                                    " does not match shape " + shape_to_string(shape));
    }
}

double Tensor::scalar_value() const {
    if (!is_scalar()) {
        throw std::logic_error("Tensor::scalar_value on non-scalar tensor of shape " + shape_str());
    }
    return data[0];
}

bool Tensor::all_finite() const {
    for (double v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Tensor::fill(double v) {
    for (double& x : data) x = v;
}

void Tensor::add_in_place(const Tensor& other) {
    if (!same_shape(other)) {
        throw std::invalid_argument("Tensor::add_in_place shape mismatch " + shape_str() + " vs " +
                                    other.shape_str());
    }
    for (std::size_t i = 0; i < data.size(); ++i) data[i] += other.data[i];
}

std::string Tensor::shape_str() const { return shape_to_string(shape); }

}  // namespace caudg
