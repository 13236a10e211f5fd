#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace caudg {

/// Dense row-major tensor of doubles. Rank is the length of `shape`;
/// windows use rank 4 as [batch, channels, 1, width], feature matrices rank 2.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> dims);
    Tensor(std::vector<std::size_t> dims, double fill);
    Tensor(std::vector<std::size_t> dims, std::vector<double> values);

    static Tensor zeros(std::vector<std::size_t> dims) { return Tensor(std::move(dims), 0.0); }
    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    std::size_t numel() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t dim(std::size_t i) const { return shape.at(i); }
    bool is_scalar() const { return numel() == 1; }
    double scalar_value() const;

    // rank-2 access [rows, cols]
    double& at(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

    // rank-4 access [b, c, h, w]
    double& at4(std::size_t b, std::size_t c, std::size_t h, std::size_t w) {
        return data[((b * shape[1] + c) * shape[2] + h) * shape[3] + w];
    }
    double at4(std::size_t b, std::size_t c, std::size_t h, std::size_t w) const {
        return data[((b * shape[1] + c) * shape[2] + h) * shape[3] + w];
    }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    bool all_finite() const;

    void fill(double v);
    void add_in_place(const Tensor& other);

    std::string shape_str() const;
};

std::size_t shape_numel(const std::vector<std::size_t>& dims);
std::string shape_to_string(const std::vector<std::size_t>& dims);

}  // namespace caudg
