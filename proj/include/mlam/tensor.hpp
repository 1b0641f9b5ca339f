#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlam/rng.hpp"

namespace mlam {

using Shape = std::vector<int64_t>;

std::string shape_str(const Shape& s);
int64_t shape_numel(const Shape& s);

struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ValueError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dense row-major f64 tensor. Rank 0/1/2 cover everything in this project;
// scalars are stored as shape (1).
class Tensor {
public:
    Tensor() = default;
    Tensor(Shape shape, std::vector<double> data);
    explicit Tensor(Shape shape);  // zero-filled

    static Tensor scalar(double v) { return Tensor({1}, {v}); }
    static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
    static Tensor full(Shape shape, double v);
    static Tensor ones(Shape shape) { return full(std::move(shape), 1.0); }
    static Tensor randn(Shape shape, Rng& rng, double mean = 0.0, double stddev = 1.0);
    static Tensor rand_uniform(Shape shape, Rng& rng, double lo, double hi);

    const Shape& shape() const { return shape_; }
    int64_t numel() const { return static_cast<int64_t>(data_.size()); }
    int rank() const { return static_cast<int>(shape_.size()); }

    int64_t rows() const;
    int64_t cols() const;

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& vec() { return data_; }
    const std::vector<double>& vec() const { return data_; }

    double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
    double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }
    double& at(int64_t r, int64_t c) { return data_[static_cast<size_t>(r * cols() + c)]; }
    double at(int64_t r, int64_t c) const { return data_[static_cast<size_t>(r * cols() + c)]; }

    double item() const;

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
    bool all_finite() const;
    bool bitwise_equal(const Tensor& o) const;

    double frobenius_norm() const;
    double sum() const;
    double max_abs() const;

    Tensor reshaped(Shape shape) const;

private:
    Shape shape_;
    std::vector<double> data_;
};

}  // namespace mlam
