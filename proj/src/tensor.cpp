#include "mlam/tensor.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

namespace mlam {

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) os << ",";
        os << s[i];
    }
    os << ")";
    return os.str();
}

int64_t shape_numel(const Shape& s) {
    int64_t n = 1;
    for (int64_t d : s) {
        if (d < 0) throw ShapeError("negative dimension in shape " + shape_str(s));
        n *= d;
    }
    return n;
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_numel(shape_) != static_cast<int64_t>(data_.size()))
        throw ShapeError("data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_str(shape_));
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
    data_.assign(static_cast<size_t>(shape_numel(shape_)), 0.0);
}

Tensor Tensor::full(Shape shape, double v) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), v);
    return t;
}

Tensor Tensor::randn(Shape shape, Rng& rng, double mean, double stddev) {
    Tensor t(std::move(shape));
    for (double& x : t.data_) x = rng.normal(mean, stddev);
    return t;
}

Tensor Tensor::rand_uniform(Shape shape, Rng& rng, double lo, double hi) {
    Tensor t(std::move(shape));
    for (double& x : t.data_) x = rng.uniform(lo, hi);
    return t;
}

int64_t Tensor::rows() const {
    if (rank() == 2) return shape_[0];
    if (rank() == 1) return shape_[0];
    throw ShapeError("rows() on tensor of shape " + shape_str(shape_));
}

int64_t Tensor::cols() const {
    if (rank() == 2) return shape_[1];
    if (rank() == 1) return 1;
    throw ShapeError("cols() on tensor of shape " + shape_str(shape_));
}

double Tensor::item() const {
    if (numel() != 1)
        throw ShapeError("item() on non-scalar tensor of shape " + shape_str(shape_));
    return data_[0];
}

bool Tensor::all_finite() const {
    for (double x : data_)
        if (!std::isfinite(x)) return false;
    return true;
}

bool Tensor::bitwise_equal(const Tensor& o) const {
    return shape_ == o.shape_ &&
           std::memcmp(data_.data(), o.data_.data(), data_.size() * sizeof(double)) == 0;
}

double Tensor::frobenius_norm() const {
    double s = 0.0;
    for (double x : data_) s += x * x;
    return std::sqrt(s);
}

double Tensor::sum() const {
    double s = 0.0;
    for (double x : data_) s += x;
    return s;
}

double Tensor::max_abs() const {
    double m = 0.0;
    for (double x : data_) m = std::max(m, std::fabs(x));
    return m;
}

Tensor Tensor::reshaped(Shape shape) const {
    if (shape_numel(shape) != numel())
        throw ShapeError("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
    return Tensor(std::move(shape), data_);
}

}  // namespace mlam
