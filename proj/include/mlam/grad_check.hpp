#pragma once

#include <cmath>
#include <functional>

#include "mlam/tensor.hpp"

namespace mlam {

// Central-difference gradient of a scalar-valued function, one coordinate at
// a time: (f(x + h e_i) - f(x - h e_i)) / (2h).
inline Tensor finite_difference_gradient(const std::function<double(const Tensor&)>& f,
                                         const Tensor& x, double h = 1e-5) {
    if (!(h > 0.0)) throw ValueError("finite_difference_gradient: h must be positive");
    Tensor g(x.shape());
    Tensor probe = x;
    for (int64_t i = 0; i < x.numel(); ++i) {
        double orig = probe[i];
        probe[i] = orig + h;
        double fp = f(probe);
        probe[i] = orig - h;
        double fm = f(probe);
        probe[i] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw ValueError("finite_difference_gradient: non-finite function value at coordinate " +
                             std::to_string(i));
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

// relative error with a floored denominator, the convention used by all
// gradient comparisons in the tests
inline double rel_err(double a, double b, double floor = 1e-12) {
    double denom = std::max({std::fabs(a), std::fabs(b), floor});
    return std::fabs(a - b) / denom;
}

// true when a and b agree to rel_tol, or absolutely to abs_tol (central
// differences bottom out at eps*|f|/h, so near-zero gradients need the
// absolute branch)
inline bool grad_close(double a, double b, double rel_tol, double abs_tol) {
    return std::fabs(a - b) <= abs_tol || rel_err(a, b) <= rel_tol;
}

inline double max_rel_err(const Tensor& a, const Tensor& b, double floor = 1e-12) {
    if (!a.same_shape(b))
        throw ShapeError("max_rel_err: shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
    double m = 0.0;
    for (int64_t i = 0; i < a.numel(); ++i) m = std::max(m, rel_err(a[i], b[i], floor));
    return m;
}

}  // namespace mlam
