#pragma once

#include <vector>

#include "mlam/tensor.hpp"

// Small dense helpers used by the problem generators and classical solvers.
namespace mlam::linalg {

// In-place Cholesky A = L L^T for a symmetric positive-definite matrix stored
// row-major. Returns false if a non-positive pivot is hit.
inline bool cholesky(std::vector<double>& a, int64_t n) {
    for (int64_t i = 0; i < n; ++i) {
        for (int64_t j = 0; j <= i; ++j) {
            double s = a[i * n + j];
            for (int64_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            if (i == j) {
                if (s <= 0.0) return false;
                a[i * n + i] = std::sqrt(s);
            } else {
                a[i * n + j] = s / a[j * n + j];
            }
        }
        for (int64_t j = i + 1; j < n; ++j) a[i * n + j] = 0.0;
    }
    return true;
}

// Solve A x = b given the Cholesky factor L (lower triangular, row-major).
inline void cholesky_solve(const std::vector<double>& l, int64_t n, std::vector<double>& x) {
    for (int64_t i = 0; i < n; ++i) {
        double s = x[i];
        for (int64_t k = 0; k < i; ++k) s -= l[i * n + k] * x[k];
        x[i] = s / l[i * n + i];
    }
    for (int64_t i = n - 1; i >= 0; --i) {
        double s = x[i];
        for (int64_t k = i + 1; k < n; ++k) s -= l[k * n + i] * x[k];
        x[i] = s / l[i * n + i];
    }
}

// Solve the SPD system A x = b, optionally retrying with a jitter added to
// the diagonal. Returns false if even the jittered factorization fails.
inline bool spd_solve(std::vector<double> a, int64_t n, std::vector<double>& x, bool* jittered) {
    std::vector<double> backup = a;
    if (!cholesky(a, n)) {
        a = std::move(backup);
        for (int64_t i = 0; i < n; ++i) a[i * n + i] += 1e-10;
        if (jittered) *jittered = true;
        if (!cholesky(a, n)) return false;
    }
    cholesky_solve(a, n, x);
    return true;
}

// 2x2 symmetric eigen-decomposition, eigenvalues descending.
inline void eig_sym_2x2(double a, double b, double d, double* l1, double* l2) {
    double tr = a + d;
    double det = a * d - b * b;
    double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
    *l1 = tr / 2.0 + disc;
    *l2 = tr / 2.0 - disc;
}

}  // namespace mlam::linalg
