#include "mlam/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mlam::kernels {

namespace {
int g_threads = 0;

// below these sizes the fork/join overhead dominates
constexpr int64_t kMatmulFlopThreshold = 1 << 16;
constexpr int64_t kElementwiseThreshold = 1 << 15;

inline int effective_threads() {
#ifdef _OPENMP
    return g_threads > 0 ? g_threads : omp_get_max_threads();
#else
    return 1;
#endif
}

inline double apply_unary(Unary op, double x) {
    switch (op) {
        case Unary::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
        case Unary::Tanh: return std::tanh(x);
        case Unary::Exp: return std::exp(x);
        case Unary::Log: return std::log(x);
        case Unary::Square: return x * x;
    }
    return 0.0;
}

// One output row of C = op(A) * op(B). The k-accumulation order is fixed
// (ascending), which is what makes serial and parallel paths bitwise equal.
inline void matmul_row(const double* a, const double* b, double* c, int64_t i, int64_t k,
                       int64_t n, int64_t lda, int64_t ldb, bool trans_a, bool trans_b,
                       bool accumulate) {
    double* crow = c + i * n;
    if (!accumulate) std::memset(crow, 0, static_cast<size_t>(n) * sizeof(double));
    for (int64_t kk = 0; kk < k; ++kk) {
        double av = trans_a ? a[kk * lda + i] : a[i * lda + kk];
        const double* brow = trans_b ? b + kk : b + kk * ldb;
        if (trans_b) {
            for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j * ldb];
        } else {
            for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}
}  // namespace

void set_threads(int n) {
    g_threads = n;
#ifdef _OPENMP
    if (n > 0) omp_set_num_threads(n);
#endif
}

int threads() { return effective_threads(); }

void matmul_serial(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n,
                   bool trans_a, bool trans_b, bool accumulate) {
    const int64_t lda = trans_a ? m : k;
    const int64_t ldb = trans_b ? k : n;
    for (int64_t i = 0; i < m; ++i)
        matmul_row(a, b, c, i, k, n, lda, ldb, trans_a, trans_b, accumulate);
}

void matmul_omp(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n,
                bool trans_a, bool trans_b, bool accumulate) {
    const int64_t lda = trans_a ? m : k;
    const int64_t ldb = trans_b ? k : n;
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int64_t i = 0; i < m; ++i)
        matmul_row(a, b, c, i, k, n, lda, ldb, trans_a, trans_b, accumulate);
}

void unary_map_serial(Unary op, const double* x, double* y, int64_t n) {
    for (int64_t i = 0; i < n; ++i) y[i] = apply_unary(op, x[i]);
}

void unary_map_omp(Unary op, const double* x, double* y, int64_t n) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int64_t i = 0; i < n; ++i) y[i] = apply_unary(op, x[i]);
}

void binary_add_serial(const double* a, const double* b, double* c, int64_t n) {
    for (int64_t i = 0; i < n; ++i) c[i] = a[i] + b[i];
}

void binary_sub_serial(const double* a, const double* b, double* c, int64_t n) {
    for (int64_t i = 0; i < n; ++i) c[i] = a[i] - b[i];
}

void binary_mul_serial(const double* a, const double* b, double* c, int64_t n) {
    for (int64_t i = 0; i < n; ++i) c[i] = a[i] * b[i];
}

void binary_add_omp(const double* a, const double* b, double* c, int64_t n) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int64_t i = 0; i < n; ++i) c[i] = a[i] + b[i];
}

void binary_sub_omp(const double* a, const double* b, double* c, int64_t n) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int64_t i = 0; i < n; ++i) c[i] = a[i] - b[i];
}

void binary_mul_omp(const double* a, const double* b, double* c, int64_t n) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int64_t i = 0; i < n; ++i) c[i] = a[i] * b[i];
}

void matmul(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n,
            bool trans_a, bool trans_b, bool accumulate) {
    if (effective_threads() > 1 && m * n * k >= kMatmulFlopThreshold && m > 1)
        matmul_omp(a, b, c, m, k, n, trans_a, trans_b, accumulate);
    else
        matmul_serial(a, b, c, m, k, n, trans_a, trans_b, accumulate);
}

void unary_map(Unary op, const double* x, double* y, int64_t n) {
    if (effective_threads() > 1 && n >= kElementwiseThreshold)
        unary_map_omp(op, x, y, n);
    else
        unary_map_serial(op, x, y, n);
}

void binary_add(const double* a, const double* b, double* c, int64_t n) {
    if (effective_threads() > 1 && n >= kElementwiseThreshold)
        binary_add_omp(a, b, c, n);
    else
        binary_add_serial(a, b, c, n);
}

void binary_sub(const double* a, const double* b, double* c, int64_t n) {
    if (effective_threads() > 1 && n >= kElementwiseThreshold)
        binary_sub_omp(a, b, c, n);
    else
        binary_sub_serial(a, b, c, n);
}

void binary_mul(const double* a, const double* b, double* c, int64_t n) {
    if (effective_threads() > 1 && n >= kElementwiseThreshold)
        binary_mul_omp(a, b, c, n);
    else
        binary_mul_serial(a, b, c, n);
}

void acc(double* y, const double* x, int64_t n) {
    for (int64_t i = 0; i < n; ++i) y[i] += x[i];
}

void acc_scaled(double* y, const double* x, double c, int64_t n) {
    for (int64_t i = 0; i < n; ++i) y[i] += c * x[i];
}

}  // namespace mlam::kernels
