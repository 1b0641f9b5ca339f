#pragma once

#include <cstdint>

namespace mlam::kernels {

// Thread cap for the OpenMP paths. 0 = use omp_get_max_threads().
void set_threads(int n);
int threads();

enum class Unary { Sigmoid, Tanh, Exp, Log, Square };

// Serial reference implementations. Kept unconditionally: the parallel
// kernels are tested for bitwise agreement against these.
void matmul_serial(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n,
                   bool trans_a, bool trans_b, bool accumulate);
void unary_map_serial(Unary op, const double* x, double* y, int64_t n);
void binary_add_serial(const double* a, const double* b, double* c, int64_t n);
void binary_sub_serial(const double* a, const double* b, double* c, int64_t n);
void binary_mul_serial(const double* a, const double* b, double* c, int64_t n);

// OpenMP implementations. Each output element is computed with the same
// per-element accumulation order as the serial kernel, so results are
// bitwise identical for any thread count.
void matmul_omp(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n,
                bool trans_a, bool trans_b, bool accumulate);
void unary_map_omp(Unary op, const double* x, double* y, int64_t n);
void binary_add_omp(const double* a, const double* b, double* c, int64_t n);
void binary_sub_omp(const double* a, const double* b, double* c, int64_t n);
void binary_mul_omp(const double* a, const double* b, double* c, int64_t n);

// Dispatching entry points: pick the OpenMP path when the work is large
// enough to amortize the fork, otherwise run serial.
void matmul(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n,
            bool trans_a = false, bool trans_b = false, bool accumulate = false);
void unary_map(Unary op, const double* x, double* y, int64_t n);
void binary_add(const double* a, const double* b, double* c, int64_t n);
void binary_sub(const double* a, const double* b, double* c, int64_t n);
void binary_mul(const double* a, const double* b, double* c, int64_t n);

// y += x, y += c*x
void acc(double* y, const double* x, int64_t n);
void acc_scaled(double* y, const double* x, double c, int64_t n);

}  // namespace mlam::kernels
