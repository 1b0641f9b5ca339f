// Micro-benchmark comparing the serial reference kernels against the OpenMP
// versions across the sizes the tape actually sees.

#include <chrono>
#include <cstdio>
#include <functional>

#include "mlam/kernels.hpp"
#include "mlam/tensor.hpp"

using namespace mlam;
using clock_type = std::chrono::steady_clock;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
    fn();  // warm up
    auto t0 = clock_type::now();
    for (int i = 0; i < reps; ++i) fn();
    return std::chrono::duration<double, std::milli>(clock_type::now() - t0).count() / reps;
}

void bench_matmul(int64_t n) {
    Rng rng(1);
    Tensor a = Tensor::randn({n, n}, rng);
    Tensor b = Tensor::randn({n, n}, rng);
    Tensor c({n, n});
    int reps = n <= 128 ? 50 : 10;
    double serial = time_ms(
        [&] { kernels::matmul_serial(a.data(), b.data(), c.data(), n, n, n, false, false, false); },
        reps);
    double omp = time_ms(
        [&] { kernels::matmul_omp(a.data(), b.data(), c.data(), n, n, n, false, false, false); },
        reps);
    double flops = 2.0 * n * n * n;
    std::printf("matmul %4lld x %-4lld   serial %8.3f ms (%6.2f GF/s)   omp %8.3f ms (%6.2f GF/s)   speedup %.2fx\n",
                static_cast<long long>(n), static_cast<long long>(n), serial,
                flops / serial / 1e6, omp, flops / omp / 1e6, serial / omp);
}

void bench_unary(int64_t n) {
    Rng rng(2);
    Tensor x = Tensor::randn({n}, rng);
    Tensor y({n});
    int reps = 200;
    double serial = time_ms(
        [&] { kernels::unary_map_serial(kernels::Unary::Tanh, x.data(), y.data(), n); }, reps);
    double omp = time_ms(
        [&] { kernels::unary_map_omp(kernels::Unary::Tanh, x.data(), y.data(), n); }, reps);
    std::printf("tanh   %8lld elems   serial %8.3f ms   omp %8.3f ms   speedup %.2fx\n",
                static_cast<long long>(n), serial, omp, serial / omp);
}

// composite shaped like one coordinate-batched LSTM gate pass
void bench_gate_pass(int64_t coords, int64_t hidden) {
    Rng rng(3);
    Tensor x = Tensor::randn({coords, 2}, rng);
    Tensor wx = Tensor::randn({2, hidden}, rng);
    Tensor h = Tensor::randn({coords, hidden}, rng);
    Tensor wh = Tensor::randn({hidden, hidden}, rng);
    Tensor pre({coords, hidden}), tmp({coords, hidden});
    auto pass = [&](bool use_omp) {
        auto mm = use_omp ? kernels::matmul_omp : kernels::matmul_serial;
        auto un = use_omp ? kernels::unary_map_omp : kernels::unary_map_serial;
        for (int gate = 0; gate < 8; ++gate) {
            mm(x.data(), wx.data(), pre.data(), coords, 2, hidden, false, false, false);
            mm(h.data(), wh.data(), tmp.data(), coords, hidden, hidden, false, false, true);
            un(kernels::Unary::Sigmoid, pre.data(), pre.data(), pre.numel());
        }
    };
    int reps = 50;
    double serial = time_ms([&] { pass(false); }, reps);
    double omp = time_ms([&] { pass(true); }, reps);
    std::printf("gates  %5lld coords x %-4lld hidden   serial %8.3f ms   omp %8.3f ms   speedup %.2fx\n",
                static_cast<long long>(coords), static_cast<long long>(hidden), serial, omp,
                serial / omp);
}

}  // namespace

int main(int argc, char** argv) {
    if (argc > 1) kernels::set_threads(std::atoi(argv[1]));
    std::printf("threads: %d\n", kernels::threads());
    for (int64_t n : {32, 64, 128, 256, 512}) bench_matmul(n);
    for (int64_t n : {1 << 12, 1 << 16, 1 << 20}) bench_unary(n);
    bench_gate_pass(200, 20);
    bench_gate_pass(10000, 20);
    bench_gate_pass(10000, 500);
    return 0;
}
