#include <chrono>
#include <cstdio>
#include <functional>

#include "hc/kernels.hpp"
#include "hc/rng.hpp"

// Times the OpenMP kernels against the serial reference lane.
// Usage: bench_kernels [reps]

using hc::Tensor;

namespace {

double time_best(const std::function<void()>& fn, int reps) {
    double best = 1e300;
    for (int i = 0; i < reps; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return best;
}

void row(const char* name, double serial_s, double omp_s) {
    std::printf("%-24s %10.3f ms %10.3f ms %8.2fx\n", name, serial_s * 1e3, omp_s * 1e3,
                serial_s / omp_s);
}

}  // namespace

int main(int argc, char** argv) {
    hc::setup_threads_from_env();
    const int reps = argc > 1 ? std::atoi(argv[1]) : 3;

    hc::Rng rng(99);
    const int B = 4, C = 8, H = 96, W = 96;
    Tensor<float> x({B, C, H, W}), w({C, C, 5, 5}), b({C});
    for (auto& v : x.v) v = static_cast<float>(rng.normal());
    for (auto& v : w.v) v = static_cast<float>(rng.normal() * 0.1);

    std::printf("threads: %d, input %dx%dx%dx%d, kernel 5x5\n", hc::worker_threads(), B, C, H, W);
    std::printf("%-24s %13s %13s %9s\n", "kernel", "serial", "openmp", "speedup");

    Tensor<float> y;
    const hc::ConvDims d = hc::conv_dims(x.shape, w.shape, b.shape, 1, 2);

    row("conv2d_forward",
        time_best([&] { hc::serial::conv2d_forward(x, w, b, 1, 2, y); }, reps),
        time_best([&] { hc::kernels::conv2d_forward(x, w, b, 1, 2, y); }, reps));

    hc::kernels::conv2d_forward(x, w, b, 1, 2, y);
    Tensor<float> gx(x.shape), gw(w.shape);
    row("conv2d_backward_input",
        time_best([&] { gx.zero(); hc::serial::conv2d_backward_input(y, w, d, gx); }, reps),
        time_best([&] { gx.zero(); hc::kernels::conv2d_backward_input(y, w, d, gx); }, reps));
    row("conv2d_backward_weight",
        time_best([&] { gw.zero(); hc::serial::conv2d_backward_weight(y, x, d, gw); }, reps),
        time_best([&] { gw.zero(); hc::kernels::conv2d_backward_weight(y, x, d, gw); }, reps));

    std::vector<std::int32_t> argmax;
    Tensor<float> pooled;
    row("maxpool_forward",
        time_best([&] { hc::serial::maxpool_forward(x, 2, pooled, argmax); }, reps),
        time_best([&] { hc::kernels::maxpool_forward(x, 2, pooled, argmax); }, reps));

    Tensor<float> up;
    row("upsample_forward",
        time_best([&] { hc::serial::upsample_forward(pooled, 4, up); }, reps),
        time_best([&] { hc::kernels::upsample_forward(pooled, 4, up); }, reps));

    Tensor<float> normed;
    row("lcn",
        time_best([&] { hc::serial::lcn(x, 2.0, 4, normed); }, reps),
        time_best([&] { hc::kernels::lcn(x, 2.0, 4, normed); }, reps));

    return 0;
}
