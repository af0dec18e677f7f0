#pragma once

#include <cstdint>
#include <vector>

#include "hc/tensor.hpp"

namespace hc {

// Geometry of one conv2d call, validated once and shared by fprop/bprop.
struct ConvDims {
    int B, Cin, H, W;
    int Cout, kh, kw;
    int stride, pad;
    int Hout, Wout;
};

ConvDims conv_dims(const std::vector<int>& x_shape, const std::vector<int>& w_shape,
                   const std::vector<int>& b_shape, int stride, int pad);

// OpenMP kernels. Every output element is computed independently with a fixed
// inner accumulation order, so results do not depend on thread count.
namespace kernels {

// Cross-correlation (no kernel flip). x:[B,Cin,H,W] w:[Cout,Cin,kh,kw] b:[Cout]
template <typename T>
void conv2d_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, int stride, int pad,
                    Tensor<T>& y);

template <typename T>
void conv2d_backward_input(const Tensor<T>& gy, const Tensor<T>& w, const ConvDims& d, Tensor<T>& gx);
template <typename T>
void conv2d_backward_weight(const Tensor<T>& gy, const Tensor<T>& x, const ConvDims& d, Tensor<T>& gw);
template <typename T>
void conv2d_backward_bias(const Tensor<T>& gy, Tensor<T>& gb);

// Non-overlapping k x k max pooling; H and W must be divisible by k. argmax
// records the flat input index per output cell; ties go to the first
// row-major scan position.
template <typename T>
void maxpool_forward(const Tensor<T>& x, int k, Tensor<T>& y, std::vector<std::int32_t>& argmax);
template <typename T>
void maxpool_backward(const Tensor<T>& gy, const std::vector<std::int32_t>& argmax, Tensor<T>& gx);

template <typename T>
void upsample_forward(const Tensor<T>& x, int f, Tensor<T>& y);
template <typename T>
void upsample_backward(const Tensor<T>& gy, int f, Tensor<T>& gx);

template <typename T>
void relu_forward(const Tensor<T>& x, Tensor<T>& y);
template <typename T>
void relu_backward(const Tensor<T>& gy, const Tensor<T>& x, Tensor<T>& gx);

// 5-tap binomial blur + decimate-by-2, reflect-101 borders (preserves
// constants exactly). One Gaussian pyramid step.
template <typename T>
void blur_decimate(const Tensor<T>& x, Tensor<T>& y);

// Subtractive + divisive local contrast normalization with a Gaussian window
// of the given sigma and radius. Window weights are renormalized over the
// in-bounds support, which makes the subtractive stage exactly invariant to a
// constant offset. Divisive denominator is max(mean local std, local std).
template <typename T>
void lcn(const Tensor<T>& x, double sigma, int radius, Tensor<T>& y);

}  // namespace kernels

// Serial reference lane: same contracts, naive loops, no OpenMP. Kept for
// testing and benchmarked against the parallel kernels.
namespace serial {

template <typename T>
void conv2d_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, int stride, int pad,
                    Tensor<T>& y);
template <typename T>
void conv2d_backward_input(const Tensor<T>& gy, const Tensor<T>& w, const ConvDims& d, Tensor<T>& gx);
template <typename T>
void conv2d_backward_weight(const Tensor<T>& gy, const Tensor<T>& x, const ConvDims& d, Tensor<T>& gw);
template <typename T>
void conv2d_backward_bias(const Tensor<T>& gy, Tensor<T>& gb);
template <typename T>
void maxpool_forward(const Tensor<T>& x, int k, Tensor<T>& y, std::vector<std::int32_t>& argmax);
template <typename T>
void maxpool_backward(const Tensor<T>& gy, const std::vector<std::int32_t>& argmax, Tensor<T>& gx);
template <typename T>
void upsample_forward(const Tensor<T>& x, int f, Tensor<T>& y);
template <typename T>
void upsample_backward(const Tensor<T>& gy, int f, Tensor<T>& gx);
template <typename T>
void lcn(const Tensor<T>& x, double sigma, int radius, Tensor<T>& y);

}  // namespace serial

// Applies the HEATCASCADE_THREADS cap, if set, to the OpenMP runtime.
void setup_threads_from_env();
int worker_threads();

}  // namespace hc
