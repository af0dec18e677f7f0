#include "hc/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdlib>
#include <limits>

namespace hc {

ConvDims conv_dims(const std::vector<int>& xs, const std::vector<int>& ws, const std::vector<int>& bs,
                   int stride, int pad) {
    if (xs.size() != 4) throw std::invalid_argument("conv2d: input must be 4-d [B,Cin,H,W]");
    if (ws.size() != 4) throw std::invalid_argument("conv2d: kernel must be 4-d [Cout,Cin,kh,kw]");
    if (bs.size() != 1) throw std::invalid_argument("conv2d: bias must be 1-d [Cout]");
    if (stride < 1) throw std::invalid_argument("conv2d: stride must be >= 1");
    if (pad < 0) throw std::invalid_argument("conv2d: pad must be >= 0");
    ConvDims d;
    d.B = xs[0]; d.Cin = xs[1]; d.H = xs[2]; d.W = xs[3];
    d.Cout = ws[0]; d.kh = ws[2]; d.kw = ws[3];
    d.stride = stride; d.pad = pad;
    if (ws[1] != d.Cin)
        throw std::invalid_argument("conv2d: kernel expects " + std::to_string(ws[1]) +
                                    " input channels, input has " + std::to_string(d.Cin));
    if (bs[0] != d.Cout)
        throw std::invalid_argument("conv2d: bias has " + std::to_string(bs[0]) + " entries, kernel outputs " +
                                    std::to_string(d.Cout));
    if (d.kh > d.H + 2 * pad || d.kw > d.W + 2 * pad)
        throw std::invalid_argument("conv2d: kernel " + std::to_string(d.kh) + "x" + std::to_string(d.kw) +
                                    " larger than padded input " + std::to_string(d.H + 2 * pad) + "x" +
                                    std::to_string(d.W + 2 * pad));
    d.Hout = (d.H + 2 * pad - d.kh) / stride + 1;
    d.Wout = (d.W + 2 * pad - d.kw) / stride + 1;
    return d;
}

namespace kernels {

template <typename T>
void conv2d_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, int stride, int pad,
                    Tensor<T>& y) {
    const ConvDims d = conv_dims(x.shape, w.shape, b.shape, stride, pad);
    y = Tensor<T>({d.B, d.Cout, d.Hout, d.Wout});
#pragma omp parallel for collapse(2) schedule(static)
    for (int bi = 0; bi < d.B; ++bi) {
        for (int co = 0; co < d.Cout; ++co) {
            for (int oy = 0; oy < d.Hout; ++oy) {
                for (int ox = 0; ox < d.Wout; ++ox) {
                    T acc = b.v[co];
                    for (int ci = 0; ci < d.Cin; ++ci) {
                        for (int u = 0; u < d.kh; ++u) {
                            const int iy = oy * stride - pad + u;
                            if (iy < 0 || iy >= d.H) continue;
                            const T* xrow = &x.v[x.idx4(bi, ci, iy, 0)];
                            const T* wrow = &w.v[w.idx4(co, ci, u, 0)];
                            for (int v = 0; v < d.kw; ++v) {
                                const int ix = ox * stride - pad + v;
                                if (ix < 0 || ix >= d.W) continue;
                                acc += xrow[ix] * wrow[v];
                            }
                        }
                    }
                    y.at(bi, co, oy, ox) = acc;
                }
            }
        }
    }
}

// Gather form: each input cell sums the output positions whose window covers
// it. Race-free and deterministic under the parallel loop.
template <typename T>
void conv2d_backward_input(const Tensor<T>& gy, const Tensor<T>& w, const ConvDims& d, Tensor<T>& gx) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int bi = 0; bi < d.B; ++bi) {
        for (int ci = 0; ci < d.Cin; ++ci) {
            for (int iy = 0; iy < d.H; ++iy) {
                for (int ix = 0; ix < d.W; ++ix) {
                    T acc = T(0);
                    for (int co = 0; co < d.Cout; ++co) {
                        for (int u = 0; u < d.kh; ++u) {
                            const int ty = iy + d.pad - u;
                            if (ty < 0 || ty % d.stride) continue;
                            const int oy = ty / d.stride;
                            if (oy >= d.Hout) continue;
                            for (int v = 0; v < d.kw; ++v) {
                                const int tx = ix + d.pad - v;
                                if (tx < 0 || tx % d.stride) continue;
                                const int ox = tx / d.stride;
                                if (ox >= d.Wout) continue;
                                acc += w.at(co, ci, u, v) * gy.at(bi, co, oy, ox);
                            }
                        }
                    }
                    gx.at(bi, ci, iy, ix) += acc;
                }
            }
        }
    }
}

template <typename T>
void conv2d_backward_weight(const Tensor<T>& gy, const Tensor<T>& x, const ConvDims& d, Tensor<T>& gw) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int co = 0; co < d.Cout; ++co) {
        for (int ci = 0; ci < d.Cin; ++ci) {
            for (int u = 0; u < d.kh; ++u) {
                for (int v = 0; v < d.kw; ++v) {
                    T acc = T(0);
                    for (int bi = 0; bi < d.B; ++bi) {
                        for (int oy = 0; oy < d.Hout; ++oy) {
                            const int iy = oy * d.stride - d.pad + u;
                            if (iy < 0 || iy >= d.H) continue;
                            for (int ox = 0; ox < d.Wout; ++ox) {
                                const int ix = ox * d.stride - d.pad + v;
                                if (ix < 0 || ix >= d.W) continue;
                                acc += x.at(bi, ci, iy, ix) * gy.at(bi, co, oy, ox);
                            }
                        }
                    }
                    gw.at(co, ci, u, v) += acc;
                }
            }
        }
    }
}

template <typename T>
void conv2d_backward_bias(const Tensor<T>& gy, Tensor<T>& gb) {
    const int B = gy.dim(0), C = gy.dim(1);
    const int hw = gy.dim(2) * gy.dim(3);
#pragma omp parallel for schedule(static)
    for (int c = 0; c < C; ++c) {
        T acc = T(0);
        for (int bi = 0; bi < B; ++bi) {
            const T* p = &gy.v[gy.idx4(bi, c, 0, 0)];
            for (int i = 0; i < hw; ++i) acc += p[i];
        }
        gb.v[c] += acc;
    }
}

template <typename T>
void maxpool_forward(const Tensor<T>& x, int k, Tensor<T>& y, std::vector<std::int32_t>& argmax) {
    const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (k < 1) throw std::invalid_argument("maxpool: k must be >= 1");
    if (H % k || W % k)
        throw std::invalid_argument("maxpool: extents " + std::to_string(H) + "x" + std::to_string(W) +
                                    " not divisible by k=" + std::to_string(k));
    const int Ho = H / k, Wo = W / k;
    y = Tensor<T>({B, C, Ho, Wo});
    argmax.assign(y.numel(), -1);
#pragma omp parallel for collapse(2) schedule(static)
    for (int bi = 0; bi < B; ++bi) {
        for (int c = 0; c < C; ++c) {
            for (int oy = 0; oy < Ho; ++oy) {
                for (int ox = 0; ox < Wo; ++ox) {
                    T best = -std::numeric_limits<T>::infinity();
                    std::int32_t best_idx = -1;
                    for (int u = 0; u < k; ++u) {
                        for (int v = 0; v < k; ++v) {
                            const std::size_t ii = x.idx4(bi, c, oy * k + u, ox * k + v);
                            if (x.v[ii] > best) {  // strict: first scan position wins ties
                                best = x.v[ii];
                                best_idx = static_cast<std::int32_t>(ii);
                            }
                        }
                    }
                    const std::size_t oi = y.idx4(bi, c, oy, ox);
                    y.v[oi] = best;
                    argmax[oi] = best_idx;
                }
            }
        }
    }
}

template <typename T>
void maxpool_backward(const Tensor<T>& gy, const std::vector<std::int32_t>& argmax, Tensor<T>& gx) {
    // windows are disjoint, so the scatter has no races; keep it serial-order
    for (std::size_t i = 0; i < gy.numel(); ++i) gx.v[argmax[i]] += gy.v[i];
}

template <typename T>
void upsample_forward(const Tensor<T>& x, int f, Tensor<T>& y) {
    if (f < 1) throw std::invalid_argument("upsample: factor must be >= 1");
    const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    y = Tensor<T>({B, C, H * f, W * f});
#pragma omp parallel for collapse(2) schedule(static)
    for (int bi = 0; bi < B; ++bi) {
        for (int c = 0; c < C; ++c) {
            for (int oy = 0; oy < H * f; ++oy) {
                const T* src = &x.v[x.idx4(bi, c, oy / f, 0)];
                T* dst = &y.v[y.idx4(bi, c, oy, 0)];
                for (int ox = 0; ox < W * f; ++ox) dst[ox] = src[ox / f];
            }
        }
    }
}

template <typename T>
void upsample_backward(const Tensor<T>& gy, int f, Tensor<T>& gx) {
    const int B = gx.dim(0), C = gx.dim(1), H = gx.dim(2), W = gx.dim(3);
#pragma omp parallel for collapse(2) schedule(static)
    for (int bi = 0; bi < B; ++bi) {
        for (int c = 0; c < C; ++c) {
            for (int iy = 0; iy < H; ++iy) {
                for (int ix = 0; ix < W; ++ix) {
                    T acc = T(0);
                    for (int u = 0; u < f; ++u)
                        for (int v = 0; v < f; ++v) acc += gy.at(bi, c, iy * f + u, ix * f + v);
                    gx.at(bi, c, iy, ix) += acc;
                }
            }
        }
    }
}

template <typename T>
void relu_forward(const Tensor<T>& x, Tensor<T>& y) {
    y = Tensor<T>(x.shape);
    const std::int64_t n = static_cast<std::int64_t>(x.numel());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) y.v[i] = x.v[i] > T(0) ? x.v[i] : T(0);
}

template <typename T>
void relu_backward(const Tensor<T>& gy, const Tensor<T>& x, Tensor<T>& gx) {
    const std::int64_t n = static_cast<std::int64_t>(x.numel());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i)
        if (x.v[i] > T(0)) gx.v[i] += gy.v[i];  // subgradient 0 at x == 0
}

namespace {

inline int reflect101(int i, int n) {
    // ... 2 1 | 0 1 2 ... n-1 | n-2 n-3 ...
    while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * n - 2 - i;
    }
    return i;
}

}  // namespace

template <typename T>
void blur_decimate(const Tensor<T>& x, Tensor<T>& y) {
    const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (H % 2 || W % 2) throw std::invalid_argument("blur_decimate: extents must be even");
    static const double tap[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
    y = Tensor<T>({B, C, H / 2, W / 2});
#pragma omp parallel for collapse(2) schedule(static)
    for (int bi = 0; bi < B; ++bi) {
        for (int c = 0; c < C; ++c) {
            std::vector<double> tmp(static_cast<std::size_t>(H) * W);
            for (int iy = 0; iy < H; ++iy) {  // horizontal pass
                const T* row = &x.v[x.idx4(bi, c, iy, 0)];
                for (int ix = 0; ix < W; ++ix) {
                    double acc = 0;
                    for (int t = -2; t <= 2; ++t) acc += tap[t + 2] * row[reflect101(ix + t, W)];
                    tmp[static_cast<std::size_t>(iy) * W + ix] = acc;
                }
            }
            for (int oy = 0; oy < H / 2; ++oy) {  // vertical pass at even rows/cols
                for (int ox = 0; ox < W / 2; ++ox) {
                    double acc = 0;
                    for (int t = -2; t <= 2; ++t)
                        acc += tap[t + 2] * tmp[static_cast<std::size_t>(reflect101(2 * oy + t, H)) * W + 2 * ox];
                    y.at(bi, c, oy, ox) = static_cast<T>(acc);
                }
            }
        }
    }
}

// Shared LCN core, double accumulation. Weighted window sums are computed by
// renormalized separable blur: sum(w*x) / sum(w over in-bounds support).
template <typename T>
static void lcn_impl(const Tensor<T>& x, double sigma, int radius, Tensor<T>& y, bool parallel) {
    if (sigma <= 0) throw std::invalid_argument("lcn: sigma must be > 0");
    const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    y = Tensor<T>(x.shape);
    std::vector<double> g(static_cast<std::size_t>(2 * radius + 1));
    for (int t = -radius; t <= radius; ++t) g[t + radius] = std::exp(-0.5 * t * t / (sigma * sigma));

    // per-axis in-bounds weight sums
    auto axis_norm = [&](int n) {
        std::vector<double> a(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            double s = 0;
            for (int t = -radius; t <= radius; ++t)
                if (i + t >= 0 && i + t < n) s += g[t + radius];
            a[i] = s;
        }
        return a;
    };
    const std::vector<double> nx = axis_norm(W), ny = axis_norm(H);

    auto blur = [&](const std::vector<double>& src, std::vector<double>& dst, std::vector<double>& tmp) {
        for (int iy = 0; iy < H; ++iy) {
            for (int ix = 0; ix < W; ++ix) {
                double s = 0;
                for (int t = -radius; t <= radius; ++t) {
                    const int j = ix + t;
                    if (j >= 0 && j < W) s += g[t + radius] * src[static_cast<std::size_t>(iy) * W + j];
                }
                tmp[static_cast<std::size_t>(iy) * W + ix] = s / nx[ix];
            }
        }
        for (int iy = 0; iy < H; ++iy) {
            for (int ix = 0; ix < W; ++ix) {
                double s = 0;
                for (int t = -radius; t <= radius; ++t) {
                    const int j = iy + t;
                    if (j >= 0 && j < H) s += g[t + radius] * tmp[static_cast<std::size_t>(j) * W + ix];
                }
                dst[static_cast<std::size_t>(iy) * W + ix] = s / ny[iy];
            }
        }
    };

    const int planes = B * C;
#pragma omp parallel for schedule(static) if (parallel)
    for (int p = 0; p < planes; ++p) {
        const std::size_t n = static_cast<std::size_t>(H) * W;
        std::vector<double> plane(n), mu(n), tmp(n), var(n);
        const T* src = &x.v[p * n];
        for (std::size_t i = 0; i < n; ++i) plane[i] = static_cast<double>(src[i]);
        blur(plane, mu, tmp);
        for (std::size_t i = 0; i < n; ++i) {
            plane[i] -= mu[i];  // subtractive stage
            tmp[i] = plane[i] * plane[i];
        }
        std::vector<double> sq = tmp;
        blur(sq, var, tmp);
        double mean_std = 0;
        for (std::size_t i = 0; i < n; ++i) {
            var[i] = std::sqrt(std::max(0.0, var[i]));
            mean_std += var[i];
        }
        mean_std /= static_cast<double>(n);
        T* dst = &y.v[p * n];
        for (std::size_t i = 0; i < n; ++i) {
            const double denom = std::max({1e-8, mean_std, var[i]});
            dst[i] = static_cast<T>(plane[i] / denom);
        }
    }
}

template <typename T>
void lcn(const Tensor<T>& x, double sigma, int radius, Tensor<T>& y) {
    lcn_impl(x, sigma, radius, y, true);
}

#define HC_INSTANTIATE(T)                                                                                  \
    template void conv2d_forward<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int, int,       \
                                    Tensor<T>&);                                                           \
    template void conv2d_backward_input<T>(const Tensor<T>&, const Tensor<T>&, const ConvDims&,           \
                                           Tensor<T>&);                                                    \
    template void conv2d_backward_weight<T>(const Tensor<T>&, const Tensor<T>&, const ConvDims&,          \
                                            Tensor<T>&);                                                   \
    template void conv2d_backward_bias<T>(const Tensor<T>&, Tensor<T>&);                                   \
    template void maxpool_forward<T>(const Tensor<T>&, int, Tensor<T>&, std::vector<std::int32_t>&);       \
    template void maxpool_backward<T>(const Tensor<T>&, const std::vector<std::int32_t>&, Tensor<T>&);     \
    template void upsample_forward<T>(const Tensor<T>&, int, Tensor<T>&);                                  \
    template void upsample_backward<T>(const Tensor<T>&, int, Tensor<T>&);                                 \
    template void relu_forward<T>(const Tensor<T>&, Tensor<T>&);                                           \
    template void relu_backward<T>(const Tensor<T>&, const Tensor<T>&, Tensor<T>&);                        \
    template void blur_decimate<T>(const Tensor<T>&, Tensor<T>&);                                          \
    template void lcn<T>(const Tensor<T>&, double, int, Tensor<T>&);

HC_INSTANTIATE(float)
HC_INSTANTIATE(double)
#undef HC_INSTANTIATE

}  // namespace kernels

void setup_threads_from_env() {
    if (const char* e = std::getenv("HEATCASCADE_THREADS")) {
        const int n = std::atoi(e);
        if (n > 0) omp_set_num_threads(n);
    }
}

int worker_threads() { return omp_get_max_threads(); }

}  // namespace hc
