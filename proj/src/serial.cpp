#include <limits>

#include "hc/kernels.hpp"

// Reference lane: the most obvious loops that satisfy the contracts. The
// OpenMP kernels are tested against these.
namespace hc::serial {

template <typename T>
void conv2d_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, int stride, int pad,
                    Tensor<T>& y) {
    const ConvDims d = conv_dims(x.shape, w.shape, b.shape, stride, pad);
    y = Tensor<T>({d.B, d.Cout, d.Hout, d.Wout});
    for (int bi = 0; bi < d.B; ++bi)
        for (int co = 0; co < d.Cout; ++co)
            for (int oy = 0; oy < d.Hout; ++oy)
                for (int ox = 0; ox < d.Wout; ++ox) {
                    T acc = b.v[co];
                    for (int ci = 0; ci < d.Cin; ++ci)
                        for (int u = 0; u < d.kh; ++u)
                            for (int v = 0; v < d.kw; ++v) {
                                const int iy = oy * stride - pad + u;
                                const int ix = ox * stride - pad + v;
                                if (iy < 0 || iy >= d.H || ix < 0 || ix >= d.W) continue;
                                acc += x.at(bi, ci, iy, ix) * w.at(co, ci, u, v);
                            }
                    y.at(bi, co, oy, ox) = acc;
                }
}

template <typename T>
void conv2d_backward_input(const Tensor<T>& gy, const Tensor<T>& w, const ConvDims& d, Tensor<T>& gx) {
    // scatter: walk the forward loops, push gradient back to every tap
    for (int bi = 0; bi < d.B; ++bi)
        for (int co = 0; co < d.Cout; ++co)
            for (int oy = 0; oy < d.Hout; ++oy)
                for (int ox = 0; ox < d.Wout; ++ox) {
                    const T g = gy.at(bi, co, oy, ox);
                    for (int ci = 0; ci < d.Cin; ++ci)
                        for (int u = 0; u < d.kh; ++u)
                            for (int v = 0; v < d.kw; ++v) {
                                const int iy = oy * d.stride - d.pad + u;
                                const int ix = ox * d.stride - d.pad + v;
                                if (iy < 0 || iy >= d.H || ix < 0 || ix >= d.W) continue;
                                gx.at(bi, ci, iy, ix) += w.at(co, ci, u, v) * g;
                            }
                }
}

template <typename T>
void conv2d_backward_weight(const Tensor<T>& gy, const Tensor<T>& x, const ConvDims& d, Tensor<T>& gw) {
    for (int bi = 0; bi < d.B; ++bi)
        for (int co = 0; co < d.Cout; ++co)
            for (int oy = 0; oy < d.Hout; ++oy)
                for (int ox = 0; ox < d.Wout; ++ox) {
                    const T g = gy.at(bi, co, oy, ox);
                    for (int ci = 0; ci < d.Cin; ++ci)
                        for (int u = 0; u < d.kh; ++u)
                            for (int v = 0; v < d.kw; ++v) {
                                const int iy = oy * d.stride - d.pad + u;
                                const int ix = ox * d.stride - d.pad + v;
                                if (iy < 0 || iy >= d.H || ix < 0 || ix >= d.W) continue;
                                gw.at(co, ci, u, v) += x.at(bi, ci, iy, ix) * g;
                            }
                }
}

template <typename T>
void conv2d_backward_bias(const Tensor<T>& gy, Tensor<T>& gb) {
    const int B = gy.dim(0), C = gy.dim(1), H = gy.dim(2), W = gy.dim(3);
    for (int bi = 0; bi < B; ++bi)
        for (int c = 0; c < C; ++c)
            for (int iy = 0; iy < H; ++iy)
                for (int ix = 0; ix < W; ++ix) gb.v[c] += gy.at(bi, c, iy, ix);
}

template <typename T>
void maxpool_forward(const Tensor<T>& x, int k, Tensor<T>& y, std::vector<std::int32_t>& argmax) {
    const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (k < 1) throw std::invalid_argument("maxpool: k must be >= 1");
    if (H % k || W % k) throw std::invalid_argument("maxpool: extents not divisible by k");
    y = Tensor<T>({B, C, H / k, W / k});
    argmax.assign(y.numel(), -1);
    for (int bi = 0; bi < B; ++bi)
        for (int c = 0; c < C; ++c)
            for (int oy = 0; oy < H / k; ++oy)
                for (int ox = 0; ox < W / k; ++ox) {
                    T best = -std::numeric_limits<T>::infinity();
                    std::int32_t bidx = -1;
                    for (int u = 0; u < k; ++u)
                        for (int v = 0; v < k; ++v) {
                            const std::size_t ii = x.idx4(bi, c, oy * k + u, ox * k + v);
                            if (x.v[ii] > best) {
                                best = x.v[ii];
                                bidx = static_cast<std::int32_t>(ii);
                            }
                        }
                    const std::size_t oi = y.idx4(bi, c, oy, ox);
                    y.v[oi] = best;
                    argmax[oi] = bidx;
                }
}

template <typename T>
void maxpool_backward(const Tensor<T>& gy, const std::vector<std::int32_t>& argmax, Tensor<T>& gx) {
    for (std::size_t i = 0; i < gy.numel(); ++i) gx.v[argmax[i]] += gy.v[i];
}

template <typename T>
void upsample_forward(const Tensor<T>& x, int f, Tensor<T>& y) {
    if (f < 1) throw std::invalid_argument("upsample: factor must be >= 1");
    const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    y = Tensor<T>({B, C, H * f, W * f});
    for (int bi = 0; bi < B; ++bi)
        for (int c = 0; c < C; ++c)
            for (int oy = 0; oy < H * f; ++oy)
                for (int ox = 0; ox < W * f; ++ox) y.at(bi, c, oy, ox) = x.at(bi, c, oy / f, ox / f);
}

template <typename T>
void upsample_backward(const Tensor<T>& gy, int f, Tensor<T>& gx) {
    const int Ho = gy.dim(2), Wo = gy.dim(3);
    for (int bi = 0; bi < gy.dim(0); ++bi)
        for (int c = 0; c < gy.dim(1); ++c)
            for (int oy = 0; oy < Ho; ++oy)
                for (int ox = 0; ox < Wo; ++ox) gx.at(bi, c, oy / f, ox / f) += gy.at(bi, c, oy, ox);
}

// Direct windowed statistics, no separable shortcut.
template <typename T>
void lcn(const Tensor<T>& x, double sigma, int radius, Tensor<T>& y) {
    if (sigma <= 0) throw std::invalid_argument("lcn: sigma must be > 0");
    const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    y = Tensor<T>(x.shape);
    const std::size_t n = static_cast<std::size_t>(H) * W;
    std::vector<double> sub(n), std_map(n);
    for (int bi = 0; bi < B; ++bi)
        for (int c = 0; c < C; ++c) {
            auto wmean = [&](const auto& value_at, int cy, int cx) {
                double num = 0, den = 0;
                for (int u = -radius; u <= radius; ++u)
                    for (int v = -radius; v <= radius; ++v) {
                        const int iy = cy + u, ix = cx + v;
                        if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                        const double g = std::exp(-0.5 * (u * u + v * v) / (sigma * sigma));
                        num += g * value_at(iy, ix);
                        den += g;
                    }
                return num / den;
            };
            for (int iy = 0; iy < H; ++iy)
                for (int ix = 0; ix < W; ++ix)
                    sub[static_cast<std::size_t>(iy) * W + ix] =
                        x.at(bi, c, iy, ix) -
                        wmean([&](int yy, int xx) { return static_cast<double>(x.at(bi, c, yy, xx)); }, iy, ix);
            double mean_std = 0;
            for (int iy = 0; iy < H; ++iy)
                for (int ix = 0; ix < W; ++ix) {
                    const double s2 = wmean(
                        [&](int yy, int xx) {
                            const double d = sub[static_cast<std::size_t>(yy) * W + xx];
                            return d * d;
                        },
                        iy, ix);
                    std_map[static_cast<std::size_t>(iy) * W + ix] = std::sqrt(std::max(0.0, s2));
                    mean_std += std_map[static_cast<std::size_t>(iy) * W + ix];
                }
            mean_std /= static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i)
                y.v[bi * C * n + c * n + i] =
                    static_cast<T>(sub[i] / std::max({1e-8, mean_std, std_map[i]}));
        }
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
    template void lcn<T>(const Tensor<T>&, double, int, Tensor<T>&);

HC_INSTANTIATE(float)
HC_INSTANTIATE(double)
#undef HC_INSTANTIATE

}  // namespace hc::serial
