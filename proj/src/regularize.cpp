#include "hc/regularize.hpp"

#include <stdexcept>

#include "hc/kernels.hpp"

namespace hc {

template <typename T>
DropoutMask<T> make_dropout_mask(DropoutMode mode, const std::vector<int>& shape, double p_drop,
                                 Phase phase, Rng& rng) {
    if (p_drop < 0.0 || p_drop > 1.0)
        throw std::invalid_argument("dropout: p_drop must be in [0,1], got " + std::to_string(p_drop));
    if (shape.size() != 4) throw std::invalid_argument("dropout: expected [B,C,H,W] input");

    DropoutMask<T> m;
    m.mode = mode;
    m.p_drop = p_drop;
    m.phase = phase;
    m.seed = rng.seed();
    m.mult = Tensor<T>(shape);

    const int B = shape[0], C = shape[1];
    const std::size_t plane = static_cast<std::size_t>(shape[2]) * shape[3];

    if (phase == Phase::infer) {
        m.mult.fill(static_cast<T>(1.0 - p_drop));  // test-time gain rule
        return m;
    }
    if (mode == DropoutMode::spatial) {
        m.keep.resize(static_cast<std::size_t>(B) * C);
        for (int b = 0; b < B; ++b)
            for (int c = 0; c < C; ++c) {
                const bool keep = !rng.bernoulli(p_drop);  // one trial per feature map
                m.keep[static_cast<std::size_t>(b) * C + c] = keep ? 1 : 0;
                T* dst = &m.mult.v[(static_cast<std::size_t>(b) * C + c) * plane];
                const T val = keep ? T(1) : T(0);
                for (std::size_t i = 0; i < plane; ++i) dst[i] = val;
            }
    } else {
        for (auto& x : m.mult.v) x = rng.bernoulli(p_drop) ? T(0) : T(1);
    }
    return m;
}

template <typename T>
static std::pair<Tensor<T>, DropoutMask<T>> apply_mask(const Tensor<T>& in, DropoutMask<T> m) {
    Tensor<T> out = in;
    for (std::size_t i = 0; i < out.numel(); ++i) out.v[i] *= m.mult.v[i];
    return {std::move(out), std::move(m)};
}

template <typename T>
std::pair<Tensor<T>, DropoutMask<T>> spatial_dropout(const Tensor<T>& in, double p_drop, Phase phase,
                                                     Rng& rng) {
    return apply_mask(in, make_dropout_mask<T>(DropoutMode::spatial, in.shape, p_drop, phase, rng));
}

template <typename T>
std::pair<Tensor<T>, DropoutMask<T>> standard_dropout(const Tensor<T>& in, double p_drop, Phase phase,
                                                      Rng& rng) {
    return apply_mask(in, make_dropout_mask<T>(DropoutMode::standard, in.shape, p_drop, phase, rng));
}

template <typename T>
Tensor<T> lcn_layer(const Tensor<T>& in, double kernel_sigma) {
    Tensor<T> out;
    kernels::lcn(in, kernel_sigma, kLcnRadius, out);
    return out;
}

#define HC_INSTANTIATE(T)                                                                               \
    template DropoutMask<T> make_dropout_mask<T>(DropoutMode, const std::vector<int>&, double, Phase,   \
                                                 Rng&);                                                 \
    template std::pair<Tensor<T>, DropoutMask<T>> spatial_dropout<T>(const Tensor<T>&, double, Phase,   \
                                                                     Rng&);                             \
    template std::pair<Tensor<T>, DropoutMask<T>> standard_dropout<T>(const Tensor<T>&, double, Phase,  \
                                                                      Rng&);                            \
    template Tensor<T> lcn_layer<T>(const Tensor<T>&, double);

HC_INSTANTIATE(float)
HC_INSTANTIATE(double)
#undef HC_INSTANTIATE

}  // namespace hc
