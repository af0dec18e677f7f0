#pragma once

#include <cstdint>
#include <vector>

#include "hc/rng.hpp"
#include "hc/tensor.hpp"

namespace hc {

enum class DropoutMode { standard, spatial };
enum class Phase { train, infer };

// Default drop probability; nothing in the literature pins it, so it is a
// config knob everywhere it is used.
inline constexpr double kDefaultPDrop = 0.5;

// Multiplier tensor plus the bookkeeping the tests need. In train phase the
// multiplier is 0/1; in infer phase it is the constant gain (1 - p_drop).
// Spatial mode draws one Bernoulli trial per (batch item, feature map) and
// extends it across the whole map, so a dropped map is entirely zero.
template <typename T>
struct DropoutMask {
    DropoutMode mode = DropoutMode::standard;
    double p_drop = kDefaultPDrop;
    Phase phase = Phase::train;
    std::uint64_t seed = 0;
    Tensor<T> mult;                   // full input shape
    std::vector<std::uint8_t> keep;   // spatial mode: one flag per (b,c)
};

template <typename T>
DropoutMask<T> make_dropout_mask(DropoutMode mode, const std::vector<int>& shape, double p_drop,
                                 Phase phase, Rng& rng);

template <typename T>
std::pair<Tensor<T>, DropoutMask<T>> spatial_dropout(const Tensor<T>& in, double p_drop, Phase phase,
                                                     Rng& rng);
template <typename T>
std::pair<Tensor<T>, DropoutMask<T>> standard_dropout(const Tensor<T>& in, double p_drop, Phase phase,
                                                      Rng& rng);

// Local contrast normalization front-end (Gaussian window, sigma in pixels,
// fixed 9x9 support). Not differentiable on the tape: it runs before any
// trainable parameter.
template <typename T>
Tensor<T> lcn_layer(const Tensor<T>& in, double kernel_sigma);

inline constexpr int kLcnRadius = 4;

}  // namespace hc
