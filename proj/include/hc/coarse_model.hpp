#pragma once

#include <vector>

#include "hc/autodiff.hpp"
#include "hc/params.hpp"
#include "hc/regularize.hpp"
#include "hc/tensor.hpp"

namespace hc {

// Per-sample annotation view used by target rendering and evaluation.
struct JointSet {
    std::vector<Pt> xy;
    std::vector<std::uint8_t> valid;
};

struct CoarseConfig {
    int input_h = 64, input_w = 64;
    int levels = 3;        // Gaussian pyramid depth
    int pool_factor = 8;   // total pooling per bank: 4, 8 or 16
    int filters = 8;       // feature maps per conv stage
    int hidden_1x1 = 16;   // width of the first 1x1 stage
    int joints = 7;
    double target_sigma = 1.5;  // heat-map cells
    double lcn_sigma = 2.0;
    double p_drop = kDefaultPDrop;

    // The per-bank pooling is split over the two conv stages into near-equal
    // power-of-two factors: 4 -> 2*2, 8 -> 2*4, 16 -> 4*4.
    int pool1() const {
        int p = 1;
        while (p * p < pool_factor) p *= 2;
        return pool_factor / p;
    }
    int pool2() const { return pool_factor / pool1(); }

    int heat_h() const { return input_h / pool_factor; }
    int heat_w() const { return input_w / pool_factor; }

    void validate() const;
};

// Maps between heat-map cell coordinates and input pixels. Cell u covers
// input columns [u*pool, (u+1)*pool); its center is u*pool + (pool-1)/2.
struct HeatGeometry {
    int pool = 8;
    double cell_to_input(double cell) const { return cell * pool + (pool - 1) * 0.5; }
    double input_to_cell(double px) const { return (px - (pool - 1) * 0.5) / pool; }
};

template <typename T>
struct HeatMapSet {
    Tensor<T> maps;  // [B, N, H/pool, W/pool]
    HeatGeometry geom;
};

template <typename T>
struct Pyramid {
    std::vector<Tensor<T>> levels;  // level l extents = level 0 extents / 2^l
};

// 5-tap binomial blur + decimate per level; extents must divide by 2^(levels-1).
template <typename T>
Pyramid<T> build_pyramid(const Tensor<T>& image, int levels);

// Unnormalized Gaussian targets, peak 1.0 at the joint, sigma in heat-map
// cells. Invalid joints render all-zero maps.
template <typename T>
Tensor<T> render_targets(const std::vector<JointSet>& batch, const CoarseConfig& cfg);

// Global per-joint argmax converted to input pixels (cell centers); ties go
// to the lowest row-major index.
template <typename T>
std::vector<std::vector<Pt>> argmax_extract(const Tensor<T>& maps, const HeatGeometry& geom);

// Multi-resolution coarse model. Each bank runs LCN -> conv5x5/pool ->
// conv5x5/pool with its own weights; bank outputs are upsampled to the finest
// bank's resolution and summed; SpatialDropout precedes the two 1x1 stages.
template <typename T>
class CoarseModel {
  public:
    explicit CoarseModel(const CoarseConfig& cfg);
    void init(Rng& rng);

    struct Forward {
        int heat = -1;                  // [B, N, heat_h, heat_w]
        std::vector<int> banks;         // retained conv1/conv2 nodes, all resolution banks
        std::vector<int> bank_factor;   // downsampling of each retained bank vs the input
        HeatGeometry geom;
    };

    // rng is only touched in train phase (dropout trials).
    Forward forward(Tape<T>& tape, const Pyramid<T>& pyr, Phase phase, Rng* rng);

    CoarseConfig cfg;
    ModelParams<T> params;

  private:
    struct BankParams {
        ParamTensor<T>*w1, *b1, *w2, *b2;
    };
    std::vector<BankParams> banks_;
    ParamTensor<T>*fc1_w_, *fc1_b_, *fc2_w_, *fc2_b_;
};

// E1: mean over joints (and batch) of the summed squared heat-map distance.
template <typename T>
int loss_e1(Tape<T>& tape, int heat_node, Tensor<T> targets);

}  // namespace hc
