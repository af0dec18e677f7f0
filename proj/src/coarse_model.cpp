#include "hc/coarse_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace hc {

void CoarseConfig::validate() const {
    if (pool_factor != 4 && pool_factor != 8 && pool_factor != 16)
        throw std::invalid_argument("coarse: pool_factor must be 4, 8 or 16");
    if (levels < 1) throw std::invalid_argument("coarse: need at least one pyramid level");
    if (joints < 1) throw std::invalid_argument("coarse: need at least one joint");
    const int div = (1 << (levels - 1)) * pool_factor;
    if (input_h % div || input_w % div)
        throw std::invalid_argument("coarse: input " + std::to_string(input_h) + "x" +
                                    std::to_string(input_w) + " must divide by 2^(levels-1)*pool = " +
                                    std::to_string(div));
}

template <typename T>
Pyramid<T> build_pyramid(const Tensor<T>& image, int levels) {
    if (levels < 1) throw std::invalid_argument("pyramid: levels must be >= 1");
    const int div = 1 << (levels - 1);
    if (image.dim(2) % div || image.dim(3) % div)
        throw std::invalid_argument("pyramid: extents must divide by 2^(levels-1)");
    Pyramid<T> pyr;
    pyr.levels.push_back(image);
    for (int l = 1; l < levels; ++l) {
        Tensor<T> next;
        kernels::blur_decimate(pyr.levels.back(), next);
        pyr.levels.push_back(std::move(next));
    }
    return pyr;
}

template <typename T>
Tensor<T> render_targets(const std::vector<JointSet>& batch, const CoarseConfig& cfg) {
    const int B = static_cast<int>(batch.size());
    const int N = cfg.joints, H = cfg.heat_h(), W = cfg.heat_w();
    const HeatGeometry geom{cfg.pool_factor};
    const double s2 = 2.0 * cfg.target_sigma * cfg.target_sigma;
    Tensor<T> maps({B, N, H, W});
    for (int b = 0; b < B; ++b) {
        const JointSet& js = batch[b];
        for (int j = 0; j < N; ++j) {
            if (!js.valid[j]) continue;  // all-zero map
            const double cx = geom.input_to_cell(js.xy[j].x);
            const double cy = geom.input_to_cell(js.xy[j].y);
            for (int v = 0; v < H; ++v)
                for (int u = 0; u < W; ++u) {
                    const double d2 = (u - cx) * (u - cx) + (v - cy) * (v - cy);
                    maps.at(b, j, v, u) = static_cast<T>(std::exp(-d2 / s2));
                }
        }
    }
    return maps;
}

template <typename T>
std::vector<std::vector<Pt>> argmax_extract(const Tensor<T>& maps, const HeatGeometry& geom) {
    const int B = maps.dim(0), N = maps.dim(1), H = maps.dim(2), W = maps.dim(3);
    std::vector<std::vector<Pt>> out(B, std::vector<Pt>(N));
    for (int b = 0; b < B; ++b)
        for (int j = 0; j < N; ++j) {
            T best = maps.at(b, j, 0, 0);
            int bu = 0, bv = 0;
            for (int v = 0; v < H; ++v)
                for (int u = 0; u < W; ++u)
                    if (maps.at(b, j, v, u) > best) {  // strict: first row-major cell wins ties
                        best = maps.at(b, j, v, u);
                        bu = u; bv = v;
                    }
            out[b][j] = {geom.cell_to_input(bu), geom.cell_to_input(bv)};
        }
    return out;
}

template <typename T>
CoarseModel<T>::CoarseModel(const CoarseConfig& c) : cfg(c) {
    cfg.validate();
    const int F = cfg.filters;
    for (int l = 0; l < cfg.levels; ++l) {
        const std::string p = "coarse.bank" + std::to_string(l) + ".";
        BankParams bp;
        bp.w1 = params.add(p + "conv1.w", {F, 3, 5, 5}, false);
        bp.b1 = params.add(p + "conv1.b", {F}, false);
        bp.w2 = params.add(p + "conv2.w", {F, F, 5, 5}, false);
        bp.b2 = params.add(p + "conv2.b", {F}, false);
        banks_.push_back(bp);
    }
    fc1_w_ = params.add("coarse.fc1.w", {cfg.hidden_1x1, F, 1, 1}, false);
    fc1_b_ = params.add("coarse.fc1.b", {cfg.hidden_1x1}, false);
    fc2_w_ = params.add("coarse.fc2.w", {cfg.joints, cfg.hidden_1x1, 1, 1}, false);
    fc2_b_ = params.add("coarse.fc2.b", {cfg.joints}, false);
}

template <typename T>
void CoarseModel<T>::init(Rng& rng) {
    for (auto* p : params.all()) {
        if (p->value.rank() == 4)
            init_conv(p, rng);
        else
            p->value.zero();
    }
}

template <typename T>
typename CoarseModel<T>::Forward CoarseModel<T>::forward(Tape<T>& tape, const Pyramid<T>& pyr,
                                                         Phase phase, Rng* rng) {
    if (static_cast<int>(pyr.levels.size()) != cfg.levels)
        throw std::invalid_argument("coarse: pyramid depth does not match config");
    if (phase == Phase::train && rng == nullptr)
        throw std::invalid_argument("coarse: train phase needs an rng for dropout");

    Forward fw;
    fw.geom = HeatGeometry{cfg.pool_factor};
    const int p1 = cfg.pool1(), p2 = cfg.pool2();

    int fused = -1;
    for (int l = 0; l < cfg.levels; ++l) {
        const int x = tape.input(lcn_layer(pyr.levels[l], cfg.lcn_sigma));
        int h = tape.relu(tape.conv2d(x, tape.param(banks_[l].w1), tape.param(banks_[l].b1), 1, 2));
        fw.banks.push_back(h);
        fw.bank_factor.push_back(1 << l);
        h = tape.maxpool2d(h, p1);
        h = tape.relu(tape.conv2d(h, tape.param(banks_[l].w2), tape.param(banks_[l].b2), 1, 2));
        fw.banks.push_back(h);
        fw.bank_factor.push_back((1 << l) * p1);
        h = tape.maxpool2d(h, p2);
        // bring the coarser banks up to the finest bank's heat resolution
        if (l > 0) h = tape.upsample_nearest(h, 1 << l);
        fused = (l == 0) ? h : tape.add(fused, h);
    }

    Rng unused(0);
    DropoutMask<T> mask = make_dropout_mask<T>(DropoutMode::spatial, tape.value(fused).shape, cfg.p_drop,
                                               phase, phase == Phase::train ? *rng : unused);
    int h = tape.dropout(fused, mask.mult);
    h = tape.relu(tape.conv2d(h, tape.param(fc1_w_), tape.param(fc1_b_), 1, 0));
    fw.heat = tape.conv2d(h, tape.param(fc2_w_), tape.param(fc2_b_), 1, 0);
    return fw;
}

template <typename T>
int loss_e1(Tape<T>& tape, int heat_node, Tensor<T> targets) {
    const auto& s = tape.value(heat_node).shape;
    const double norm = 1.0 / (static_cast<double>(s[0]) * s[1]);
    return tape.scale(tape.mse_sum(heat_node, std::move(targets)), static_cast<T>(norm));
}

#define HC_INSTANTIATE(T)                                                                    \
    template Pyramid<T> build_pyramid<T>(const Tensor<T>&, int);                             \
    template Tensor<T> render_targets<T>(const std::vector<JointSet>&, const CoarseConfig&); \
    template std::vector<std::vector<Pt>> argmax_extract<T>(const Tensor<T>&,                \
                                                            const HeatGeometry&);            \
    template class CoarseModel<T>;                                                           \
    template int loss_e1<T>(Tape<T>&, int, Tensor<T>);

HC_INSTANTIATE(float)
HC_INSTANTIATE(double)
#undef HC_INSTANTIATE

}  // namespace hc
