#include "hc/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace hc {

namespace {

int iround(double z) { return static_cast<int>(std::floor(z + 0.5)); }

int clampi(int v, int lo, int hi) { return std::max(lo, std::min(hi, v)); }

}  // namespace

int FineConfig::resolved_context(const CoarseConfig& c) const {
    const int maxf = (1 << (c.levels - 1)) * c.pool1();
    int ctx = context > 0 ? context : 2 * c.pool_factor + 8;
    if (ctx % maxf) ctx += maxf - ctx % maxf;  // every bank must divide the window
    if (ctx > std::min(c.input_w, c.input_h))
        throw std::invalid_argument("fine: context " + std::to_string(ctx) + " exceeds input extents");
    return ctx;
}

std::vector<std::vector<CropWindow>> make_crop_windows(const std::vector<std::vector<Pt>>& coarse_xy,
                                                       const std::vector<int>& bank_factors,
                                                       const CoarseConfig& ccfg, const FineConfig& fcfg) {
    const int C = fcfg.resolved_context(ccfg);
    std::vector<std::vector<CropWindow>> out(coarse_xy.size());
    for (std::size_t b = 0; b < coarse_xy.size(); ++b) {
        out[b].reserve(coarse_xy[b].size());
        for (std::size_t j = 0; j < coarse_xy[b].size(); ++j) {
            const Pt& p = coarse_xy[b][j];
            CropWindow w;
            w.joint = static_cast<int>(j);
            w.coarse = p;
            w.context = C;
            w.ox = clampi(iround(p.x - C * 0.5), 0, ccfg.input_w - C);
            w.oy = clampi(iround(p.y - C * 0.5), 0, ccfg.input_h - C);
            for (int f : bank_factors) {
                if (C % f)
                    throw std::invalid_argument("crop: context " + std::to_string(C) +
                                                " not divisible by bank factor " + std::to_string(f));
                BankRect r;
                r.factor = f;
                r.w = C / f;
                r.h = C / f;
                const int x_raw = iround((p.x - C * 0.5) / f);
                const int y_raw = iround((p.y - C * 0.5) / f);
                r.x0 = clampi(x_raw, 0, ccfg.input_w / f - r.w);
                r.y0 = clampi(y_raw, 0, ccfg.input_h / f - r.h);
                r.clamp_dx = r.x0 - x_raw;
                r.clamp_dy = r.y0 - y_raw;
                w.rects.push_back(r);
            }
            out[b].push_back(std::move(w));
        }
    }
    return out;
}

template <typename T>
FineModel<T>::FineModel(const CoarseConfig& cc, const FineConfig& fc, const std::vector<int>& bf)
    : ccfg(cc), fcfg(fc), bank_factors(bf) {
    const int F = ccfg.filters, Ff = fcfg.filters;
    for (std::size_t i = 0; i < bank_factors.size(); ++i) {
        const std::string p = "fine.bank" + std::to_string(i) + ".";
        BankParams bp;
        bp.w1 = params.add(p + "conv1.w", {Ff, F, 3, 3}, true);
        bp.b1 = params.add(p + "conv1.b", {Ff}, true);
        bp.w2 = params.add(p + "conv2.w", {Ff, Ff, 3, 3}, true);
        bp.b2 = params.add(p + "conv2.b", {Ff}, true);
        banks_.push_back(bp);
    }
    fuse_w_ = params.add("fine.fuse.w", {Ff, Ff, 1, 1}, true);
    fuse_b_ = params.add("fine.fuse.b", {Ff}, true);
    for (int j = 0; j < ccfg.joints; ++j) {
        head_w_.push_back(params.add("fine.head" + std::to_string(j) + ".w", {1, Ff, 1, 1}, true));
        head_b_.push_back(params.add("fine.head" + std::to_string(j) + ".b", {1}, true));
    }
}

template <typename T>
void FineModel<T>::init(Rng& rng) {
    for (auto* p : params.all()) {
        if (p->value.rank() == 4)
            init_conv(p, rng);
        else
            p->value.zero();
    }
}

template <typename T>
std::vector<int> FineModel<T>::forward(Tape<T>& tape, const std::vector<int>& banks,
                                       const std::vector<std::vector<CropWindow>>& windows) {
    if (banks.size() != bank_factors.size())
        throw std::invalid_argument("fine: retained bank count does not match config");
    const int B = static_cast<int>(windows.size());
    std::vector<int> fine;
    fine.reserve(head_w_.size());
    for (std::size_t j = 0; j < head_w_.size(); ++j) {
        int fused = -1;
        for (std::size_t i = 0; i < banks.size(); ++i) {
            std::vector<CropRect> rects(B);
            for (int b = 0; b < B; ++b) {
                const BankRect& r = windows[b][j].rects[i];
                rects[b] = {r.x0, r.y0, r.w, r.h};
            }
            int h = tape.crop(banks[i], rects);
            h = tape.relu(tape.conv2d(h, tape.param(banks_[i].w1), tape.param(banks_[i].b1), 1, 1));
            h = tape.relu(tape.conv2d(h, tape.param(banks_[i].w2), tape.param(banks_[i].b2), 1, 1));
            if (bank_factors[i] > 1) h = tape.upsample_nearest(h, bank_factors[i]);
            fused = (i == 0) ? h : tape.add(fused, h);
        }
        int t = tape.relu(tape.conv2d(fused, tape.param(fuse_w_), tape.param(fuse_b_), 1, 0));
        fine.push_back(tape.conv2d(t, tape.param(head_w_[j]), tape.param(head_b_[j]), 1, 0));
    }
    return fine;
}

template <typename T>
std::size_t GreedyFineModel<T>::count_for(int c1, int c2, int joints, int /*heads_in*/) {
    std::size_t n = 0;
    n += std::size_t(c1) * 3 * 9 + c1;    // conv3x3 rgb -> c1
    n += std::size_t(c1) * c1 * 9 + c1;   // conv3x3 c1 -> c1
    n += std::size_t(c2) * c1 * 9 + c2;   // extra conv3x3 c1 -> c2 (capacity matching)
    n += std::size_t(c2) * c2 + c2;       // fuse 1x1
    n += std::size_t(joints) * (c2 + 1);  // unshared heads
    return n;
}

template <typename T>
GreedyFineModel<T>::GreedyFineModel(const CoarseConfig& cc, const FineConfig& fc,
                                    std::size_t match_param_count)
    : ccfg(cc), fcfg(fc) {
    // brute-force the stage widths to land nearest the shared fine model
    std::size_t best_diff = static_cast<std::size_t>(-1);
    for (int a = 2; a <= 48; ++a)
        for (int b = 2; b <= 96; ++b) {
            const std::size_t n = count_for(a, b, ccfg.joints, 3);
            const std::size_t diff = n > match_param_count ? n - match_param_count : match_param_count - n;
            if (diff < best_diff) {
                best_diff = diff;
                c1 = a;
                c2 = b;
            }
        }
    w1_ = params.add("greedy.conv1.w", {c1, 3, 3, 3}, true);
    b1_ = params.add("greedy.conv1.b", {c1}, true);
    w2_ = params.add("greedy.conv2.w", {c1, c1, 3, 3}, true);
    b2_ = params.add("greedy.conv2.b", {c1}, true);
    w3_ = params.add("greedy.conv3.w", {c2, c1, 3, 3}, true);
    b3_ = params.add("greedy.conv3.b", {c2}, true);
    fuse_w_ = params.add("greedy.fuse.w", {c2, c2, 1, 1}, true);
    fuse_b_ = params.add("greedy.fuse.b", {c2}, true);
    for (int j = 0; j < ccfg.joints; ++j) {
        head_w_.push_back(params.add("greedy.head" + std::to_string(j) + ".w", {1, c2, 1, 1}, true));
        head_b_.push_back(params.add("greedy.head" + std::to_string(j) + ".b", {1}, true));
    }
}

template <typename T>
void GreedyFineModel<T>::init(Rng& rng) {
    for (auto* p : params.all()) {
        if (p->value.rank() == 4)
            init_conv(p, rng);
        else
            p->value.zero();
    }
}

template <typename T>
std::vector<int> GreedyFineModel<T>::forward(Tape<T>& tape, int image_node,
                                             const std::vector<std::vector<CropWindow>>& windows) {
    const int B = static_cast<int>(windows.size());
    std::vector<int> fine;
    for (std::size_t j = 0; j < head_w_.size(); ++j) {
        std::vector<CropRect> rects(B);
        for (int b = 0; b < B; ++b) {
            const CropWindow& w = windows[b][j];
            rects[b] = {w.ox, w.oy, w.context, w.context};
        }
        int h = tape.crop(image_node, rects);
        h = tape.relu(tape.conv2d(h, tape.param(w1_), tape.param(b1_), 1, 1));
        h = tape.relu(tape.conv2d(h, tape.param(w2_), tape.param(b2_), 1, 1));
        h = tape.relu(tape.conv2d(h, tape.param(w3_), tape.param(b3_), 1, 1));
        h = tape.relu(tape.conv2d(h, tape.param(fuse_w_), tape.param(fuse_b_), 1, 0));
        fine.push_back(tape.conv2d(h, tape.param(head_w_[j]), tape.param(head_b_[j]), 1, 0));
    }
    return fine;
}

template <typename T>
std::vector<Tensor<T>> render_fine_targets(const std::vector<JointSet>& batch,
                                           const std::vector<std::vector<CropWindow>>& windows,
                                           const FineConfig& fcfg, int context) {
    const int B = static_cast<int>(batch.size());
    const int N = static_cast<int>(windows.empty() ? 0 : windows[0].size());
    const double s2 = 2.0 * fcfg.target_sigma * fcfg.target_sigma;
    std::vector<Tensor<T>> out;
    out.reserve(N);
    for (int j = 0; j < N; ++j) {
        Tensor<T> t({B, 1, context, context});
        for (int b = 0; b < B; ++b) {
            if (!batch[b].valid[j]) continue;
            const CropWindow& w = windows[b][j];
            const double tx = batch[b].xy[j].x - w.ox;
            const double ty = batch[b].xy[j].y - w.oy;
            for (int y = 0; y < context; ++y)
                for (int x = 0; x < context; ++x) {
                    const double d2 = (x - tx) * (x - tx) + (y - ty) * (y - ty);
                    t.at(b, 0, y, x) = static_cast<T>(std::exp(-d2 / s2));
                }
        }
        out.push_back(std::move(t));
    }
    return out;
}

template <typename T>
int loss_e2(Tape<T>& tape, const std::vector<int>& fine_nodes, std::vector<Tensor<T>> targets) {
    if (fine_nodes.empty() || fine_nodes.size() != targets.size())
        throw std::invalid_argument("loss_e2: need one target per fine map");
    const int B = tape.value(fine_nodes[0]).dim(0);
    const double norm = 1.0 / (static_cast<double>(fine_nodes.size()) * B);
    int acc = -1;
    for (std::size_t j = 0; j < fine_nodes.size(); ++j) {
        const int m = tape.mse_sum(fine_nodes[j], std::move(targets[j]));
        acc = (j == 0) ? m : tape.add(acc, m);
    }
    return tape.scale(acc, static_cast<T>(norm));
}

template <typename T>
int loss_e3(Tape<T>& tape, int e1, int e2, double lambda) {
    if (lambda < 0) throw std::invalid_argument("loss_e3: lambda must be >= 0");
    return tape.add(e1, tape.scale(e2, static_cast<T>(lambda)));
}

template <typename T>
std::vector<std::vector<Pt>> refine_position(const std::vector<std::vector<Pt>>& coarse_xy,
                                             const std::vector<Tensor<T>>& fine_maps,
                                             const std::vector<std::vector<CropWindow>>& windows,
                                             int input_w, int input_h) {
    std::vector<std::vector<Pt>> out = coarse_xy;
    const int N = static_cast<int>(fine_maps.size());
    for (int j = 0; j < N; ++j) {
        const Tensor<T>& m = fine_maps[j];
        const int B = m.dim(0), H = m.dim(2), W = m.dim(3);
        for (int b = 0; b < B; ++b) {
            T best = m.at(b, 0, 0, 0);
            int bx = 0, by = 0;
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x)
                    if (m.at(b, 0, y, x) > best) {
                        best = m.at(b, 0, y, x);
                        bx = x;
                        by = y;
                    }
            const CropWindow& w = windows[b][j];
            out[b][j].x = std::min(double(input_w - 1), std::max(0.0, double(w.ox + bx)));
            out[b][j].y = std::min(double(input_h - 1), std::max(0.0, double(w.oy + by)));
        }
    }
    return out;
}

#define HC_INSTANTIATE(T)                                                                             \
    template class FineModel<T>;                                                                      \
    template class GreedyFineModel<T>;                                                                \
    template std::vector<Tensor<T>> render_fine_targets<T>(                                           \
        const std::vector<JointSet>&, const std::vector<std::vector<CropWindow>>&, const FineConfig&, \
        int);                                                                                         \
    template int loss_e2<T>(Tape<T>&, const std::vector<int>&, std::vector<Tensor<T>>);               \
    template int loss_e3<T>(Tape<T>&, int, int, double);                                              \
    template std::vector<std::vector<Pt>> refine_position<T>(                                         \
        const std::vector<std::vector<Pt>>&, const std::vector<Tensor<T>>&,                           \
        const std::vector<std::vector<CropWindow>>&, int, int);

HC_INSTANTIATE(float)
HC_INSTANTIATE(double)
#undef HC_INSTANTIATE

}  // namespace hc
