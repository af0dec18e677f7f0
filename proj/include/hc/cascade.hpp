#pragma once

#include <vector>

#include "hc/coarse_model.hpp"

namespace hc {

struct FineConfig {
    int context = 0;       // input pixels covered by every crop; 0 = auto
    int filters = 8;       // trunk feature maps
    double lambda = 0.1;   // E3 = E1 + lambda * E2
    double target_sigma = 1.5;  // crop pixels, fine targets

    // Auto rule: 2*pool + 8 rounded up so every retained bank divides it.
    int resolved_context(const CoarseConfig& c) const;
};

// One retained feature bank's window for one joint, in that bank's cells.
// extent * factor == context for every bank (constant contextual size).
struct BankRect {
    int factor = 1;
    int x0 = 0, y0 = 0, w = 0, h = 0;
    int clamp_dx = 0, clamp_dy = 0;  // cells the window moved to stay in bounds
};

struct CropWindow {
    int joint = 0;
    Pt coarse;            // requested center, input px
    int ox = 0, oy = 0;   // realized full-resolution window origin, input px
    int context = 0;
    std::vector<BankRect> rects;  // one per retained bank
};

// Windows centered at the coarse predictions, one per (batch item, joint).
// Every bank's rectangle covers the same contextual size; rectangles are
// clamped to bank bounds with the shift recorded.
std::vector<std::vector<CropWindow>> make_crop_windows(const std::vector<std::vector<Pt>>& coarse_xy,
                                                       const std::vector<int>& bank_factors,
                                                       const CoarseConfig& ccfg, const FineConfig& fcfg);

// Siamese refinement net. The trunk (per-bank 3x3 convs, upsample-add fusion,
// one 1x1 stage) is one shared parameter set applied to every joint instance;
// each joint owns an unshared 1x1 head.
template <typename T>
class FineModel {
  public:
    FineModel(const CoarseConfig& ccfg, const FineConfig& fcfg, const std::vector<int>& bank_factors);
    void init(Rng& rng);

    // banks/windows come from the coarse forward on the same tape. Returns
    // one fine heat-map node per joint, shape [B, 1, context, context].
    std::vector<int> forward(Tape<T>& tape, const std::vector<int>& banks,
                             const std::vector<std::vector<CropWindow>>& windows);

    CoarseConfig ccfg;
    FineConfig fcfg;
    std::vector<int> bank_factors;
    ModelParams<T> params;

  private:
    struct BankParams {
        ParamTensor<T>*w1, *b1, *w2, *b2;
    };
    std::vector<BankParams> banks_;
    ParamTensor<T>*fuse_w_, *fuse_b_;
    std::vector<ParamTensor<T>*> head_w_, head_b_;
};

// Greedy-cascade baseline's fine net: same Siamese layout but consuming crops
// of the input image, with an extra 3x3 stage so the trainable parameter
// count matches the shared-feature fine model within 2%.
template <typename T>
class GreedyFineModel {
  public:
    GreedyFineModel(const CoarseConfig& ccfg, const FineConfig& fcfg, std::size_t match_param_count);
    void init(Rng& rng);

    std::vector<int> forward(Tape<T>& tape, int image_node,
                             const std::vector<std::vector<CropWindow>>& windows);

    static std::size_t count_for(int c1, int c2, int joints, int heads_in);

    CoarseConfig ccfg;
    FineConfig fcfg;
    int c1 = 0, c2 = 0;  // chosen stage widths
    ModelParams<T> params;

  private:
    ParamTensor<T>*w1_, *b1_, *w2_, *b2_, *w3_, *b3_, *fuse_w_, *fuse_b_;
    std::vector<ParamTensor<T>*> head_w_, head_b_;
};

// Fine targets: Gaussian (sigma in crop px, peak 1) at the ground-truth joint
// in window coordinates; invalid joints give zero maps.
template <typename T>
std::vector<Tensor<T>> render_fine_targets(const std::vector<JointSet>& batch,
                                           const std::vector<std::vector<CropWindow>>& windows,
                                           const FineConfig& fcfg, int context);

// E2: mean over joints and batch of the summed squared fine-map distance.
template <typename T>
int loss_e2(Tape<T>& tape, const std::vector<int>& fine_nodes, std::vector<Tensor<T>> targets);

// E3 = E1 + lambda * E2.
template <typename T>
int loss_e3(Tape<T>& tape, int e1, int e2, double lambda);

// Final positions: window origin + fine argmax (full-resolution cells),
// clamped to the image. Equals coarse + (argmax - window center) when the
// window was not clamped.
template <typename T>
std::vector<std::vector<Pt>> refine_position(const std::vector<std::vector<Pt>>& coarse_xy,
                                             const std::vector<Tensor<T>>& fine_maps,
                                             const std::vector<std::vector<CropWindow>>& windows,
                                             int input_w, int input_h);

}  // namespace hc
