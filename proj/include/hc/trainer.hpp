#pragma once

#include <ostream>
#include <stdexcept>
#include <vector>

#include "hc/cascade.hpp"
#include "hc/coarse_model.hpp"
#include "hc/prior.hpp"
#include "hc/synth.hpp"

namespace hc {

struct TrainConfig {
    int epochs_coarse = 40;
    int epochs_fine = 30;
    int epochs_joint = 20;
    double lr_coarse = 0.02;
    double lr_fine = 0.02;
    double lr_joint = 0.005;
    double momentum = 0.9;
    int batch = 16;
    double lambda = 0.1;
    bool augment = false;
    std::uint64_t seed = 1;
    int eval_subset = 64;  // samples used for the per-epoch error metric
};

struct EpochLog {
    int epoch = 0;
    int phase = 0;
    double e1 = 0, e2 = 0, e3 = 0;
    double err_coarse = 0;  // mean |argmax - truth| on the eval subset, px
    double err_final = 0;   // refined (phases 2-3), else same as coarse
};

struct TrainLog {
    std::vector<EpochLog> rows;
    double final_e1 = 0;
};

class TrainingDiverged : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Momentum SGD: v = mu*v - lr*g; p += v.
template <typename T>
void sgd_step(const std::vector<ParamTensor<T>*>& params, double lr, double momentum);

// Three phases: (1) coarse on E1; (2) coarse frozen, fine on E2 with detached
// features; (3) joint on E3 = E1 + lambda*E2, E2 gradients reaching the
// coarse weights through the crop module. NaN anywhere aborts.
template <typename T>
TrainLog train_schedule(const Dataset& train, CoarseModel<T>& coarse, FineModel<T>& fine,
                        const TrainConfig& cfg, std::ostream* log_csv = nullptr);

// Phases 2 and 3 only, for an already-trained coarse model.
template <typename T>
TrainLog train_fine_and_joint(const Dataset& train, CoarseModel<T>& coarse, FineModel<T>& fine,
                              const TrainConfig& cfg, std::ostream* log_csv = nullptr);

// Single-phase coarse-only training (pool sweep, pretraining).
template <typename T>
TrainLog train_coarse_only(const Dataset& train, CoarseModel<T>& coarse, int epochs,
                           const TrainConfig& cfg, std::ostream* log_csv = nullptr);

// Greedy baseline: coarse stays frozen forever; the fine net sees cropped
// input images instead of shared features.
template <typename T>
TrainLog train_greedy(const Dataset& train, CoarseModel<T>& coarse, GreedyFineModel<T>& greedy,
                      int epochs, const TrainConfig& cfg, std::ostream* log_csv = nullptr);

struct Predictions {
    std::vector<std::vector<Pt>> coarse_xy;
    std::vector<std::vector<Pt>> final_xy;  // == coarse_xy when no fine model given
};

// Inference (dropout in gain mode). Any of fine/greedy/prior may be null.
template <typename T>
Predictions predict(CoarseModel<T>& coarse, FineModel<T>* fine, GreedyFineModel<T>* greedy,
                    const std::vector<const AnnotatedSample*>& samples, const PairwisePrior* prior,
                    int batch = 16);

template <typename T>
Tensor<T> batch_images(const std::vector<const AnnotatedSample*>& samples);

std::vector<const AnnotatedSample*> sample_ptrs(const Dataset& ds, int limit = -1);

}  // namespace hc
