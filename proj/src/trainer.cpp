#include "hc/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "hc/evalkit.hpp"

namespace hc {

template <typename T>
void sgd_step(const std::vector<ParamTensor<T>*>& params, double lr, double momentum) {
    for (auto* p : params) {
        for (std::size_t i = 0; i < p->value.numel(); ++i) {
            p->vel.v[i] = static_cast<T>(momentum * p->vel.v[i] - lr * p->grad.v[i]);
            p->value.v[i] += p->vel.v[i];
        }
    }
}

template <typename T>
Tensor<T> batch_images(const std::vector<const AnnotatedSample*>& samples) {
    const int B = static_cast<int>(samples.size());
    const int H = samples[0]->image.dim(1), W = samples[0]->image.dim(2);
    Tensor<T> out({B, 3, H, W});
    const std::size_t n = samples[0]->image.numel();
    for (int b = 0; b < B; ++b)
        for (std::size_t i = 0; i < n; ++i)
            out.v[static_cast<std::size_t>(b) * n + i] = static_cast<T>(samples[b]->image.v[i]);
    return out;
}

std::vector<const AnnotatedSample*> sample_ptrs(const Dataset& ds, int limit) {
    std::vector<const AnnotatedSample*> out;
    const int n = limit < 0 ? static_cast<int>(ds.samples.size())
                            : std::min<int>(limit, static_cast<int>(ds.samples.size()));
    out.reserve(n);
    for (int i = 0; i < n; ++i) out.push_back(&ds.samples[i]);
    return out;
}

namespace {

std::vector<JointSet> joint_sets(const std::vector<const AnnotatedSample*>& samples) {
    std::vector<JointSet> js;
    js.reserve(samples.size());
    for (const auto* s : samples) js.push_back(s->joint_set());
    return js;
}

double mean_err(const std::vector<std::vector<Pt>>& preds,
                const std::vector<const AnnotatedSample*>& samples) {
    double acc = 0;
    int n = 0;
    for (std::size_t s = 0; s < samples.size(); ++s)
        for (std::size_t j = 0; j < preds[s].size(); ++j) {
            if (!samples[s]->valid[j]) continue;
            acc += dist(preds[s][j], samples[s]->joints[j]);
            ++n;
        }
    return n ? acc / n : 0.0;
}

template <typename T>
void check_loss(double v, int epoch, int phase) {
    if (!std::isfinite(v))
        throw TrainingDiverged("loss diverged at phase " + std::to_string(phase) + " epoch " +
                               std::to_string(epoch));
}

}  // namespace

// Shared per-epoch machinery: shuffled minibatches, optional augmentation,
// one tape per batch.
template <typename T, typename StepFn>
static double run_epoch(const Dataset& train, const TrainConfig& cfg, Rng& rng, StepFn&& step) {
    std::vector<int> order(train.samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    for (int i = static_cast<int>(order.size()) - 1; i > 0; --i)
        std::swap(order[i], order[rng.uniform_int(i + 1)]);

    double loss_acc = 0;
    int batches = 0;
    std::vector<AnnotatedSample> augmented;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
        const std::size_t end = std::min(order.size(), start + cfg.batch);
        std::vector<const AnnotatedSample*> batch;
        augmented.clear();
        augmented.reserve(end - start);
        for (std::size_t i = start; i < end; ++i) {
            const AnnotatedSample& s = train.samples[order[i]];
            if (cfg.augment) {
                augmented.push_back(augment(s, rng));
            }
        }
        if (cfg.augment) {
            for (const auto& a : augmented) batch.push_back(&a);
        } else {
            for (std::size_t i = start; i < end; ++i) batch.push_back(&train.samples[order[i]]);
        }
        loss_acc += step(batch, rng);
        ++batches;
    }
    return batches ? loss_acc / batches : 0.0;
}

template <typename T>
static EpochLog eval_row(const Dataset& train, CoarseModel<T>& coarse, FineModel<T>* fine,
                         const TrainConfig& cfg) {
    EpochLog row;
    const auto subset = sample_ptrs(train, cfg.eval_subset);
    const Predictions p = predict<T>(coarse, fine, nullptr, subset, nullptr, cfg.batch);
    row.err_coarse = mean_err(p.coarse_xy, subset);
    row.err_final = mean_err(p.final_xy, subset);
    return row;
}

static void emit(std::ostream* csv, const EpochLog& r) {
    if (!csv) return;
    if (csv->tellp() == 0) *csv << "epoch,phase,e1,e2,e3,err_coarse,err_final\n";
    *csv << r.epoch << "," << r.phase << "," << format_g(r.e1) << "," << format_g(r.e2) << ","
         << format_g(r.e3) << "," << format_g(r.err_coarse) << "," << format_g(r.err_final) << "\n";
}

template <typename T>
TrainLog train_coarse_only(const Dataset& train, CoarseModel<T>& coarse, int epochs,
                           const TrainConfig& cfg, std::ostream* log_csv) {
    TrainLog log;
    Rng rng(cfg.seed);
    const auto coarse_params = coarse.params.all();
    for (int e = 0; e < epochs; ++e) {
        const double e1 = run_epoch<T>(train, cfg, rng, [&](const auto& batch, Rng& r) {
            coarse.params.zero_grad();
            Tape<T> tape;
            const Pyramid<T> pyr = build_pyramid(batch_images<T>(batch), coarse.cfg.levels);
            const auto fw = coarse.forward(tape, pyr, Phase::train, &r);
            const int loss = loss_e1(tape, fw.heat, render_targets<T>(joint_sets(batch), coarse.cfg));
            tape.backward(loss);
            sgd_step(coarse_params, cfg.lr_coarse, cfg.momentum);
            return static_cast<double>(tape.value(loss).v[0]);
        });
        check_loss<T>(e1, e, 1);
        EpochLog row = eval_row<T>(train, coarse, nullptr, cfg);
        row.epoch = e;
        row.phase = 1;
        row.e1 = e1;
        emit(log_csv, row);
        log.rows.push_back(row);
        log.final_e1 = e1;
    }
    return log;
}

template <typename T>
TrainLog train_schedule(const Dataset& train, CoarseModel<T>& coarse, FineModel<T>& fine,
                        const TrainConfig& cfg, std::ostream* log_csv) {
    TrainLog log = train_coarse_only(train, coarse, cfg.epochs_coarse, cfg, log_csv);
    TrainLog rest = train_fine_and_joint(train, coarse, fine, cfg, log_csv);
    for (auto& r : rest.rows) log.rows.push_back(r);
    log.final_e1 = rest.rows.empty() ? log.final_e1 : rest.final_e1;
    return log;
}

template <typename T>
TrainLog train_fine_and_joint(const Dataset& train, CoarseModel<T>& coarse, FineModel<T>& fine,
                              const TrainConfig& cfg, std::ostream* log_csv) {
    TrainLog log;
    Rng rng = Rng(cfg.seed).split(2);
    const auto fine_params = fine.params.all();
    std::vector<ParamTensor<T>*> all_params = coarse.params.all();
    for (auto* p : fine_params) all_params.push_back(p);

    for (int phase = 2; phase <= 3; ++phase) {
        const int epochs = phase == 2 ? cfg.epochs_fine : cfg.epochs_joint;
        const double lr = phase == 2 ? cfg.lr_fine : cfg.lr_joint;
        for (int e = 0; e < epochs; ++e) {
            double e1_acc = 0, e2_acc = 0;
            const double loss = run_epoch<T>(train, cfg, rng, [&](const auto& batch, Rng& r) {
                coarse.params.zero_grad();
                fine.params.zero_grad();
                Tape<T> tape;
                const Pyramid<T> pyr = build_pyramid(batch_images<T>(batch), coarse.cfg.levels);
                const auto fw = coarse.forward(tape, pyr, Phase::train, &r);
                const auto js = joint_sets(batch);
                const int e1 = loss_e1(tape, fw.heat, render_targets<T>(js, coarse.cfg));

                const auto coarse_xy = argmax_extract(tape.value(fw.heat), fw.geom);
                const auto windows = make_crop_windows(coarse_xy, fw.bank_factor, coarse.cfg, fine.fcfg);
                std::vector<int> banks = fw.banks;
                if (phase == 2)  // frozen coarse: cut the graph below the crops
                    for (auto& bnode : banks) bnode = tape.input(tape.value(bnode));
                const auto fine_nodes = fine.forward(tape, banks, windows);
                const int ctx = fine.fcfg.resolved_context(coarse.cfg);
                const int e2 =
                    loss_e2(tape, fine_nodes, render_fine_targets<T>(js, windows, fine.fcfg, ctx));

                e1_acc += tape.value(e1).v[0];
                e2_acc += tape.value(e2).v[0];
                if (phase == 2) {
                    tape.backward(e2);
                    sgd_step(fine_params, lr, cfg.momentum);
                    return static_cast<double>(tape.value(e2).v[0]);
                }
                const int e3 = loss_e3(tape, e1, e2, cfg.lambda);
                tape.backward(e3);
                sgd_step(all_params, lr, cfg.momentum);
                return static_cast<double>(tape.value(e3).v[0]);
            });
            check_loss<T>(loss, e, phase);
            const int batches = (static_cast<int>(train.samples.size()) + cfg.batch - 1) / cfg.batch;
            EpochLog row = eval_row<T>(train, coarse, &fine, cfg);
            row.epoch = e;
            row.phase = phase;
            row.e1 = e1_acc / batches;
            row.e2 = e2_acc / batches;
            row.e3 = row.e1 + cfg.lambda * row.e2;
            emit(log_csv, row);
            log.rows.push_back(row);
            log.final_e1 = row.e1;
        }
    }
    return log;
}

template <typename T>
TrainLog train_greedy(const Dataset& train, CoarseModel<T>& coarse, GreedyFineModel<T>& greedy,
                      int epochs, const TrainConfig& cfg, std::ostream* log_csv) {
    TrainLog log;
    Rng rng(Rng(cfg.seed).split(3).seed());
    const auto greedy_params = greedy.params.all();
    for (int e = 0; e < epochs; ++e) {
        const double e2 = run_epoch<T>(train, cfg, rng, [&](const auto& batch, Rng& r) {
            greedy.params.zero_grad();
            Tape<T> tape;
            Tensor<T> images = batch_images<T>(batch);
            const Pyramid<T> pyr = build_pyramid(images, coarse.cfg.levels);
            const auto fw = coarse.forward(tape, pyr, Phase::train, &r);
            const auto js = joint_sets(batch);
            const auto coarse_xy = argmax_extract(tape.value(fw.heat), fw.geom);
            const auto windows = make_crop_windows(coarse_xy, fw.bank_factor, coarse.cfg, greedy.fcfg);
            const int image_node = tape.input(std::move(images));
            const auto fine_nodes = greedy.forward(tape, image_node, windows);
            const int ctx = greedy.fcfg.resolved_context(coarse.cfg);
            const int loss =
                loss_e2(tape, fine_nodes, render_fine_targets<T>(js, windows, greedy.fcfg, ctx));
            tape.backward(loss);
            sgd_step(greedy_params, cfg.lr_fine, cfg.momentum);
            return static_cast<double>(tape.value(loss).v[0]);
        });
        check_loss<T>(e2, e, 2);
        const auto subset = sample_ptrs(train, cfg.eval_subset);
        const Predictions p = predict<T>(coarse, nullptr, &greedy, subset, nullptr, cfg.batch);
        EpochLog row;
        row.epoch = e;
        row.phase = 2;
        row.e2 = e2;
        row.err_coarse = mean_err(p.coarse_xy, subset);
        row.err_final = mean_err(p.final_xy, subset);
        emit(log_csv, row);
        log.rows.push_back(row);
    }
    return log;
}

template <typename T>
Predictions predict(CoarseModel<T>& coarse, FineModel<T>* fine, GreedyFineModel<T>* greedy,
                    const std::vector<const AnnotatedSample*>& samples, const PairwisePrior* prior,
                    int batch) {
    Predictions out;
    for (std::size_t start = 0; start < samples.size(); start += batch) {
        const std::size_t end = std::min(samples.size(), start + batch);
        std::vector<const AnnotatedSample*> chunk(samples.begin() + start, samples.begin() + end);
        Tape<T> tape;
        Tensor<T> images = batch_images<T>(chunk);
        const Pyramid<T> pyr = build_pyramid(images, coarse.cfg.levels);
        const auto fw = coarse.forward(tape, pyr, Phase::infer, nullptr);
        Tensor<T> heat = tape.value(fw.heat);
        if (prior) {
            std::vector<Pt> torsos;
            for (const auto* s : chunk) torsos.push_back(s->torso);
            heat = apply_prior(heat, torsos, fw.geom, *prior);
        }
        const auto coarse_xy = argmax_extract(heat, fw.geom);
        std::vector<std::vector<Pt>> final_xy = coarse_xy;
        if (fine || greedy) {
            const FineConfig& fcfg = fine ? fine->fcfg : greedy->fcfg;
            const auto windows = make_crop_windows(coarse_xy, fw.bank_factor, coarse.cfg, fcfg);
            std::vector<int> nodes;
            if (fine) {
                nodes = fine->forward(tape, fw.banks, windows);
            } else {
                const int image_node = tape.input(std::move(images));
                nodes = greedy->forward(tape, image_node, windows);
            }
            std::vector<Tensor<T>> fine_maps;
            fine_maps.reserve(nodes.size());
            for (int nid : nodes) fine_maps.push_back(tape.value(nid));
            final_xy = refine_position(coarse_xy, fine_maps, windows, coarse.cfg.input_w,
                                       coarse.cfg.input_h);
        }
        for (auto& r : coarse_xy) out.coarse_xy.push_back(r);
        for (auto& r : final_xy) out.final_xy.push_back(r);
    }
    return out;
}

#define HC_INSTANTIATE(T)                                                                         \
    template void sgd_step<T>(const std::vector<ParamTensor<T>*>&, double, double);               \
    template Tensor<T> batch_images<T>(const std::vector<const AnnotatedSample*>&);               \
    template TrainLog train_coarse_only<T>(const Dataset&, CoarseModel<T>&, int,                  \
                                           const TrainConfig&, std::ostream*);                    \
    template TrainLog train_schedule<T>(const Dataset&, CoarseModel<T>&, FineModel<T>&,           \
                                        const TrainConfig&, std::ostream*);                       \
    template TrainLog train_greedy<T>(const Dataset&, CoarseModel<T>&, GreedyFineModel<T>&, int,  \
                                      const TrainConfig&, std::ostream*);                         \
    template Predictions predict<T>(CoarseModel<T>&, FineModel<T>*, GreedyFineModel<T>*,          \
                                    const std::vector<const AnnotatedSample*>&,                   \
                                    const PairwisePrior*, int);

HC_INSTANTIATE(float)
HC_INSTANTIATE(double)
#undef HC_INSTANTIATE

}  // namespace hc
