#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "hc/evalkit.hpp"
#include "hc/harness.hpp"

// gradcheck / compare subcommands.
namespace hc {

namespace fs = std::filesystem;

namespace {

void fill_normal(Tensor<double>& t, Rng& rng, double scale) {
    for (auto& v : t.v) v = rng.normal() * scale;
}

void fill_param(ParamTensor<double>* p, Rng& rng, double scale) { fill_normal(p->value, rng, scale); }

struct CheckCase {
    std::string name;
    GradCheckReport rep;
    double tol;
};

double mean_err_on(const std::vector<std::vector<Pt>>& preds,
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

}  // namespace

bool run_gradcheck(const RunConfig& cfg, std::ostream& log) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(cfg.seed_set ? cfg.seed : 7);
    std::vector<CheckCase> cases;

    {  // conv2d, gradients w.r.t. input, kernel and bias
        ModelParams<double> mp;
        auto* x = mp.add("x", {1, 2, 6, 6}, false);
        auto* w = mp.add("w", {3, 2, 3, 3}, false);
        auto* b = mp.add("b", {3}, false);
        for (auto* p : mp.all()) fill_param(p, rng, 0.5);
        Tensor<double> target({1, 3, 6, 6});
        fill_normal(target, rng, 0.5);
        auto build = [&](Tape<double>& t) {
            return t.mse_sum(t.conv2d(t.param(x), t.param(w), t.param(b), 1, 1), target);
        };
        cases.push_back({"conv2d", grad_check(build, mp.all()), 1e-6});
    }
    {  // conv2d with stride 2, no pad
        ModelParams<double> mp;
        auto* x = mp.add("x", {2, 1, 8, 8}, false);
        auto* w = mp.add("w", {2, 1, 3, 3}, false);
        auto* b = mp.add("b", {2}, false);
        for (auto* p : mp.all()) fill_param(p, rng, 0.5);
        Tensor<double> target({2, 2, 3, 3});
        fill_normal(target, rng, 0.5);
        auto build = [&](Tape<double>& t) {
            return t.mse_sum(t.conv2d(t.param(x), t.param(w), t.param(b), 2, 0), target);
        };
        cases.push_back({"conv2d_stride2", grad_check(build, mp.all()), 1e-6});
    }
    {  // maxpool
        ModelParams<double> mp;
        auto* x = mp.add("x", {1, 2, 4, 4}, false);
        fill_param(x, rng, 1.0);
        Tensor<double> target({1, 2, 2, 2});
        fill_normal(target, rng, 1.0);
        auto build = [&](Tape<double>& t) { return t.mse_sum(t.maxpool2d(t.param(x), 2), target); };
        cases.push_back({"maxpool", grad_check(build, mp.all()), 1e-6});
    }
    {  // upsample
        ModelParams<double> mp;
        auto* x = mp.add("x", {1, 2, 3, 3}, false);
        fill_param(x, rng, 1.0);
        Tensor<double> target({1, 2, 6, 6});
        fill_normal(target, rng, 1.0);
        auto build = [&](Tape<double>& t) {
            return t.mse_sum(t.upsample_nearest(t.param(x), 2), target);
        };
        cases.push_back({"upsample", grad_check(build, mp.all()), 1e-6});
    }
    {  // relu, inputs kept away from the kink
        ModelParams<double> mp;
        auto* x = mp.add("x", {1, 1, 4, 4}, false);
        for (auto& v : x->value.v) v = (rng.bernoulli(0.5) ? 1 : -1) * (0.1 + std::abs(rng.normal()));
        Tensor<double> target({1, 1, 4, 4});
        fill_normal(target, rng, 1.0);
        auto build = [&](Tape<double>& t) { return t.mse_sum(t.relu(t.param(x)), target); };
        cases.push_back({"relu", grad_check(build, mp.all()), 1e-6});
    }
    {  // dropout with a fixed spatial mask
        ModelParams<double> mp;
        auto* x = mp.add("x", {2, 4, 3, 3}, false);
        fill_param(x, rng, 1.0);
        const auto mask = make_dropout_mask<double>(DropoutMode::spatial, x->value.shape, 0.5,
                                                    Phase::train, rng);
        Tensor<double> target(x->value.shape);
        fill_normal(target, rng, 1.0);
        auto build = [&](Tape<double>& t) { return t.mse_sum(t.dropout(t.param(x), mask.mult), target); };
        cases.push_back({"spatial_dropout", grad_check(build, mp.all()), 1e-6});
    }
    {  // two overlapping crops, scatter-add accumulation on backward
        ModelParams<double> mp;
        auto* x = mp.add("x", {1, 2, 6, 6}, false);
        fill_param(x, rng, 1.0);
        const std::vector<CropRect> ra{{0, 0, 4, 4}}, rb{{2, 2, 4, 4}};
        Tensor<double> ta({1, 2, 4, 4}), tb({1, 2, 4, 4});
        fill_normal(ta, rng, 1.0);
        fill_normal(tb, rng, 1.0);
        auto build = [&](Tape<double>& t) {
            const int px = t.param(x);
            return t.add(t.mse_sum(t.crop(px, ra), ta), t.mse_sum(t.crop(px, rb), tb));
        };
        cases.push_back({"crop_overlap", grad_check(build, mp.all()), 1e-6});
    }

    // full coarse model at 16x16
    CoarseConfig cc;
    cc.input_h = cc.input_w = 16;
    cc.levels = 3;
    cc.pool_factor = 4;
    cc.filters = 2;
    cc.hidden_1x1 = 2;
    cc.joints = 2;
    cc.p_drop = 0.25;
    CoarseModel<double> coarse(cc);
    coarse.init(rng);
    Tensor<double> image({1, 3, 16, 16});
    for (auto& v : image.v) v = rng.uniform();
    const Pyramid<double> pyr = build_pyramid(image, cc.levels);
    std::vector<JointSet> joints(1);
    joints[0].xy = {{4.5, 6.0}, {11.0, 9.5}};
    joints[0].valid = {1, 1};
    const Tensor<double> targets = render_targets<double>(joints, cc);
    {
        auto build = [&](Tape<double>& t) {
            const auto fw = coarse.forward(t, pyr, Phase::infer, nullptr);
            return loss_e1(t, fw.heat, targets);
        };
        cases.push_back({"coarse_model_e1", grad_check(build, coarse.params.all()), 1e-5});
    }

    // full cascade: E3 through the crop module into the coarse weights
    {
        FineConfig fc;
        fc.context = 8;
        fc.filters = 2;
        fc.lambda = 0.1;
        Tape<double> probe;
        const auto fw0 = coarse.forward(probe, pyr, Phase::infer, nullptr);
        const auto coarse_xy = argmax_extract(probe.value(fw0.heat), fw0.geom);
        const auto windows = make_crop_windows(coarse_xy, fw0.bank_factor, cc, fc);
        FineModel<double> fine(cc, fc, fw0.bank_factor);
        fine.init(rng);
        const auto fine_targets = render_fine_targets<double>(joints, windows, fc, 8);
        std::vector<ParamTensor<double>*> all = coarse.params.all();
        for (auto* p : fine.params.all()) all.push_back(p);
        auto build = [&](Tape<double>& t) {
            const auto fw = coarse.forward(t, pyr, Phase::infer, nullptr);
            const int e1 = loss_e1(t, fw.heat, targets);
            const auto fine_nodes = fine.forward(t, fw.banks, windows);
            auto tgt = fine_targets;
            const int e2 = loss_e2(t, fine_nodes, std::move(tgt));
            return loss_e3(t, e1, e2, fc.lambda);
        };
        cases.push_back({"cascade_e3", grad_check(build, all), 1e-5});
    }

    bool all_pass = true;
    double worst = 0;
    for (const auto& c : cases) {
        const bool ok = c.rep.pass(c.tol);
        all_pass = all_pass && ok;
        worst = std::max(worst, c.rep.max_rel_err);
        log << "gradcheck " << c.name << ": max_rel_err=" << format_g(c.rep.max_rel_err)
            << " checked=" << c.rep.checked << " excluded=" << c.rep.excluded
            << (ok ? "  PASS" : "  FAIL") << "\n";
        if (!ok) log << "    worst: " << c.rep.worst << "\n";
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log << "gradcheck total: worst max_rel_err=" << format_g(worst) << " in " << format_g(secs)
        << " s: " << (all_pass ? "PASS" : "FAIL") << "\n";
    return all_pass;
}

CompareOutcome compare_branches(const RunConfig& cfg, std::ostream& log) {
    if (cfg.dataset_path.empty() || cfg.test_dataset_path.empty())
        throw std::runtime_error("compare: --dataset and --test-dataset are required");
    fs::create_directories(cfg.out_dir);
    const Dataset train = load_dataset(cfg.dataset_path);
    const Dataset test = load_dataset(cfg.test_dataset_path);

    RunConfig eff = cfg;
    eff.input_size = train.spec.h;
    const CoarseConfig cc = eff.coarse_config();
    const FineConfig fc = eff.fine_config();
    const TrainConfig tc = eff.train_config();

    CoarseModel<float> coarse(cc);
    Rng init_rng(cfg.seed);
    coarse.init(init_rng);
    std::ofstream log_csv(cfg.out_dir + "/compare_log.csv");
    log << "compare: phase 1 (coarse pretraining, " << tc.epochs_coarse << " epochs)\n";
    train_coarse_only(train, coarse, tc.epochs_coarse, tc, &log_csv);
    const auto coarse_snapshot = snapshot_values(coarse.params);

    Tape<float> probe;
    const Pyramid<float> pyr = build_pyramid(batch_images<float>({&train.samples[0]}), cc.levels);
    const auto fw0 = coarse.forward(probe, pyr, Phase::infer, nullptr);
    FineModel<float> fine(cc, fc, fw0.bank_factor);
    fine.init(init_rng);
    log << "compare: cascade phases 2+3\n";
    train_fine_and_joint(train, coarse, fine, tc, &log_csv);

    CoarseModel<float> coarse0(cc);  // the independently trained branch
    restore_values(coarse0.params, coarse_snapshot);
    GreedyFineModel<float> greedy(cc, fc, fine.params.count());
    greedy.init(init_rng);
    log << "compare: greedy baseline (" << tc.epochs_fine + tc.epochs_joint << " epochs, stages "
        << greedy.c1 << "/" << greedy.c2 << ")\n";
    train_greedy(train, coarse0, greedy, tc.epochs_fine + tc.epochs_joint, tc, &log_csv);

    const auto samples = sample_ptrs(test);
    std::vector<std::vector<Pt>> truths;
    std::vector<std::vector<std::uint8_t>> valid;
    std::vector<double> norm;
    for (const auto* s : samples) {
        truths.push_back(s->joints);
        valid.push_back(s->valid);
        norm.push_back(torso_normalizer(*s));
    }
    const auto p_coarse = predict<float>(coarse0, nullptr, nullptr, samples, nullptr, cfg.batch);
    const auto p_cascade = predict<float>(coarse, &fine, nullptr, samples, nullptr, cfg.batch);
    const auto p_greedy = predict<float>(coarse0, nullptr, &greedy, samples, nullptr, cfg.batch);

    const auto th = pck_thresholds();
    const auto c_coarse = pck(p_coarse.final_xy, truths, valid, norm, th);
    const auto c_cascade = pck(p_cascade.final_xy, truths, valid, norm, th);
    const auto c_greedy = pck(p_greedy.final_xy, truths, valid, norm, th);

    {
        std::ofstream f(cfg.out_dir + "/compare.csv");
        f << "threshold,coarse_only,cascade,greedy\n";
        for (std::size_t t = 0; t < th.size(); ++t)
            f << format_g(th[t]) << "," << format_g(c_coarse.mean[t]) << ","
              << format_g(c_cascade.mean[t]) << "," << format_g(c_greedy.mean[t]) << "\n";
    }

    CompareOutcome out;
    out.coarse_mean_err = mean_err_on(p_coarse.final_xy, samples);
    out.cascade_mean_err = mean_err_on(p_cascade.final_xy, samples);
    out.greedy_mean_err = mean_err_on(p_greedy.final_xy, samples);
    out.coarse_pck_small = c_coarse.mean[0];
    out.cascade_pck_small = c_cascade.mean[0];
    out.greedy_pck_small = c_greedy.mean[0];
    out.shared_params = coarse.params.count() + fine.params.count();
    out.greedy_params = coarse0.params.count() + greedy.params.count();
    {
        std::ofstream f(cfg.out_dir + "/params_report.txt");
        const double rel = std::abs(double(out.shared_params) - double(out.greedy_params)) /
                           double(out.shared_params);
        f << "shared_cascade_params " << out.shared_params << "\n";
        f << "greedy_cascade_params " << out.greedy_params << "\n";
        f << "relative_difference " << format_g(rel) << "\n";
        f << "fine_side_shared " << fine.params.count() << "\n";
        f << "fine_side_greedy " << greedy.params.count() << "\n";
    }
    log << "compare: mean err coarse " << format_g(out.coarse_mean_err) << " px, cascade "
        << format_g(out.cascade_mean_err) << " px, greedy " << format_g(out.greedy_mean_err)
        << " px\n";
    log << "compare: PCK@" << format_g(th[0]) << " coarse " << format_g(out.coarse_pck_small)
        << ", cascade " << format_g(out.cascade_pck_small) << ", greedy "
        << format_g(out.greedy_pck_small) << "\n";
    return out;
}

void pool_sweep(const RunConfig& cfg, std::ostream& log, double* pck_small_out) {
    if (cfg.dataset_path.empty() || cfg.test_dataset_path.empty())
        throw std::runtime_error("compare: --dataset and --test-dataset are required");
    fs::create_directories(cfg.out_dir);
    const Dataset train = load_dataset(cfg.dataset_path);
    const Dataset test = load_dataset(cfg.test_dataset_path);
    const auto samples = sample_ptrs(test);
    std::vector<std::vector<Pt>> truths;
    std::vector<std::vector<std::uint8_t>> valid;
    std::vector<double> norm;
    for (const auto* s : samples) {
        truths.push_back(s->joints);
        valid.push_back(s->valid);
        norm.push_back(torso_normalizer(*s));
    }
    const auto th = pck_thresholds();
    const int pools[3] = {4, 8, 16};
    std::vector<std::vector<double>> curves;
    for (int i = 0; i < 3; ++i) {
        RunConfig pc = cfg;
        pc.input_size = train.spec.h;
        pc.pool_factor = pools[i];
        const CoarseConfig cc = pc.coarse_config();
        CoarseModel<float> coarse(cc);
        Rng init_rng(cfg.seed);
        coarse.init(init_rng);
        log << "sweep: pool " << pools[i] << "x, " << cfg.epochs_coarse << " epochs\n";
        train_coarse_only(train, coarse, cfg.epochs_coarse, pc.train_config(), nullptr);
        const auto p = predict<float>(coarse, nullptr, nullptr, samples, nullptr, cfg.batch);
        const auto c = pck(p.final_xy, truths, valid, norm, th);
        curves.push_back(c.mean);
        if (pck_small_out) pck_small_out[i] = c.mean[0];
        log << "sweep: pool " << pools[i] << "x PCK@" << format_g(th[0]) << " = "
            << format_g(c.mean[0]) << "\n";
    }
    std::ofstream f(cfg.out_dir + "/pooling.csv");
    f << "threshold,pool4,pool8,pool16\n";
    for (std::size_t t = 0; t < th.size(); ++t)
        f << format_g(th[t]) << "," << format_g(curves[0][t]) << "," << format_g(curves[1][t]) << ","
          << format_g(curves[2][t]) << "\n";
}

void run_compare(const RunConfig& cfg, std::ostream& log) {
    if (!cfg.seed_set)
        throw std::runtime_error("compare: --seed is required (reproducibility contract)");
    compare_branches(cfg, log);
    pool_sweep(cfg, log, nullptr);
    write_manifest(cfg.out_dir, "compare", cfg,
                   {cfg.out_dir + "/compare.csv", cfg.out_dir + "/pooling.csv",
                    cfg.out_dir + "/params_report.txt"});
}

}  // namespace hc
