#include "hc/harness.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>

#include "hc/checkpoint.hpp"
#include "hc/evalkit.hpp"
#include "hc/svgplot.hpp"

namespace hc {

namespace fs = std::filesystem;

double torso_normalizer(const AnnotatedSample& s) {
    return dist(s.joints[kLShoulder], s.torso) + dist(s.torso, s.joints[kRShoulder]);
}

double head_length(const AnnotatedSample& s) {
    const Pt mid{(s.joints[kLShoulder].x + s.joints[kRShoulder].x) * 0.5,
                 (s.joints[kLShoulder].y + s.joints[kRShoulder].y) * 0.5};
    return std::max(1.0, dist(s.joints[kHead], mid));
}

std::vector<double> pck_thresholds() {
    std::vector<double> t;
    for (int i = 1; i <= 10; ++i) t.push_back(0.05 * i);
    return t;
}

namespace {

void require_seed(const RunConfig& cfg, const char* cmd) {
    if (!cfg.seed_set)
        throw std::runtime_error(std::string(cmd) + ": --seed is required (reproducibility contract)");
}

std::vector<std::string> joint_names_vec(int n) {
    std::vector<std::string> names;
    for (int j = 0; j < n; ++j) names.push_back(joint_name(j));
    return names;
}

struct EvalInputs {
    std::vector<std::vector<Pt>> truths;
    std::vector<std::vector<std::uint8_t>> valid;
    std::vector<double> norm, head;
};

EvalInputs eval_inputs(const std::vector<const AnnotatedSample*>& samples) {
    EvalInputs e;
    for (const auto* s : samples) {
        e.truths.push_back(s->joints);
        e.valid.push_back(s->valid);
        e.norm.push_back(torso_normalizer(*s));
        e.head.push_back(head_length(*s));
    }
    return e;
}

PairwisePrior fit_prior_from(const Dataset& ds, const CoarseConfig& cc) {
    std::vector<std::vector<DisplacementObs>> obs(cc.joints);
    for (const auto& s : ds.samples)
        for (int j = 0; j < cc.joints; ++j)
            if (s.valid[j]) obs[j].push_back({s.joints[j], s.torso});
    const HeatGeometry geom{cc.pool_factor};
    return fit_prior(obs, geom, std::max(cc.heat_h(), cc.heat_w()));
}

std::vector<NamedTensorD> params_to_tensors(const std::vector<NamedTensorD>& extra,
                                            const ModelParams<float>& a, const ModelParams<float>* b) {
    std::vector<NamedTensorD> out = extra;
    auto push = [&out](const ModelParams<float>& mp) {
        for (const auto* p : mp.all()) {
            NamedTensorD t;
            t.name = p->name;
            t.side = p->fine_side ? 1 : 0;
            t.data = Tensor<double>(p->value.shape);
            for (std::size_t i = 0; i < p->value.numel(); ++i) t.data.v[i] = p->value.v[i];
            out.push_back(std::move(t));
        }
    };
    push(a);
    if (b) push(*b);
    return out;
}

std::vector<NamedTensorD> prior_tensors(const PairwisePrior& p) {
    std::vector<NamedTensorD> tensors;
    Tensor<double> meta({2});
    meta.v[0] = p.radius;
    meta.v[1] = p.floor_value;
    tensors.push_back({"prior.meta", 0, meta});
    for (std::size_t j = 0; j < p.per_joint.size(); ++j)
        tensors.push_back({"prior.joint" + std::to_string(j), 0, p.per_joint[j]});
    return tensors;
}

PairwisePrior prior_from_tensors(const std::vector<NamedTensorD>& tensors) {
    PairwisePrior p;
    for (const auto& t : tensors) {
        if (t.name == "prior.meta") {
            p.radius = static_cast<int>(t.data.v[0]);
            p.floor_value = t.data.v[1];
        } else if (t.name.rfind("prior.joint", 0) == 0) {
            p.per_joint.push_back(t.data);
        }
    }
    if (p.per_joint.empty()) throw std::runtime_error("checkpoint holds no prior tables");
    return p;
}

}  // namespace

void run_synth(const RunConfig& cfg, std::ostream& log) {
    require_seed(cfg, "synth");
    fs::create_directories(cfg.out_dir);
    const std::string path =
        cfg.dataset_path.empty() ? cfg.out_dir + "/dataset.bin" : cfg.dataset_path;
    const Dataset ds = make_dataset(cfg.seed, cfg.count, cfg.sample_spec());
    save_dataset(ds, path, cfg.image_format);
    write_manifest(cfg.out_dir, "synth", cfg, {path});
    log << "synth: wrote " << ds.samples.size() << " samples to " << path << "\n";
}

void run_train(const RunConfig& cfg, std::ostream& log) {
    require_seed(cfg, "train");
    if (cfg.dataset_path.empty()) throw std::runtime_error("train: --dataset is required");
    fs::create_directories(cfg.out_dir);
    const Dataset ds = load_dataset(cfg.dataset_path);

    RunConfig effective = cfg;
    effective.input_size = ds.spec.h;  // the dataset fixes the geometry
    const CoarseConfig cc = effective.coarse_config();
    const FineConfig fc = effective.fine_config();

    CoarseModel<float> coarse(cc);
    Rng init_rng(cfg.seed);
    coarse.init(init_rng);

    const std::string log_path = cfg.out_dir + "/log.csv";
    std::ofstream log_csv(log_path);
    TrainLog tl;
    std::vector<NamedTensorD> tensors;
    const TrainConfig tc = effective.train_config();
    if (cfg.epochs_fine + cfg.epochs_joint > 0) {
        Tape<float> probe;  // bank factors depend only on the architecture
        const Pyramid<float> pyr =
            build_pyramid(batch_images<float>({&ds.samples[0]}), cc.levels);
        const auto fw = coarse.forward(probe, pyr, Phase::infer, nullptr);
        FineModel<float> fine(cc, fc, fw.bank_factor);
        fine.init(init_rng);
        tl = train_schedule(ds, coarse, fine, tc, &log_csv);
        tensors = params_to_tensors(prior_tensors(fit_prior_from(ds, cc)), coarse.params, &fine.params);
    } else {
        tl = train_coarse_only(ds, coarse, cfg.epochs_coarse, tc, &log_csv);
        tensors = params_to_tensors(prior_tensors(fit_prior_from(ds, cc)), coarse.params, nullptr);
    }
    const std::string ckpt =
        cfg.checkpoint_path.empty() ? cfg.out_dir + "/checkpoint.bin" : cfg.checkpoint_path;
    save_tensors(tensors, ckpt, effective.serialize());
    write_manifest(cfg.out_dir, "train", cfg, {ckpt, log_path});
    log << "train: final E1 " << format_g(tl.final_e1) << ", checkpoint " << ckpt << "\n";
}

void run_eval(const RunConfig& cfg, std::ostream& log) {
    if (cfg.dataset_path.empty()) throw std::runtime_error("eval: --dataset is required");
    if (cfg.checkpoint_path.empty()) throw std::runtime_error("eval: --checkpoint is required");
    fs::create_directories(cfg.out_dir);
    const Dataset ds = load_dataset(cfg.dataset_path);

    std::string blob;
    const auto tensors = load_tensors(cfg.checkpoint_path, &blob);
    RunConfig model_cfg;  // architecture comes from the checkpoint, not the flags
    model_cfg.load_text(blob, true);
    const CoarseConfig cc = model_cfg.coarse_config();
    const FineConfig fc = model_cfg.fine_config();
    CoarseModel<float> coarse(cc);
    load_params(coarse.params, cfg.checkpoint_path);

    bool has_fine = false;
    for (const auto& t : tensors)
        if (t.name.rfind("fine.", 0) == 0) has_fine = true;

    const auto samples = sample_ptrs(ds);
    PairwisePrior prior;
    if (cfg.use_prior) prior = prior_from_tensors(tensors);

    Predictions preds;
    std::unique_ptr<FineModel<float>> fine;
    if (has_fine) {
        Tape<float> probe;
        const Pyramid<float> pyr = build_pyramid(batch_images<float>({samples[0]}), cc.levels);
        const auto fw = coarse.forward(probe, pyr, Phase::infer, nullptr);
        fine = std::make_unique<FineModel<float>>(cc, fc, fw.bank_factor);
        load_params(fine->params, cfg.checkpoint_path);
    }
    preds = predict<float>(coarse, fine.get(), nullptr, samples, cfg.use_prior ? &prior : nullptr,
                           cfg.batch);

    const EvalInputs ev = eval_inputs(samples);
    const auto names = joint_names_vec(cc.joints);
    const auto curve_final = pck(preds.final_xy, ev.truths, ev.valid, ev.norm, pck_thresholds());
    const auto curve_coarse = pck(preds.coarse_xy, ev.truths, ev.valid, ev.norm, pck_thresholds());
    const auto hist_x = error_histogram(preds.final_xy, ev.truths, ev.valid, 0);
    const auto hist_y = error_histogram(preds.final_xy, ev.truths, ev.valid, 1);
    const auto rates_h = pckh(preds.final_xy, ev.truths, ev.valid, ev.head, 0.5);

    write_pck_csv(curve_final, names, cfg.out_dir + "/pck.csv");
    write_pck_csv(curve_coarse, names, cfg.out_dir + "/pck_coarse.csv");
    write_histogram_csv(hist_x, names, cfg.out_dir + "/hist_x.csv");
    write_histogram_csv(hist_y, names, cfg.out_dir + "/hist_y.csv");
    write_sigma_csv(hist_x, names, cfg.out_dir + "/sigma_x.csv");
    {
        std::ofstream f(cfg.out_dir + "/pckh.csv");
        f << "joint,pckh_0.5\n";
        for (int j = 0; j < cc.joints; ++j) f << names[j] << "," << format_g(rates_h[j]) << "\n";
    }
    write_manifest(cfg.out_dir, "eval", cfg,
                   {cfg.out_dir + "/pck.csv", cfg.out_dir + "/pck_coarse.csv", cfg.out_dir + "/hist_x.csv",
                    cfg.out_dir + "/hist_y.csv", cfg.out_dir + "/sigma_x.csv", cfg.out_dir + "/pckh.csv"});
    log << "eval: mean PCK@" << format_g(pck_thresholds()[0]) << " = " << format_g(curve_final.mean[0])
        << " over " << samples.size() << " samples\n";
}

void run_plot(const std::string& csv_path, const std::string& svg_path, const std::string& style,
              const std::string& title) {
    PlotSpec spec;
    spec.style = style;
    spec.title = title.empty() ? fs::path(csv_path).stem().string() : title;
    spec.x_label = "x";
    spec.y_label = "value";
    write_svg_plot(csv_path, svg_path, spec);
}

}  // namespace hc
