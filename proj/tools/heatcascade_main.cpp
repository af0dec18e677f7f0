#include <cstring>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "hc/harness.hpp"
#include "hc/kernels.hpp"

// heatcascade: synth | train | eval | gradcheck | compare | plot
// Exit codes: 0 success, 1 usage error, 2 runtime failure.

namespace {

void add_common(CLI::App* cmd, hc::RunConfig& cfg, std::string& config_path) {
    cmd->add_option("--config", config_path, "config file (key = value lines); flags win");
    cmd->add_option_function<std::uint64_t>(
        "--seed", [&cfg](std::uint64_t s) { cfg.seed = s; cfg.seed_set = true; }, "rng seed");
    cmd->add_option("--pool", cfg.pool_factor, "pool factor: 4, 8 or 16")
        ->check(CLI::IsMember({4, 8, 16}));
    cmd->add_option("--lambda", cfg.lambda, "joint-training coupling weight");
    cmd->add_option("--epochs-coarse", cfg.epochs_coarse, "phase 1 epochs");
    cmd->add_option("--epochs-fine", cfg.epochs_fine, "phase 2 epochs");
    cmd->add_option("--epochs-joint", cfg.epochs_joint, "phase 3 epochs");
    cmd->add_option("--out", cfg.out_dir, "output directory");
    cmd->add_option("--input-size", cfg.input_size, "square input extent");
    cmd->add_option("--batch", cfg.batch, "minibatch size");
    cmd->add_option("--p-drop", cfg.p_drop, "SpatialDropout probability");
    cmd->add_option("--lr-coarse", cfg.lr_coarse, "phase 1 learning rate");
    cmd->add_option("--lr-fine", cfg.lr_fine, "phase 2 learning rate");
    cmd->add_option("--lr-joint", cfg.lr_joint, "phase 3 learning rate");
    cmd->add_option("--filters", cfg.filters, "coarse conv feature maps per stage");
    cmd->add_option("--fine-filters", cfg.fine_filters, "fine trunk feature maps");
    cmd->add_option("--context", cfg.context, "crop context in input px (0 = auto)");
    cmd->add_flag("--augment", cfg.augment, "rotation/scale/flip augmentation during training");
}

}  // namespace

int main(int argc, char** argv) {
    hc::setup_threads_from_env();
    hc::RunConfig cfg;

    // config file loads first so that explicit flags override it
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::strcmp(argv[i], "--config") == 0) {
            try {
                cfg.load_file(argv[i + 1]);
            } catch (const std::exception& e) {
                std::cerr << "error: " << e.what() << "\n";
                return 1;
            }
        }
    }

    CLI::App app{"cascaded coarse-to-fine heat-map localization engine"};
    app.require_subcommand(1);
    std::string config_path;
    std::string plot_in, plot_out, plot_style = "lines", plot_title;

    auto* synth = app.add_subcommand("synth", "generate a synthetic articulated-figure dataset");
    add_common(synth, cfg, config_path);
    synth->add_option("--count", cfg.count, "number of samples");
    synth->add_option("--dataset", cfg.dataset_path, "output dataset path");
    synth->add_option("--distractor-prob", cfg.distractor_prob, "second unannotated figure probability");
    synth->add_option("--image-format", cfg.image_format, "0 = raw f32, 1 = u8")->check(CLI::Range(0, 1));

    auto* train = app.add_subcommand("train", "run the 3-phase training schedule");
    add_common(train, cfg, config_path);
    train->add_option("--dataset", cfg.dataset_path, "training dataset");
    train->add_option("--checkpoint", cfg.checkpoint_path, "output checkpoint path");

    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint: PCK/PCKh, histograms, sigma");
    add_common(eval, cfg, config_path);
    eval->add_option("--dataset", cfg.dataset_path, "evaluation dataset");
    eval->add_option("--checkpoint", cfg.checkpoint_path, "model checkpoint");
    eval->add_flag("--use-prior", cfg.use_prior, "filter heat-maps with the torso prior");

    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient verification");
    add_common(gradcheck, cfg, config_path);

    auto* compare = app.add_subcommand("compare", "coarse-only vs cascade vs greedy, plus pool sweep");
    add_common(compare, cfg, config_path);
    compare->add_option("--dataset", cfg.dataset_path, "training dataset");
    compare->add_option("--test-dataset", cfg.test_dataset_path, "held-out dataset");

    auto* plot = app.add_subcommand("plot", "render a CSV report to SVG");
    plot->add_option("--in", plot_in, "input CSV")->required();
    plot->add_option("--svg", plot_out, "output SVG")->required();
    plot->add_option("--style", plot_style, "lines or bars")->check(CLI::IsMember({"lines", "bars"}));
    plot->add_option("--title", plot_title, "chart title");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (synth->parsed()) hc::run_synth(cfg, std::cout);
        else if (train->parsed()) hc::run_train(cfg, std::cout);
        else if (eval->parsed()) hc::run_eval(cfg, std::cout);
        else if (gradcheck->parsed()) {
            if (!hc::run_gradcheck(cfg, std::cout)) return 2;
        } else if (compare->parsed()) hc::run_compare(cfg, std::cout);
        else if (plot->parsed()) hc::run_plot(plot_in, plot_out, plot_style, plot_title);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
