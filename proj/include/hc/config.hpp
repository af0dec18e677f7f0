#pragma once

#include <cstdint>
#include <string>

#include "hc/cascade.hpp"
#include "hc/coarse_model.hpp"
#include "hc/synth.hpp"
#include "hc/trainer.hpp"

namespace hc {

inline constexpr const char* kVersion = "heatcascade 0.1.0";

// Everything a run needs. Values come from compiled defaults, then an
// optional config file ("key = value" lines, '#' comments), then CLI flags;
// later sources win.
struct RunConfig {
    // data
    std::string dataset_path;
    std::string test_dataset_path;
    std::string checkpoint_path;
    std::string out_dir = "out";
    int count = 500;
    int input_size = 64;
    double distractor_prob = 0.0;
    int image_format = 0;  // 0 raw f32, 1 u8

    // model
    int pool_factor = 8;
    int levels = 3;
    int filters = 8;
    int hidden_1x1 = 16;
    int fine_filters = 8;
    int context = 0;  // 0 = auto
    double target_sigma = 1.5;
    double lcn_sigma = 2.0;
    double p_drop = 0.10;  // training default; the layer itself defaults to 0.5

    // training
    std::uint64_t seed = 0;
    bool seed_set = false;
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
    bool use_prior = false;

    CoarseConfig coarse_config() const;
    FineConfig fine_config() const;
    SampleSpec sample_spec() const;
    TrainConfig train_config() const;

    void load_file(const std::string& path);
    void load_text(const std::string& text, bool ignore_unknown = false);
    void set(const std::string& key, const std::string& value);  // throws on unknown key
    std::string serialize() const;   // canonical key=value text
    std::string config_hash() const; // FNV-1a of serialize(), hex
};

std::uint64_t fnv1a(const std::string& s);

// Every artifact-producing command drops one manifest next to its outputs;
// identical config+seed must yield an identical manifest and identical files.
void write_manifest(const std::string& out_dir, const std::string& command, const RunConfig& cfg,
                    const std::vector<std::string>& artifacts);

}  // namespace hc
