#include "hc/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace hc {

CoarseConfig RunConfig::coarse_config() const {
    CoarseConfig c;
    c.input_h = c.input_w = input_size;
    c.levels = levels;
    c.pool_factor = pool_factor;
    c.filters = filters;
    c.hidden_1x1 = hidden_1x1;
    c.joints = kJointCount;
    c.target_sigma = target_sigma;
    c.lcn_sigma = lcn_sigma;
    c.p_drop = p_drop;
    return c;
}

FineConfig RunConfig::fine_config() const {
    FineConfig f;
    f.context = context;
    f.filters = fine_filters;
    f.lambda = lambda;
    f.target_sigma = target_sigma;
    return f;
}

SampleSpec RunConfig::sample_spec() const {
    SampleSpec s;
    s.h = s.w = input_size;
    s.joints = kJointCount;
    s.distractor_prob = distractor_prob;
    return s;
}

TrainConfig RunConfig::train_config() const {
    TrainConfig t;
    t.epochs_coarse = epochs_coarse;
    t.epochs_fine = epochs_fine;
    t.epochs_joint = epochs_joint;
    t.lr_coarse = lr_coarse;
    t.lr_fine = lr_fine;
    t.lr_joint = lr_joint;
    t.momentum = momentum;
    t.batch = batch;
    t.lambda = lambda;
    t.augment = augment;
    t.seed = seed;
    return t;
}

namespace {

bool to_bool(const std::string& v) {
    if (v == "1" || v == "true" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "no") return false;
    throw std::invalid_argument("config: not a boolean: " + v);
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
    if (key == "dataset") dataset_path = value;
    else if (key == "test_dataset") test_dataset_path = value;
    else if (key == "checkpoint") checkpoint_path = value;
    else if (key == "out_dir") out_dir = value;
    else if (key == "count") count = std::stoi(value);
    else if (key == "input_size") input_size = std::stoi(value);
    else if (key == "distractor_prob") distractor_prob = std::stod(value);
    else if (key == "image_format") image_format = std::stoi(value);
    else if (key == "pool_factor") pool_factor = std::stoi(value);
    else if (key == "levels") levels = std::stoi(value);
    else if (key == "filters") filters = std::stoi(value);
    else if (key == "hidden_1x1") hidden_1x1 = std::stoi(value);
    else if (key == "fine_filters") fine_filters = std::stoi(value);
    else if (key == "context") context = std::stoi(value);
    else if (key == "target_sigma") target_sigma = std::stod(value);
    else if (key == "lcn_sigma") lcn_sigma = std::stod(value);
    else if (key == "p_drop") p_drop = std::stod(value);
    else if (key == "seed") { seed = std::stoull(value); seed_set = true; }
    else if (key == "epochs_coarse") epochs_coarse = std::stoi(value);
    else if (key == "epochs_fine") epochs_fine = std::stoi(value);
    else if (key == "epochs_joint") epochs_joint = std::stoi(value);
    else if (key == "lr_coarse") lr_coarse = std::stod(value);
    else if (key == "lr_fine") lr_fine = std::stod(value);
    else if (key == "lr_joint") lr_joint = std::stod(value);
    else if (key == "momentum") momentum = std::stod(value);
    else if (key == "batch") batch = std::stoi(value);
    else if (key == "lambda") lambda = std::stod(value);
    else if (key == "augment") augment = to_bool(value);
    else if (key == "use_prior") use_prior = to_bool(value);
    else throw std::invalid_argument("config: unknown key '" + key + "'");
}

void RunConfig::load_text(const std::string& text, bool ignore_unknown) {
    std::istringstream f(text);
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config: missing '=' at line " + std::to_string(lineno));
        try {
            set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const std::invalid_argument&) {
            if (!ignore_unknown) throw;
        }
    }
}

void RunConfig::load_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("config: cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    load_text(ss.str());
}

std::string RunConfig::serialize() const {
    std::ostringstream o;
    o << "dataset = " << dataset_path << "\n";
    o << "test_dataset = " << test_dataset_path << "\n";
    o << "checkpoint = " << checkpoint_path << "\n";
    o << "out_dir = " << out_dir << "\n";
    o << "count = " << count << "\n";
    o << "input_size = " << input_size << "\n";
    o << "distractor_prob = " << distractor_prob << "\n";
    o << "image_format = " << image_format << "\n";
    o << "pool_factor = " << pool_factor << "\n";
    o << "levels = " << levels << "\n";
    o << "filters = " << filters << "\n";
    o << "hidden_1x1 = " << hidden_1x1 << "\n";
    o << "fine_filters = " << fine_filters << "\n";
    o << "context = " << context << "\n";
    o << "target_sigma = " << target_sigma << "\n";
    o << "lcn_sigma = " << lcn_sigma << "\n";
    o << "p_drop = " << p_drop << "\n";
    o << "seed = " << seed << "\n";
    o << "epochs_coarse = " << epochs_coarse << "\n";
    o << "epochs_fine = " << epochs_fine << "\n";
    o << "epochs_joint = " << epochs_joint << "\n";
    o << "lr_coarse = " << lr_coarse << "\n";
    o << "lr_fine = " << lr_fine << "\n";
    o << "lr_joint = " << lr_joint << "\n";
    o << "momentum = " << momentum << "\n";
    o << "batch = " << batch << "\n";
    o << "lambda = " << lambda << "\n";
    o << "augment = " << (augment ? 1 : 0) << "\n";
    o << "use_prior = " << (use_prior ? 1 : 0) << "\n";
    return o.str();
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string RunConfig::config_hash() const {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(serialize())));
    return buf;
}

void write_manifest(const std::string& out_dir, const std::string& command, const RunConfig& cfg,
                    const std::vector<std::string>& artifacts) {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["config_hash"] = cfg.config_hash();
    j["seed"] = cfg.seed;
    j["version"] = kVersion;
    j["artifacts"] = artifacts;
    std::ofstream f(out_dir + "/manifest.json");
    if (!f) throw std::runtime_error("cannot write manifest in " + out_dir);
    f << j.dump(2) << "\n";
}

}  // namespace hc
