#pragma once

#include <ostream>
#include <string>

#include "hc/config.hpp"

namespace hc {

// Subcommand implementations shared by the CLI and the acceptance suite.
// Each writes its artifacts plus a manifest under cfg.out_dir and throws on
// failure; the CLI maps exceptions to exit code 2.

void run_synth(const RunConfig& cfg, std::ostream& log);
void run_train(const RunConfig& cfg, std::ostream& log);
void run_eval(const RunConfig& cfg, std::ostream& log);
bool run_gradcheck(const RunConfig& cfg, std::ostream& log);  // false = some check failed
void run_compare(const RunConfig& cfg, std::ostream& log);
void run_plot(const std::string& csv_path, const std::string& svg_path, const std::string& style,
              const std::string& title);

// Pieces of `compare`, callable on their own.
struct CompareOutcome {
    double coarse_mean_err = 0, cascade_mean_err = 0, greedy_mean_err = 0;
    double coarse_pck_small = 0, cascade_pck_small = 0, greedy_pck_small = 0;
    std::size_t shared_params = 0, greedy_params = 0;
};
CompareOutcome compare_branches(const RunConfig& cfg, std::ostream& log);
void pool_sweep(const RunConfig& cfg, std::ostream& log, double* pck_small_out /*[3]*/);

// Default evaluation conventions (documented in the README):
// torso normalizer = |l_shoulder - torso| + |torso - r_shoulder|;
// head segment = |head - shoulder midpoint|.
double torso_normalizer(const AnnotatedSample& s);
double head_length(const AnnotatedSample& s);
std::vector<double> pck_thresholds();

}  // namespace hc
