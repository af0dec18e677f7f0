#pragma once

#include <string>
#include <vector>

#include "hc/coarse_model.hpp"
#include "hc/tensor.hpp"

namespace hc {

// Star-shaped torso prior: for each joint, a smoothed, normalized histogram of
// (joint - torso) displacements in heat-map cells. Applying it multiplies the
// joint's heat-map by the prior shifted to the annotated torso, which
// attenuates peaks at anatomically implausible offsets (unannotated people).
struct PairwisePrior {
    int radius = 0;                         // support: [-radius, radius]^2 cells
    double floor_value = 0;                 // post-normalization minimum
    std::vector<Tensor<double>> per_joint;  // each (2r+1) x (2r+1), sums to 1
};

struct DisplacementObs {
    Pt joint_px, torso_px;  // input pixels
};

// Histogram + Gaussian smoothing (sigma in cells) + epsilon floor + normalize.
PairwisePrior fit_prior(const std::vector<std::vector<DisplacementObs>>& per_joint_obs,
                        const HeatGeometry& geom, int radius, double smooth_sigma = 1.0,
                        double eps = 1e-6);

// Multiplies each joint map by its shifted prior, then renormalizes each map
// to peak 1 (when nonzero). Cells outside the prior support use the floor.
template <typename T>
Tensor<T> apply_prior(const Tensor<T>& maps, const std::vector<Pt>& torso_px, const HeatGeometry& geom,
                      const PairwisePrior& prior);

void save_prior(const PairwisePrior& p, const std::string& path);
PairwisePrior load_prior(const std::string& path);

}  // namespace hc
