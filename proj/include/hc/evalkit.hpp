#pragma once

#include <string>
#include <vector>

#include "hc/tensor.hpp"

namespace hc {

// Detection rule: euclidean(pred, truth) <= t * normalizer (inclusive).
// Samples with a missing truth are excluded from the denominator and counted.
struct PckCurve {
    std::vector<double> thresholds;
    std::vector<std::vector<double>> rate;  // [joint][threshold]
    std::vector<double> mean;               // [threshold], over joints
    std::vector<int> included;              // per joint
    std::vector<int> excluded;              // per joint (invalid truth)
};

PckCurve pck(const std::vector<std::vector<Pt>>& preds, const std::vector<std::vector<Pt>>& truths,
             const std::vector<std::vector<std::uint8_t>>& valid, const std::vector<double>& normalizer,
             const std::vector<double>& thresholds);

// PCK with a head-segment normalizer, reported at a single threshold.
std::vector<double> pckh(const std::vector<std::vector<Pt>>& preds,
                         const std::vector<std::vector<Pt>>& truths,
                         const std::vector<std::vector<std::uint8_t>>& valid,
                         const std::vector<double>& head_length, double t = 0.5);

// Signed per-axis error histogram. |error| > outlier_cut is excluded from the
// bins and from sigma, and counted separately. sigma is the population
// (N-denominator) standard deviation of the included errors.
struct ErrorHistogram {
    double bin_width = 1.0;
    double outlier_cut = 20.0;
    int min_bin = 0;                       // bin k covers [(k-0.5)*w, (k+0.5)*w)
    std::vector<std::vector<int>> counts;  // [joint][bin]
    std::vector<double> sigma;             // per joint
    std::vector<int> included, outliers;
};

ErrorHistogram error_histogram(const std::vector<std::vector<Pt>>& preds,
                               const std::vector<std::vector<Pt>>& truths,
                               const std::vector<std::vector<std::uint8_t>>& valid, int axis,
                               double bin_width = 1.0, double outlier_cut = 20.0);

// Annotator-noise sigma: per image the population sigma across annotators,
// averaged over images, divided by the down-sample ratio. xs[image][annotator]
// holds one joint's coordinate; needs >= 2 annotators per image.
double annotation_sigma(const std::vector<std::vector<double>>& xs, double downsample_ratio);

// CSV emitters; fixed "%.10g" formatting keeps reruns byte-identical.
void write_pck_csv(const PckCurve& c, const std::vector<std::string>& joint_names,
                   const std::string& path);
void write_histogram_csv(const ErrorHistogram& h, const std::vector<std::string>& joint_names,
                         const std::string& path);
void write_sigma_csv(const ErrorHistogram& h, const std::vector<std::string>& joint_names,
                     const std::string& path);

std::string format_g(double v);

}  // namespace hc
