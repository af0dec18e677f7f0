#include "hc/evalkit.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace hc {

PckCurve pck(const std::vector<std::vector<Pt>>& preds, const std::vector<std::vector<Pt>>& truths,
             const std::vector<std::vector<std::uint8_t>>& valid, const std::vector<double>& normalizer,
             const std::vector<double>& thresholds) {
    const std::size_t S = preds.size();
    if (truths.size() != S || valid.size() != S || normalizer.size() != S)
        throw std::invalid_argument("pck: input sizes differ");
    const std::size_t J = S ? preds[0].size() : 0;
    PckCurve c;
    c.thresholds = thresholds;
    c.rate.assign(J, std::vector<double>(thresholds.size(), 0.0));
    c.included.assign(J, 0);
    c.excluded.assign(J, 0);
    for (std::size_t s = 0; s < S; ++s) {
        if (normalizer[s] <= 0) throw std::invalid_argument("pck: normalizer must be > 0");
        for (std::size_t j = 0; j < J; ++j) {
            if (!valid[s][j]) {
                ++c.excluded[j];
                continue;
            }
            ++c.included[j];
            const double d = dist(preds[s][j], truths[s][j]);
            for (std::size_t t = 0; t < thresholds.size(); ++t)
                if (d <= thresholds[t] * normalizer[s]) c.rate[j][t] += 1.0;
        }
    }
    c.mean.assign(thresholds.size(), 0.0);
    int joints_with_data = 0;
    for (std::size_t j = 0; j < J; ++j) {
        if (c.included[j] == 0) continue;
        ++joints_with_data;
        for (std::size_t t = 0; t < thresholds.size(); ++t) {
            c.rate[j][t] /= c.included[j];
            c.mean[t] += c.rate[j][t];
        }
    }
    if (joints_with_data)
        for (auto& m : c.mean) m /= joints_with_data;
    return c;
}

std::vector<double> pckh(const std::vector<std::vector<Pt>>& preds,
                         const std::vector<std::vector<Pt>>& truths,
                         const std::vector<std::vector<std::uint8_t>>& valid,
                         const std::vector<double>& head_length, double t) {
    const PckCurve c = pck(preds, truths, valid, head_length, {t});
    std::vector<double> rates(c.rate.size());
    for (std::size_t j = 0; j < rates.size(); ++j) rates[j] = c.rate[j][0];
    return rates;
}

ErrorHistogram error_histogram(const std::vector<std::vector<Pt>>& preds,
                               const std::vector<std::vector<Pt>>& truths,
                               const std::vector<std::vector<std::uint8_t>>& valid, int axis,
                               double bin_width, double outlier_cut) {
    if (bin_width <= 0) throw std::invalid_argument("histogram: bin_width must be > 0");
    const std::size_t S = preds.size();
    const std::size_t J = S ? preds[0].size() : 0;
    ErrorHistogram h;
    h.bin_width = bin_width;
    h.outlier_cut = outlier_cut;
    const int K = static_cast<int>(std::ceil(outlier_cut / bin_width));
    h.min_bin = -K;
    h.counts.assign(J, std::vector<int>(2 * K + 1, 0));
    h.sigma.assign(J, 0.0);
    h.included.assign(J, 0);
    h.outliers.assign(J, 0);

    std::vector<std::vector<double>> errs(J);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t j = 0; j < J; ++j) {
            if (!valid[s][j]) continue;
            const double e = axis == 0 ? preds[s][j].x - truths[s][j].x : preds[s][j].y - truths[s][j].y;
            if (e > outlier_cut || e < -outlier_cut) {
                ++h.outliers[j];
                continue;
            }
            errs[j].push_back(e);
            const int k = static_cast<int>(std::lround(e / bin_width));
            h.counts[j][std::min(2 * K, std::max(0, k + K))] += 1;
        }
    for (std::size_t j = 0; j < J; ++j) {
        h.included[j] = static_cast<int>(errs[j].size());
        if (errs[j].empty()) continue;
        double mu = 0;
        for (double e : errs[j]) mu += e;
        mu /= errs[j].size();
        double var = 0;
        for (double e : errs[j]) var += (e - mu) * (e - mu);
        h.sigma[j] = std::sqrt(var / errs[j].size());
    }
    return h;
}

double annotation_sigma(const std::vector<std::vector<double>>& xs, double downsample_ratio) {
    if (xs.empty()) throw std::invalid_argument("annotation_sigma: no images");
    if (downsample_ratio <= 0) throw std::invalid_argument("annotation_sigma: ratio must be > 0");
    double acc = 0;
    for (const auto& image : xs) {
        if (image.size() < 2) throw std::invalid_argument("annotation_sigma: need >= 2 annotators per image");
        double mu = 0;
        for (double x : image) mu += x;
        mu /= image.size();
        double var = 0;
        for (double x : image) var += (x - mu) * (x - mu);
        acc += std::sqrt(var / image.size());
    }
    return acc / xs.size() / downsample_ratio;
}

std::string format_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

void write_pck_csv(const PckCurve& c, const std::vector<std::string>& joint_names,
                   const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << "threshold";
    for (const auto& n : joint_names) f << "," << n;
    f << ",mean\n";
    for (std::size_t t = 0; t < c.thresholds.size(); ++t) {
        f << format_g(c.thresholds[t]);
        for (std::size_t j = 0; j < c.rate.size(); ++j) f << "," << format_g(c.rate[j][t]);
        f << "," << format_g(c.mean[t]) << "\n";
    }
}

void write_histogram_csv(const ErrorHistogram& h, const std::vector<std::string>& joint_names,
                         const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << "bin_center";
    for (const auto& n : joint_names) f << "," << n;
    f << "\n";
    const std::size_t nbins = h.counts.empty() ? 0 : h.counts[0].size();
    for (std::size_t k = 0; k < nbins; ++k) {
        f << format_g((h.min_bin + static_cast<int>(k)) * h.bin_width);
        for (std::size_t j = 0; j < h.counts.size(); ++j) f << "," << h.counts[j][k];
        f << "\n";
    }
}

void write_sigma_csv(const ErrorHistogram& h, const std::vector<std::string>& joint_names,
                     const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << "joint,sigma,included,outliers\n";
    for (std::size_t j = 0; j < h.sigma.size(); ++j)
        f << joint_names[j] << "," << format_g(h.sigma[j]) << "," << h.included[j] << "," << h.outliers[j]
          << "\n";
}

}  // namespace hc
