#include "hc/prior.hpp"

#include <cmath>
#include <stdexcept>

#include "hc/checkpoint.hpp"

namespace hc {

PairwisePrior fit_prior(const std::vector<std::vector<DisplacementObs>>& per_joint_obs,
                        const HeatGeometry& geom, int radius, double smooth_sigma, double eps) {
    if (per_joint_obs.empty()) throw std::invalid_argument("prior: no joints");
    PairwisePrior prior;
    prior.radius = radius;
    const int n = 2 * radius + 1;

    const int sr = std::max(1, static_cast<int>(std::ceil(3 * smooth_sigma)));
    std::vector<double> g(static_cast<std::size_t>(2 * sr + 1));
    for (int t = -sr; t <= sr; ++t) g[t + sr] = std::exp(-0.5 * t * t / (smooth_sigma * smooth_sigma));

    for (const auto& obs : per_joint_obs) {
        if (obs.empty()) throw std::invalid_argument("prior: joint with no annotated samples");
        Tensor<double> hist({n, n});
        for (const auto& o : obs) {
            const int du = static_cast<int>(std::lround(geom.input_to_cell(o.joint_px.x) -
                                                        geom.input_to_cell(o.torso_px.x)));
            const int dv = static_cast<int>(std::lround(geom.input_to_cell(o.joint_px.y) -
                                                        geom.input_to_cell(o.torso_px.y)));
            if (std::abs(du) > radius || std::abs(dv) > radius)
                throw std::invalid_argument("prior: displacement outside support, grow radius");
            hist.v[static_cast<std::size_t>(dv + radius) * n + (du + radius)] += 1.0;
        }
        // separable Gaussian smoothing, edge-truncated
        Tensor<double> tmp({n, n}), sm({n, n});
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                double s = 0;
                for (int t = -sr; t <= sr; ++t)
                    if (x + t >= 0 && x + t < n) s += g[t + sr] * hist.v[static_cast<std::size_t>(y) * n + x + t];
                tmp.v[static_cast<std::size_t>(y) * n + x] = s;
            }
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                double s = 0;
                for (int t = -sr; t <= sr; ++t)
                    if (y + t >= 0 && y + t < n) s += g[t + sr] * tmp.v[static_cast<std::size_t>(y + t) * n + x];
                sm.v[static_cast<std::size_t>(y) * n + x] = s;
            }
        double total = 0;
        for (auto& v : sm.v) {
            v += eps;  // no cell may have zero likelihood
            total += v;
        }
        for (auto& v : sm.v) v /= total;
        prior.per_joint.push_back(std::move(sm));
    }
    double fl = prior.per_joint[0].v[0];
    for (const auto& pj : prior.per_joint)
        for (double v : pj.v) fl = std::min(fl, v);
    prior.floor_value = fl;
    return prior;
}

template <typename T>
Tensor<T> apply_prior(const Tensor<T>& maps, const std::vector<Pt>& torso_px, const HeatGeometry& geom,
                      const PairwisePrior& prior) {
    const int B = maps.dim(0), N = maps.dim(1), H = maps.dim(2), W = maps.dim(3);
    if (static_cast<int>(torso_px.size()) != B)
        throw std::invalid_argument("prior: need one torso per batch item");
    if (static_cast<int>(prior.per_joint.size()) != N)
        throw std::invalid_argument("prior: joint count mismatch");
    const int r = prior.radius, n = 2 * r + 1;
    Tensor<T> out(maps.shape);
    for (int b = 0; b < B; ++b) {
        const int tu = static_cast<int>(std::lround(geom.input_to_cell(torso_px[b].x)));
        const int tv = static_cast<int>(std::lround(geom.input_to_cell(torso_px[b].y)));
        for (int j = 0; j < N; ++j) {
            const Tensor<double>& pj = prior.per_joint[j];
            double peak = 0;
            for (int v = 0; v < H; ++v)
                for (int u = 0; u < W; ++u) {
                    const int du = u - tu, dv = v - tv;
                    const double w = (std::abs(du) <= r && std::abs(dv) <= r)
                                         ? pj.v[static_cast<std::size_t>(dv + r) * n + (du + r)]
                                         : prior.floor_value;
                    const double val = static_cast<double>(maps.at(b, j, v, u)) * w;
                    out.at(b, j, v, u) = static_cast<T>(val);
                    peak = std::max(peak, val);
                }
            if (peak > 0)
                for (int v = 0; v < H; ++v)
                    for (int u = 0; u < W; ++u)
                        out.at(b, j, v, u) = static_cast<T>(out.at(b, j, v, u) / peak);
        }
    }
    return out;
}

template Tensor<float> apply_prior<float>(const Tensor<float>&, const std::vector<Pt>&,
                                          const HeatGeometry&, const PairwisePrior&);
template Tensor<double> apply_prior<double>(const Tensor<double>&, const std::vector<Pt>&,
                                            const HeatGeometry&, const PairwisePrior&);

void save_prior(const PairwisePrior& p, const std::string& path) {
    std::vector<NamedTensorD> tensors;
    Tensor<double> meta({2});
    meta.v[0] = p.radius;
    meta.v[1] = p.floor_value;
    tensors.push_back({"prior.meta", 0, meta});
    for (std::size_t j = 0; j < p.per_joint.size(); ++j)
        tensors.push_back({"prior.joint" + std::to_string(j), 0, p.per_joint[j]});
    save_tensors(tensors, path);
}

PairwisePrior load_prior(const std::string& path) {
    const auto tensors = load_tensors(path);
    PairwisePrior p;
    for (const auto& t : tensors) {
        if (t.name == "prior.meta") {
            p.radius = static_cast<int>(t.data.v[0]);
            p.floor_value = t.data.v[1];
        } else {
            p.per_joint.push_back(t.data);
        }
    }
    if (p.per_joint.empty()) throw std::runtime_error("prior: no joint tables in " + path);
    return p;
}

}  // namespace hc
