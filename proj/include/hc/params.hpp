#pragma once

#include <memory>
#include <string>
#include <vector>

#include "hc/rng.hpp"
#include "hc/tensor.hpp"

namespace hc {

// One trainable tensor. Gradient and momentum buffers live with the value so
// the optimizer and the tape can both find them.
template <typename T>
struct ParamTensor {
    std::string name;
    bool fine_side = false;
    Tensor<T> value;
    Tensor<T> grad;
    Tensor<T> vel;

    ParamTensor(std::string n, std::vector<int> shape, bool fine)
        : name(std::move(n)), fine_side(fine), value(shape), grad(shape), vel(shape) {}
};

template <typename T>
class ModelParams {
  public:
    ParamTensor<T>* add(const std::string& name, std::vector<int> shape, bool fine_side) {
        owned_.push_back(std::make_unique<ParamTensor<T>>(name, std::move(shape), fine_side));
        return owned_.back().get();
    }

    ParamTensor<T>* find(const std::string& name) const {
        for (const auto& p : owned_)
            if (p->name == name) return p.get();
        return nullptr;
    }

    std::vector<ParamTensor<T>*> all() const {
        std::vector<ParamTensor<T>*> out;
        out.reserve(owned_.size());
        for (const auto& p : owned_) out.push_back(p.get());
        return out;
    }

    std::vector<ParamTensor<T>*> side(bool fine) const {
        std::vector<ParamTensor<T>*> out;
        for (const auto& p : owned_)
            if (p->fine_side == fine) out.push_back(p.get());
        return out;
    }

    std::size_t count() const {
        std::size_t n = 0;
        for (const auto& p : owned_) n += p->value.numel();
        return n;
    }

    void zero_grad() {
        for (const auto& p : owned_) p->grad.zero();
    }

  private:
    std::vector<std::unique_ptr<ParamTensor<T>>> owned_;
};

// Value-only snapshot/restore, matched by name.
template <typename T>
std::vector<Tensor<T>> snapshot_values(const ModelParams<T>& mp) {
    std::vector<Tensor<T>> out;
    for (const auto* p : mp.all()) out.push_back(p->value);
    return out;
}

template <typename T>
void restore_values(ModelParams<T>& mp, const std::vector<Tensor<T>>& snap) {
    const auto params = mp.all();
    if (params.size() != snap.size()) throw std::invalid_argument("restore_values: size mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        params[i]->value = snap[i];
        params[i]->vel.zero();
        params[i]->grad.zero();
    }
}

// Uniform fan-in/fan-out init for conv kernels; biases start at zero.
template <typename T>
void init_conv(ParamTensor<T>* w, Rng& rng) {
    const auto& s = w->value.shape;
    const double fan_in = double(s[1]) * s[2] * s[3];
    const double fan_out = double(s[0]) * s[2] * s[3];
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    for (auto& x : w->value.v) x = static_cast<T>(rng.uniform(-a, a));
}

}  // namespace hc
