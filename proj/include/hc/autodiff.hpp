#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hc/kernels.hpp"
#include "hc/params.hpp"
#include "hc/tensor.hpp"

namespace hc {

enum class Op {
    leaf,       // constant input or trainable parameter
    conv2d,     // (x, w, b)
    maxpool,
    upsample,
    relu,
    add,
    scale,
    dropout,    // multiplier fixed at record time
    crop,       // per-batch-item window gather
    mse_sum,    // sum of squared differences against a constant target
    sum,
};

// Spatial window per batch item, in cells of the cropped tensor's plane.
struct CropRect {
    int x0 = 0, y0 = 0, w = 0, h = 0;
};

template <typename T>
struct Node {
    Op op = Op::leaf;
    int a = -1, b = -1, c = -1;  // input node ids
    Tensor<T> out;
    Tensor<T> grad;              // allocated on first contribution during backward
    ParamTensor<T>* param = nullptr;

    // op-specific state
    int stride = 1, pad = 0, pool_k = 0, factor = 1;
    T k_scale = T(0);
    std::vector<std::int32_t> argmax;
    Tensor<T> mult;      // dropout multiplier, full shape
    Tensor<T> constant;  // mse_sum target
    std::vector<CropRect> rects;
};

// Append-only tape: inputs always precede consumers, so reverse insertion
// order is a reverse topological order and backward visits each node once.
// One tape serves one training step; backward() may run only once.
template <typename T>
class Tape {
  public:
    int input(Tensor<T> value);
    int param(ParamTensor<T>* p);  // dedup: same ParamTensor maps to one leaf

    int conv2d(int x, int w, int b, int stride, int pad);
    int maxpool2d(int x, int k);
    int upsample_nearest(int x, int factor);
    int relu(int x);
    int add(int a, int b);
    int scale(int x, T k);
    int dropout(int x, const Tensor<T>& multiplier);
    int crop(int x, const std::vector<CropRect>& per_item);
    int mse_sum(int pred, Tensor<T> target);
    int sum(int x);

    const Tensor<T>& value(int id) const { return nodes_[id].out; }
    const Node<T>& node(int id) const { return nodes_[id]; }
    std::size_t size() const { return nodes_.size(); }

    // Accumulates d(root)/d(param) into every bound ParamTensor::grad.
    void backward(int root);

    // Node gradient from the last backward (empty tensor if unreached).
    const Tensor<T>& grad(int id) const { return nodes_[id].grad; }

  private:
    int push(Node<T> n);
    Tensor<T>& grad_buf(int id);

    std::vector<Node<T>> nodes_;
    std::vector<std::pair<ParamTensor<T>*, int>> param_nodes_;
    bool consumed_ = false;
};

// Central finite-difference verification of the analytic gradients of
// build()'s scalar root with respect to every element of params. build() must
// be deterministic (fix dropout masks and crop windows across calls).
struct GradCheckReport {
    double max_rel_err = 0;
    std::size_t checked = 0;
    std::size_t excluded = 0;  // detected kinks (pool ties, relu at 0)
    std::string worst;         // "param[idx]: analytic vs numeric"
    bool pass(double tol) const { return max_rel_err < tol; }
};

GradCheckReport grad_check(const std::function<int(Tape<double>&)>& build,
                           const std::vector<ParamTensor<double>*>& params, double h = 1e-5,
                           double kink_tol = 0.03);

}  // namespace hc
