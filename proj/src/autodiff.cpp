#include "hc/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace hc {

namespace {

const char* op_name(Op op) {
    switch (op) {
        case Op::leaf: return "leaf";
        case Op::conv2d: return "conv2d";
        case Op::maxpool: return "maxpool";
        case Op::upsample: return "upsample";
        case Op::relu: return "relu";
        case Op::add: return "add";
        case Op::scale: return "scale";
        case Op::dropout: return "dropout";
        case Op::crop: return "crop";
        case Op::mse_sum: return "mse_sum";
        case Op::sum: return "sum";
    }
    return "?";
}

}  // namespace

template <typename T>
int Tape<T>::push(Node<T> n) {
    n.out.check_finite(op_name(n.op));
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

template <typename T>
int Tape<T>::input(Tensor<T> value) {
    Node<T> n;
    n.op = Op::leaf;
    n.out = std::move(value);
    return push(std::move(n));
}

template <typename T>
int Tape<T>::param(ParamTensor<T>* p) {
    for (const auto& [q, id] : param_nodes_)
        if (q == p) return id;
    Node<T> n;
    n.op = Op::leaf;
    n.param = p;
    n.out = p->value;
    const int id = push(std::move(n));
    param_nodes_.emplace_back(p, id);
    return id;
}

template <typename T>
int Tape<T>::conv2d(int x, int w, int b, int stride, int pad) {
    Node<T> n;
    n.op = Op::conv2d;
    n.a = x; n.b = w; n.c = b;
    n.stride = stride; n.pad = pad;
    kernels::conv2d_forward(nodes_[x].out, nodes_[w].out, nodes_[b].out, stride, pad, n.out);
    return push(std::move(n));
}

template <typename T>
int Tape<T>::maxpool2d(int x, int k) {
    Node<T> n;
    n.op = Op::maxpool;
    n.a = x; n.pool_k = k;
    kernels::maxpool_forward(nodes_[x].out, k, n.out, n.argmax);
    return push(std::move(n));
}

template <typename T>
int Tape<T>::upsample_nearest(int x, int factor) {
    Node<T> n;
    n.op = Op::upsample;
    n.a = x; n.factor = factor;
    kernels::upsample_forward(nodes_[x].out, factor, n.out);
    return push(std::move(n));
}

template <typename T>
int Tape<T>::relu(int x) {
    Node<T> n;
    n.op = Op::relu;
    n.a = x;
    kernels::relu_forward(nodes_[x].out, n.out);
    return push(std::move(n));
}

template <typename T>
int Tape<T>::add(int a, int b) {
    nodes_[a].out.require_same_shape(nodes_[b].out, "add");
    Node<T> n;
    n.op = Op::add;
    n.a = a; n.b = b;
    n.out = nodes_[a].out;
    n.out.add_inplace(nodes_[b].out);
    return push(std::move(n));
}

template <typename T>
int Tape<T>::scale(int x, T k) {
    Node<T> n;
    n.op = Op::scale;
    n.a = x; n.k_scale = k;
    n.out = nodes_[x].out;
    n.out.scale_inplace(k);
    return push(std::move(n));
}

template <typename T>
int Tape<T>::dropout(int x, const Tensor<T>& multiplier) {
    nodes_[x].out.require_same_shape(multiplier, "dropout");
    Node<T> n;
    n.op = Op::dropout;
    n.a = x;
    n.mult = multiplier;
    n.out = nodes_[x].out;
    for (std::size_t i = 0; i < n.out.numel(); ++i) n.out.v[i] *= multiplier.v[i];
    return push(std::move(n));
}

template <typename T>
int Tape<T>::crop(int x, const std::vector<CropRect>& per_item) {
    const Tensor<T>& src = nodes_[x].out;
    const int B = src.dim(0), C = src.dim(1), H = src.dim(2), W = src.dim(3);
    if (static_cast<int>(per_item.size()) != B)
        throw std::invalid_argument("crop: need one rect per batch item");
    const CropRect& r0 = per_item[0];
    Node<T> n;
    n.op = Op::crop;
    n.a = x;
    n.rects = per_item;
    n.out = Tensor<T>({B, C, r0.h, r0.w});
    for (int bi = 0; bi < B; ++bi) {
        const CropRect& r = per_item[bi];
        if (r.w != r0.w || r.h != r0.h) throw std::invalid_argument("crop: rect extents differ across batch");
        if (r.x0 < 0 || r.y0 < 0 || r.x0 + r.w > W || r.y0 + r.h > H)
            throw std::invalid_argument("crop: rect outside source plane");
        for (int c = 0; c < C; ++c)
            for (int y = 0; y < r.h; ++y)
                for (int xx = 0; xx < r.w; ++xx)
                    n.out.at(bi, c, y, xx) = src.at(bi, c, r.y0 + y, r.x0 + xx);
    }
    return push(std::move(n));
}

template <typename T>
int Tape<T>::mse_sum(int pred, Tensor<T> target) {
    nodes_[pred].out.require_same_shape(target, "mse_sum");
    Node<T> n;
    n.op = Op::mse_sum;
    n.a = pred;
    n.constant = std::move(target);
    double acc = 0;
    const Tensor<T>& p = nodes_[pred].out;
    for (std::size_t i = 0; i < p.numel(); ++i) {
        const double dd = static_cast<double>(p.v[i]) - static_cast<double>(n.constant.v[i]);
        acc += dd * dd;
    }
    n.out = Tensor<T>({1});
    n.out.v[0] = static_cast<T>(acc);
    return push(std::move(n));
}

template <typename T>
int Tape<T>::sum(int x) {
    Node<T> n;
    n.op = Op::sum;
    n.a = x;
    double acc = 0;
    for (const T& e : nodes_[x].out.v) acc += static_cast<double>(e);
    n.out = Tensor<T>({1});
    n.out.v[0] = static_cast<T>(acc);
    return push(std::move(n));
}

template <typename T>
Tensor<T>& Tape<T>::grad_buf(int id) {
    Node<T>& n = nodes_[id];
    if (n.grad.numel() == 0) n.grad = Tensor<T>(n.out.shape);
    return n.grad;
}

template <typename T>
void Tape<T>::backward(int root) {
    if (consumed_) throw std::logic_error("tape: backward already ran; build a fresh tape per step");
    consumed_ = true;
    if (nodes_[root].out.numel() != 1) throw std::invalid_argument("backward: root must be scalar");
    grad_buf(root).v[0] = T(1);

    for (int id = root; id >= 0; --id) {
        Node<T>& n = nodes_[id];
        if (n.grad.numel() == 0) continue;  // unreachable from root
        const Tensor<T>& g = n.grad;
        switch (n.op) {
            case Op::leaf:
                break;
            case Op::conv2d: {
                const ConvDims d = conv_dims(nodes_[n.a].out.shape, nodes_[n.b].out.shape,
                                             nodes_[n.c].out.shape, n.stride, n.pad);
                kernels::conv2d_backward_input(g, nodes_[n.b].out, d, grad_buf(n.a));
                kernels::conv2d_backward_weight(g, nodes_[n.a].out, d, grad_buf(n.b));
                kernels::conv2d_backward_bias(g, grad_buf(n.c));
                break;
            }
            case Op::maxpool:
                kernels::maxpool_backward(g, n.argmax, grad_buf(n.a));
                break;
            case Op::upsample:
                kernels::upsample_backward(g, n.factor, grad_buf(n.a));
                break;
            case Op::relu:
                kernels::relu_backward(g, nodes_[n.a].out, grad_buf(n.a));
                break;
            case Op::add:
                grad_buf(n.a).add_inplace(g);
                grad_buf(n.b).add_inplace(g);
                break;
            case Op::scale: {
                Tensor<T>& ga = grad_buf(n.a);
                for (std::size_t i = 0; i < g.numel(); ++i) ga.v[i] += n.k_scale * g.v[i];
                break;
            }
            case Op::dropout: {
                Tensor<T>& ga = grad_buf(n.a);
                for (std::size_t i = 0; i < g.numel(); ++i) ga.v[i] += n.mult.v[i] * g.v[i];
                break;
            }
            case Op::crop: {
                Tensor<T>& ga = grad_buf(n.a);
                const int B = ga.dim(0), C = ga.dim(1);
                for (int bi = 0; bi < B; ++bi) {
                    const CropRect& r = n.rects[bi];
                    for (int c = 0; c < C; ++c)
                        for (int y = 0; y < r.h; ++y)
                            for (int xx = 0; xx < r.w; ++xx)
                                ga.at(bi, c, r.y0 + y, r.x0 + xx) += g.at(bi, c, y, xx);
                }
                break;
            }
            case Op::mse_sum: {
                Tensor<T>& ga = grad_buf(n.a);
                const Tensor<T>& p = nodes_[n.a].out;
                const T gs = g.v[0];
                for (std::size_t i = 0; i < p.numel(); ++i)
                    ga.v[i] += T(2) * (p.v[i] - n.constant.v[i]) * gs;
                break;
            }
            case Op::sum: {
                Tensor<T>& ga = grad_buf(n.a);
                const T gs = g.v[0];
                for (auto& e : ga.v) e += gs;
                break;
            }
        }
        n.grad.check_finite("backward");
    }

    for (const auto& [p, id] : param_nodes_)
        if (nodes_[id].grad.numel() != 0) p->grad.add_inplace(nodes_[id].grad);
}

template class Tape<float>;
template class Tape<double>;

GradCheckReport grad_check(const std::function<int(Tape<double>&)>& build,
                           const std::vector<ParamTensor<double>*>& params, double h, double kink_tol) {
    for (auto* p : params) p->grad.zero();

    Tape<double> tape;
    const int root = build(tape);
    const double f0 = tape.value(root).v[0];
    tape.backward(root);

    auto eval = [&]() {
        Tape<double> t;
        return t.value(build(t)).v[0];
    };

    GradCheckReport rep;
    for (auto* p : params) {
        for (std::size_t i = 0; i < p->value.numel(); ++i) {
            const double orig = p->value.v[i];
            p->value.v[i] = orig + h;
            const double fp = eval();
            p->value.v[i] = orig - h;
            const double fm = eval();
            p->value.v[i] = orig;

            const double central = (fp - fm) / (2 * h);
            const double left = (f0 - fm) / h;
            const double right = (fp - f0) / h;
            if (std::abs(left - right) > kink_tol * std::max({1.0, std::abs(left), std::abs(right)})) {
                ++rep.excluded;  // one-sided slopes disagree: nondifferentiable point
                continue;
            }
            const double analytic = p->grad.v[i];
            const double rel =
                std::abs(analytic - central) / std::max({1.0, std::abs(analytic), std::abs(central)});
            ++rep.checked;
            if (rel > rep.max_rel_err) {
                rep.max_rel_err = rel;
                rep.worst = p->name + "[" + std::to_string(i) + "]: analytic " + std::to_string(analytic) +
                            " vs numeric " + std::to_string(central);
            }
        }
    }
    return rep;
}

}  // namespace hc
