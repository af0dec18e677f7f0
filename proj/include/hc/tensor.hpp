#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace hc {

// Dense row-major N-d array. Shapes are small (rank <= 4 in practice):
// {B,C,H,W} for image-like data, {C} for biases, {1} for scalars.
template <typename T>
struct Tensor {
    std::vector<int> shape;
    std::vector<T> v;

    Tensor() = default;
    explicit Tensor(std::vector<int> s, T fill = T(0))
        : shape(std::move(s)), v(numel_of(shape), fill) {}

    static std::size_t numel_of(const std::vector<int>& s) {
        std::size_t n = 1;
        for (int d : s) {
            if (d <= 0) throw std::invalid_argument("tensor: nonpositive extent " + std::to_string(d));
            n *= static_cast<std::size_t>(d);
        }
        return n;
    }

    std::size_t numel() const { return v.size(); }
    int rank() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape.at(static_cast<std::size_t>(i)); }
    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    T* data() { return v.data(); }
    const T* data() const { return v.data(); }

    T& operator[](std::size_t i) { return v[i]; }
    const T& operator[](std::size_t i) const { return v[i]; }

    // 4-d accessors ({B,C,H,W})
    std::size_t idx4(int b, int c, int y, int x) const {
        return ((static_cast<std::size_t>(b) * shape[1] + c) * shape[2] + y) * shape[3] + x;
    }
    T& at(int b, int c, int y, int x) { return v[idx4(b, c, y, x)]; }
    const T& at(int b, int c, int y, int x) const { return v[idx4(b, c, y, x)]; }

    void fill(T x) { std::fill(v.begin(), v.end(), x); }
    void zero() { fill(T(0)); }

    Tensor zeros_like() const { return Tensor(shape); }

    void add_inplace(const Tensor& o) {
        require_same_shape(o, "add");
        for (std::size_t i = 0; i < v.size(); ++i) v[i] += o.v[i];
    }
    void scale_inplace(T k) {
        for (auto& x : v) x *= k;
    }

    T max_abs() const {
        T m = T(0);
        for (T x : v) m = std::max(m, std::abs(x));
        return m;
    }

    void require_same_shape(const Tensor& o, const char* what) const {
        if (!same_shape(o))
            throw std::invalid_argument(std::string(what) + ": shape mismatch " + shape_str() +
                                        " vs " + o.shape_str());
    }

    std::string shape_str() const {
        std::string s = "[";
        for (std::size_t i = 0; i < shape.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(shape[i]);
        }
        return s + "]";
    }

    // NaN/Inf anywhere is a hard failure for this engine.
    void check_finite(const char* context) const {
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!std::isfinite(static_cast<double>(v[i])))
                throw std::runtime_error(std::string("non-finite value in ") + context + " at flat index " +
                                         std::to_string(i));
        }
    }
};

template <typename T>
double dot(const Tensor<T>& a, const Tensor<T>& b) {
    a.require_same_shape(b, "dot");
    double s = 0;
    for (std::size_t i = 0; i < a.numel(); ++i) s += static_cast<double>(a.v[i]) * static_cast<double>(b.v[i]);
    return s;
}

struct Pt {
    double x = 0, y = 0;
};

inline double dist(const Pt& a, const Pt& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

}  // namespace hc
