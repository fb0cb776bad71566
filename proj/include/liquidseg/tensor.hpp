#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace liquidseg::nn {

// Dense NCHW tensor, double precision. Vectors use h = w = 1.
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<double> v;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_),
          v(static_cast<size_t>(n_) * c_ * h_ * w_, 0.0) {}

    size_t size() const { return v.size(); }

    double& at(int i, int j, int y, int x) {
        return v[((static_cast<size_t>(i) * c + j) * h + y) * w + x];
    }
    double at(int i, int j, int y, int x) const {
        return v[((static_cast<size_t>(i) * c + j) * h + y) * w + x];
    }

    double* plane(int i, int j) { return v.data() + (static_cast<size_t>(i) * c + j) * h * w; }
    const double* plane(int i, int j) const {
        return v.data() + (static_cast<size_t>(i) * c + j) * h * w;
    }

    bool same_shape(const Tensor& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }

    void zero() { std::fill(v.begin(), v.end(), 0.0); }

    Tensor& operator+=(const Tensor& o) {
        if (!same_shape(o)) throw std::invalid_argument("Tensor +=: shape mismatch");
        for (size_t i = 0; i < v.size(); ++i) v[i] += o.v[i];
        return *this;
    }
};

}  // namespace liquidseg::nn
