#pragma once

#include <vector>

#include "liquidseg/nn.hpp"

namespace liquidseg::nn {

// torch-style SGD: grad += wd * w, buf = mu * buf + grad, w -= lr * buf
struct SgdMomentum {
    double lr = 1e-3;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    std::vector<Tensor> buf;

    void step(std::vector<ParamRef>& params);
};

struct Adam {
    double lr = 2e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double eps = 1e-8;
    long t = 0;
    std::vector<Tensor> m, v;

    void step(std::vector<ParamRef>& params);
};

}  // namespace liquidseg::nn
