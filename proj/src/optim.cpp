#include "liquidseg/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace liquidseg::nn {

void SgdMomentum::step(std::vector<ParamRef>& params) {
    if (buf.empty()) {
        buf.reserve(params.size());
        for (auto& p : params) buf.emplace_back(p.value->n, p.value->c, p.value->h, p.value->w);
    }
    if (buf.size() != params.size())
        throw std::logic_error("SgdMomentum: parameter set changed between steps");
    for (size_t i = 0; i < params.size(); ++i) {
        auto& w = params[i].value->v;
        auto& g = params[i].grad->v;
        auto& bu = buf[i].v;
        for (size_t j = 0; j < w.size(); ++j) {
            double grad = g[j] + weight_decay * w[j];
            bu[j] = momentum * bu[j] + grad;
            w[j] -= lr * bu[j];
        }
    }
}

void Adam::step(std::vector<ParamRef>& params) {
    if (m.empty()) {
        m.reserve(params.size());
        v.reserve(params.size());
        for (auto& p : params) {
            m.emplace_back(p.value->n, p.value->c, p.value->h, p.value->w);
            v.emplace_back(p.value->n, p.value->c, p.value->h, p.value->w);
        }
    }
    if (m.size() != params.size())
        throw std::logic_error("Adam: parameter set changed between steps");
    ++t;
    double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (size_t i = 0; i < params.size(); ++i) {
        auto& w = params[i].value->v;
        auto& g = params[i].grad->v;
        auto& mi = m[i].v;
        auto& vi = v[i].v;
        for (size_t j = 0; j < w.size(); ++j) {
            mi[j] = beta1 * mi[j] + (1.0 - beta1) * g[j];
            vi[j] = beta2 * vi[j] + (1.0 - beta2) * g[j] * g[j];
            double mhat = mi[j] / bc1;
            double vhat = vi[j] / bc2;
            w[j] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

}  // namespace liquidseg::nn
