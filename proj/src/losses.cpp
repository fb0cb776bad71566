#include "liquidseg/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace liquidseg::nn {
namespace {

constexpr double kProbClamp = 1e-7;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void check_finite(const Tensor& t, const char* what) {
    for (double v : t.v)
        if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + ": non-finite logits");
}

}  // namespace

GanLossValue gan_loss(const Tensor& d_real_logits, const Tensor& d_fake_logits, GanMode mode) {
    check_finite(d_real_logits, "gan_loss");
    check_finite(d_fake_logits, "gan_loss");
    const double nr = static_cast<double>(d_real_logits.size());
    const double nf = static_cast<double>(d_fake_logits.size());
    GanLossValue out;
    if (mode == GanMode::logistic) {
        double log_pr = 0.0, log_1mpf = 0.0, log_pf = 0.0;
        for (double z : d_real_logits.v) {
            double p = std::clamp(sigmoid(z), kProbClamp, 1.0 - kProbClamp);
            log_pr += std::log(p);
        }
        for (double z : d_fake_logits.v) {
            double p = std::clamp(sigmoid(z), kProbClamp, 1.0 - kProbClamp);
            log_1mpf += std::log(1.0 - p);
            log_pf += std::log(p);
        }
        out.objective = log_pr / nr + log_1mpf / nf;
        out.loss_d = -out.objective;
        out.loss_g = -log_pf / nf;
    } else {
        double dsum = 0.0, gsum = 0.0;
        for (double z : d_real_logits.v) dsum += 0.5 * (z - 1.0) * (z - 1.0);
        double dfake = 0.0;
        for (double z : d_fake_logits.v) {
            dfake += 0.5 * z * z;
            gsum += 0.5 * (z - 1.0) * (z - 1.0);
        }
        out.loss_d = dsum / nr + dfake / nf;
        out.loss_g = gsum / nf;
        out.objective = -out.loss_d;
    }
    return out;
}

Tensor gan_loss_d_grad_real(const Tensor& z, GanMode mode) {
    Tensor g(z.n, z.c, z.h, z.w);
    const double n = static_cast<double>(z.size());
    for (size_t i = 0; i < z.v.size(); ++i) {
        if (mode == GanMode::logistic) {
            double p = sigmoid(z.v[i]);
            g.v[i] = (p > kProbClamp && p < 1.0 - kProbClamp) ? (p - 1.0) / n : 0.0;
        } else {
            g.v[i] = (z.v[i] - 1.0) / n;
        }
    }
    return g;
}

Tensor gan_loss_d_grad_fake(const Tensor& z, GanMode mode) {
    Tensor g(z.n, z.c, z.h, z.w);
    const double n = static_cast<double>(z.size());
    for (size_t i = 0; i < z.v.size(); ++i) {
        if (mode == GanMode::logistic) {
            double p = sigmoid(z.v[i]);
            g.v[i] = (p > kProbClamp && p < 1.0 - kProbClamp) ? p / n : 0.0;
        } else {
            g.v[i] = z.v[i] / n;
        }
    }
    return g;
}

Tensor gan_loss_g_grad_fake(const Tensor& z, GanMode mode) {
    Tensor g(z.n, z.c, z.h, z.w);
    const double n = static_cast<double>(z.size());
    for (size_t i = 0; i < z.v.size(); ++i) {
        if (mode == GanMode::logistic) {
            double p = sigmoid(z.v[i]);
            g.v[i] = (p > kProbClamp && p < 1.0 - kProbClamp) ? (p - 1.0) / n : 0.0;
        } else {
            g.v[i] = (z.v[i] - 1.0) / n;
        }
    }
    return g;
}

double bce_with_logits(const Tensor& logits, const Tensor& target) {
    if (!logits.same_shape(target))
        throw std::invalid_argument("bce_with_logits: dimension mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < logits.v.size(); ++i) {
        double p = std::clamp(sigmoid(logits.v[i]), kProbClamp, 1.0 - kProbClamp);
        double t = target.v[i];
        acc += -(t * std::log(p) + (1.0 - t) * std::log(1.0 - p));
    }
    return acc / static_cast<double>(logits.size());
}

Tensor bce_with_logits_grad(const Tensor& logits, const Tensor& target) {
    if (!logits.same_shape(target))
        throw std::invalid_argument("bce_with_logits: dimension mismatch");
    Tensor g(logits.n, logits.c, logits.h, logits.w);
    const double n = static_cast<double>(logits.size());
    for (size_t i = 0; i < logits.v.size(); ++i) {
        double p = sigmoid(logits.v[i]);
        g.v[i] = (p > kProbClamp && p < 1.0 - kProbClamp) ? (p - target.v[i]) / n : 0.0;
    }
    return g;
}

NceResult patchnce_loss(const Tensor& q, const Tensor& k, double tau) {
    if (q.n != k.n || q.c != k.c)
        throw std::invalid_argument("patchnce_loss: query/key shape mismatch");
    if (q.n < 2) throw std::invalid_argument("patchnce_loss: need at least 2 patches");
    if (tau <= 0.0) throw std::invalid_argument("patchnce_loss: tau must be positive");

    const int n = q.n, d = q.c;
    std::vector<double> logits(static_cast<size_t>(n) * n);
    for (int i = 0; i < n; ++i) {
        const double* qi = q.v.data() + static_cast<size_t>(i) * d;
        for (int j = 0; j < n; ++j) {
            const double* kj = k.v.data() + static_cast<size_t>(j) * d;
            double dot = 0.0;
            for (int t = 0; t < d; ++t) dot += qi[t] * kj[t];
            logits[static_cast<size_t>(i) * n + j] = dot / tau;
        }
    }

    NceResult out;
    out.dq = Tensor(n, d, 1, 1);
    out.dk = Tensor(n, d, 1, 1);
    std::vector<double> probs(static_cast<size_t>(n) * n);
    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
        const double* row = logits.data() + static_cast<size_t>(i) * n;
        double mx = row[0];
        for (int j = 1; j < n; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (int j = 0; j < n; ++j) sum += std::exp(row[j] - mx);
        double lse = mx + std::log(sum);
        loss += lse - row[i];
        for (int j = 0; j < n; ++j)
            probs[static_cast<size_t>(i) * n + j] = std::exp(row[j] - lse);
    }
    out.loss = loss / n;

    const double scale = 1.0 / (static_cast<double>(n) * tau);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double coeff = (probs[static_cast<size_t>(i) * n + j] - (i == j ? 1.0 : 0.0)) * scale;
            const double* kj = k.v.data() + static_cast<size_t>(j) * d;
            const double* qi = q.v.data() + static_cast<size_t>(i) * d;
            double* dqi = out.dq.v.data() + static_cast<size_t>(i) * d;
            double* dkj = out.dk.v.data() + static_cast<size_t>(j) * d;
            for (int t = 0; t < d; ++t) {
                dqi[t] += coeff * kj[t];
                dkj[t] += coeff * qi[t];
            }
        }
    }
    return out;
}

double cut_total_loss(double gan_term, double nce_x, double nce_y,
                      double lambda_x, double lambda_y) {
    if (!std::isfinite(gan_term) || !std::isfinite(nce_x) || !std::isfinite(nce_y))
        throw std::invalid_argument("cut_total_loss: non-finite term");
    return gan_term + lambda_x * nce_x + lambda_y * nce_y;
}

}  // namespace liquidseg::nn
