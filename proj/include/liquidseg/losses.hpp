#pragma once

#include "liquidseg/tensor.hpp"

namespace liquidseg::nn {

enum class GanMode { logistic, lsgan };

// Adversarial objective over patch-logit maps. `objective` is the value the
// adversarial game maximizes (log D(y) + log(1 - D(G(x))) in logistic mode);
// loss_d is its negation plus clamping, loss_g the non-saturating generator
// loss -E[log D(G(x))] (least-squares forms under GanMode::lsgan).
struct GanLossValue {
    double loss_d = 0.0;
    double loss_g = 0.0;
    double objective = 0.0;
};

GanLossValue gan_loss(const Tensor& d_real_logits, const Tensor& d_fake_logits,
                      GanMode mode = GanMode::logistic);

Tensor gan_loss_d_grad_real(const Tensor& d_real_logits, GanMode mode);
Tensor gan_loss_d_grad_fake(const Tensor& d_fake_logits, GanMode mode);
Tensor gan_loss_g_grad_fake(const Tensor& d_fake_logits, GanMode mode);

// mean over elements of -[t log p + (1-t) log(1-p)], p = sigmoid(z) clamped
// to [1e-7, 1-1e-7]; target values must be 0 or 1.
double bce_with_logits(const Tensor& logits, const Tensor& target);
Tensor bce_with_logits_grad(const Tensor& logits, const Tensor& target);

// One layer's contrastive term: queries q and keys k are row-unit-norm
// (N, D) matrices sharing patch locations; logits are cosine similarities
// over tau, the positive is the same row, loss is the mean cross-entropy.
struct NceResult {
    double loss = 0.0;
    Tensor dq, dk;
};
NceResult patchnce_loss(const Tensor& q, const Tensor& k, double tau);

double cut_total_loss(double gan_term, double nce_x, double nce_y,
                      double lambda_x, double lambda_y);

}  // namespace liquidseg::nn
