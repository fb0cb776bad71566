#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "liquidseg/losses.hpp"
#include "liquidseg/rng.hpp"

using namespace liquidseg;
using namespace liquidseg::nn;

namespace {

Tensor filled(int n, int c, int h, int w, double v) {
    Tensor t(n, c, h, w);
    for (double& x : t.v) x = v;
    return t;
}

Tensor random_logits(int count, Rng& rng, double scale = 3.0) {
    Tensor t(1, 1, 1, count);
    for (double& v : t.v) v = rng.normal(0.0, scale);
    return t;
}

// independent scalar recomputation of the adversarial objective
double eq_oracle(const Tensor& zr, const Tensor& zf) {
    auto clamp_p = [](double z) {
        double p = 1.0 / (1.0 + std::exp(-z));
        return std::min(std::max(p, 1e-7), 1.0 - 1e-7);
    };
    double a = 0.0;
    for (double z : zr.v) a += std::log(clamp_p(z));
    a /= static_cast<double>(zr.v.size());
    double b = 0.0;
    for (double z : zf.v) b += std::log(1.0 - clamp_p(z));
    b /= static_cast<double>(zf.v.size());
    return a + b;
}

double unit_logit_for_p(double p) { return std::log(p / (1.0 - p)); }

}  // namespace

TEST_CASE("gan_loss at the symmetric point equals 2 ln 0.5") {
    Tensor zr = filled(1, 1, 2, 2, 0.0);  // sigmoid = 0.5
    Tensor zf = filled(1, 1, 2, 2, 0.0);
    GanLossValue v = gan_loss(zr, zf);
    CHECK(v.objective == doctest::Approx(2.0 * std::log(0.5)).epsilon(1e-12));
    CHECK(v.loss_d == doctest::Approx(-2.0 * std::log(0.5)).epsilon(1e-12));
}

TEST_CASE("gan_loss at the clamped optimum is ~0") {
    // logits driving probabilities onto the clamp boundaries
    Tensor zr = filled(1, 1, 1, 4, 40.0);
    Tensor zf = filled(1, 1, 1, 4, -40.0);
    GanLossValue v = gan_loss(zr, zf);
    CHECK(std::abs(v.objective) <= 3e-7);
}

TEST_CASE("gan_loss matches the scalar oracle on random logits") {
    Rng rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        Tensor zr = random_logits(8, rng);
        Tensor zf = random_logits(6, rng);
        GanLossValue v = gan_loss(zr, zf);
        CHECK(v.objective == doctest::Approx(eq_oracle(zr, zf)).epsilon(1e-10));
        // generator side: -E log p_fake
        double g = 0.0;
        for (double z : zf.v) {
            double p = std::min(std::max(1.0 / (1.0 + std::exp(-z)), 1e-7), 1.0 - 1e-7);
            g -= std::log(p);
        }
        CHECK(v.loss_g == doctest::Approx(g / zf.v.size()).epsilon(1e-10));
    }
}

TEST_CASE("gan_loss rejects non-finite logits") {
    Tensor zr = filled(1, 1, 1, 2, 0.0);
    Tensor bad = filled(1, 1, 1, 2, std::numeric_limits<double>::quiet_NaN());
    CHECK_THROWS_AS(gan_loss(zr, bad), std::invalid_argument);
}

TEST_CASE("lsgan variant") {
    Tensor zr = filled(1, 1, 1, 2, 0.5);
    Tensor zf = filled(1, 1, 1, 2, -0.5);
    GanLossValue v = gan_loss(zr, zf, GanMode::lsgan);
    CHECK(v.loss_d == doctest::Approx(0.5 * 0.25 + 0.5 * 0.25));
    CHECK(v.loss_g == doctest::Approx(0.5 * 2.25));
}

TEST_CASE("bce at logit 0 equals ln 2 for any target") {
    Tensor z = filled(1, 1, 4, 4, 0.0);
    Tensor t(1, 1, 4, 4);
    Rng rng(3);
    for (double& v : t.v) v = rng.uniform() < 0.5 ? 0.0 : 1.0;
    CHECK(bce_with_logits(z, t) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("bce saturated-correct is ~0") {
    Tensor z(1, 1, 2, 2), t(1, 1, 2, 2);
    z.v = {20.0, -20.0, 20.0, -20.0};
    t.v = {1.0, 0.0, 1.0, 0.0};
    CHECK(bce_with_logits(z, t) <= 1e-6);
}

TEST_CASE("bce matches the per-pixel oracle on random input") {
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        Tensor z = random_logits(32, rng);
        Tensor t(1, 1, 1, 32);
        for (double& v : t.v) v = rng.uniform() < 0.5 ? 0.0 : 1.0;
        double oracle = 0.0;
        for (int i = 0; i < 32; ++i) {
            double p = std::min(std::max(1.0 / (1.0 + std::exp(-z.v[i])), 1e-7), 1.0 - 1e-7);
            oracle -= t.v[i] * std::log(p) + (1.0 - t.v[i]) * std::log(1.0 - p);
        }
        oracle /= 32.0;
        CHECK(bce_with_logits(z, t) == doctest::Approx(oracle).epsilon(1e-10));
    }
    CHECK_THROWS_AS(bce_with_logits(Tensor(1, 1, 2, 2), Tensor(1, 1, 2, 3)),
                    std::invalid_argument);
}

TEST_CASE("patchnce with identical embeddings gives ln N") {
    for (int n : {2, 3, 8}) {
        Tensor q(n, 4, 1, 1), k(n, 4, 1, 1);
        for (int i = 0; i < n; ++i) {
            q.v[static_cast<size_t>(i) * 4] = 1.0;  // same unit vector everywhere
            k.v[static_cast<size_t>(i) * 4] = 1.0;
        }
        NceResult r = patchnce_loss(q, k, 0.07);
        CHECK(r.loss == doctest::Approx(std::log(static_cast<double>(n))).epsilon(1e-12));
    }
}

TEST_CASE("patchnce N=3 tau=1 with positive sim 1, negatives 0") {
    // orthonormal keys; each query equals its key
    Tensor q(3, 3, 1, 1), k(3, 3, 1, 1);
    for (int i = 0; i < 3; ++i) {
        q.v[static_cast<size_t>(i) * 3 + i] = 1.0;
        k.v[static_cast<size_t>(i) * 3 + i] = 1.0;
    }
    NceResult r = patchnce_loss(q, k, 1.0);
    double expected = -std::log(std::exp(1.0) / (std::exp(1.0) + 2.0));
    CHECK(r.loss == doctest::Approx(expected).epsilon(1e-12));
    CHECK(r.loss == doctest::Approx(0.5514).epsilon(1e-3));
}

TEST_CASE("patchnce loss approaches 0 as tau shrinks with separated sims") {
    Tensor q(3, 3, 1, 1), k(3, 3, 1, 1);
    for (int i = 0; i < 3; ++i) {
        q.v[static_cast<size_t>(i) * 3 + i] = 1.0;
        k.v[static_cast<size_t>(i) * 3 + i] = 1.0;
    }
    double prev = patchnce_loss(q, k, 1.0).loss;
    for (double tau : {0.3, 0.1, 0.03}) {
        double cur = patchnce_loss(q, k, tau).loss;
        CHECK(cur < prev);
        prev = cur;
    }
    CHECK(prev <= 1e-10);
}

TEST_CASE("patchnce matches a scalar softmax cross-entropy oracle") {
    Rng rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 5, d = 8;
        Tensor q(n, d, 1, 1), k(n, d, 1, 1);
        for (double& v : q.v) v = rng.normal(0.0, 1.0);
        for (double& v : k.v) v = rng.normal(0.0, 1.0);
        // normalize rows
        for (int i = 0; i < n; ++i) {
            double nq = 0, nk = 0;
            for (int t = 0; t < d; ++t) {
                nq += q.v[static_cast<size_t>(i) * d + t] * q.v[static_cast<size_t>(i) * d + t];
                nk += k.v[static_cast<size_t>(i) * d + t] * k.v[static_cast<size_t>(i) * d + t];
            }
            for (int t = 0; t < d; ++t) {
                q.v[static_cast<size_t>(i) * d + t] /= std::sqrt(nq);
                k.v[static_cast<size_t>(i) * d + t] /= std::sqrt(nk);
            }
        }
        const double tau = 0.07;
        double oracle = 0.0;
        for (int i = 0; i < n; ++i) {
            double denom = 0.0, pos = 0.0;
            for (int j = 0; j < n; ++j) {
                double dot = 0.0;
                for (int t = 0; t < d; ++t)
                    dot += q.v[static_cast<size_t>(i) * d + t] *
                           k.v[static_cast<size_t>(j) * d + t];
                denom += std::exp(dot / tau);
                if (j == i) pos = std::exp(dot / tau);
            }
            oracle += -std::log(pos / denom);
        }
        oracle /= n;
        CHECK(patchnce_loss(q, k, tau).loss == doctest::Approx(oracle).epsilon(1e-9));
    }
    CHECK_THROWS_AS(patchnce_loss(Tensor(1, 4, 1, 1), Tensor(1, 4, 1, 1), 0.07),
                    std::invalid_argument);
}

TEST_CASE("cut_total_loss arithmetic and linearity in the weights") {
    CHECK(cut_total_loss(0.5, 0.2, 0.3, 1.0, 1.0) == doctest::Approx(1.0));
    CHECK(cut_total_loss(0.7, 5.0, 9.0, 0.0, 0.0) == doctest::Approx(0.7));
    CHECK(cut_total_loss(1.0, 0.5, 9.0, 2.0, 0.0) == doctest::Approx(2.0));

    // doubling lambda_x doubles the nce_x contribution exactly
    Rng rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        double g = rng.normal(0, 1), nx = std::abs(rng.normal(0, 1)),
               ny = std::abs(rng.normal(0, 1));
        double lx = std::abs(rng.normal(0, 1)), ly = std::abs(rng.normal(0, 1));
        double base = cut_total_loss(g, nx, ny, lx, ly);
        double doubled = cut_total_loss(g, nx, ny, 2.0 * lx, ly);
        CHECK(doubled - base == doctest::Approx(lx * nx).epsilon(1e-12));
    }

    CHECK_THROWS_AS(cut_total_loss(std::numeric_limits<double>::infinity(), 0, 0, 1, 1),
                    std::invalid_argument);
}

TEST_CASE("probability for unit logit helper sanity") {
    CHECK(unit_logit_for_p(0.5) == doctest::Approx(0.0));
}
