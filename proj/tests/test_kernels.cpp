#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "liquidseg/kernels.hpp"
#include "liquidseg/rng.hpp"

using namespace liquidseg;
using namespace liquidseg::kernels;
using liquidseg::nn::Tensor;

namespace {

Tensor random_tensor(int n, int c, int h, int w, Rng& rng) {
    Tensor t(n, c, h, w);
    for (double& v : t.v) v = rng.normal(0.0, 1.0);
    return t;
}

void check_close(const Tensor& a, const Tensor& b, double tol = 1e-12) {
    REQUIRE(a.same_shape(b));
    for (size_t i = 0; i < a.v.size(); ++i) {
        double denom = std::max({std::abs(a.v[i]), std::abs(b.v[i]), 1.0});
        CHECK(std::abs(a.v[i] - b.v[i]) / denom <= tol);
    }
}

}  // namespace

TEST_CASE("conv2d forward matches the serial reference") {
    Rng rng(1);
    for (auto [ic, oc, k, s, h, w] :
         {std::array<int, 6>{3, 8, 3, 1, 12, 14}, {8, 4, 3, 2, 13, 13},
          {3, 6, 7, 1, 16, 16}, {5, 5, 4, 2, 14, 18}}) {
        Tensor x = random_tensor(2, ic, h, w, rng);
        Tensor wt = random_tensor(oc, ic, k, k, rng);
        Tensor b = random_tensor(1, oc, 1, 1, rng);
        check_close(conv2d_valid(x, wt, b, s), ref::conv2d_valid(x, wt, b, s));
    }
}

TEST_CASE("conv2d backward input matches the serial reference") {
    Rng rng(2);
    for (int stride : {1, 2}) {
        const int ic = 4, oc = 6, k = 3, h = 12, w = 12;
        Tensor x = random_tensor(1, ic, h, w, rng);
        Tensor wt = random_tensor(oc, ic, k, k, rng);
        Tensor b(1, oc, 1, 1);
        Tensor y = conv2d_valid(x, wt, b, stride);
        Tensor dy = random_tensor(y.n, y.c, y.h, y.w, rng);
        check_close(conv2d_valid_backward_input(dy, wt, stride, h, w),
                    ref::conv2d_valid_backward_input(dy, wt, stride, h, w));
    }
}

TEST_CASE("conv2d backward params matches the serial reference") {
    Rng rng(3);
    for (int stride : {1, 2}) {
        const int ic = 3, oc = 5, k = 3, h = 11, w = 13;
        Tensor x = random_tensor(2, ic, h, w, rng);
        Tensor wt = random_tensor(oc, ic, k, k, rng);
        Tensor b(1, oc, 1, 1);
        Tensor y = conv2d_valid(x, wt, b, stride);
        Tensor dy = random_tensor(y.n, y.c, y.h, y.w, rng);

        Tensor gw(oc, ic, k, k), gb(1, oc, 1, 1);
        conv2d_valid_backward_params(dy, x, stride, k, gw, gb);
        Tensor gw_ref(oc, ic, k, k), gb_ref(1, oc, 1, 1);
        ref::conv2d_valid_backward_params(dy, x, stride, k, gw_ref, gb_ref);
        check_close(gw, gw_ref);
        check_close(gb, gb_ref);
    }
}

TEST_CASE("maxpool matches the serial reference including argmax") {
    Rng rng(4);
    Tensor x = random_tensor(2, 5, 14, 10, rng);
    std::vector<uint8_t> arg_fast, arg_ref;
    Tensor fast = maxpool2(x, arg_fast);
    Tensor slow = ref::maxpool2(x, arg_ref);
    check_close(fast, slow, 0.0);
    CHECK(arg_fast == arg_ref);
}

TEST_CASE("bilinear upsample matches the serial reference") {
    Rng rng(5);
    Tensor x = random_tensor(2, 3, 9, 7, rng);
    check_close(bilinear_up2(x), ref::bilinear_up2(x));
}

TEST_CASE("bilinear upsample backward is the exact adjoint") {
    // <up(x), dy> == <x, up_backward(dy)> for the linear map
    Rng rng(6);
    Tensor x = random_tensor(1, 2, 6, 5, rng);
    Tensor dy = random_tensor(1, 2, 12, 10, rng);
    Tensor up = bilinear_up2(x);
    Tensor dx = bilinear_up2_backward(dy);
    double lhs = 0.0, rhs = 0.0;
    for (size_t i = 0; i < up.v.size(); ++i) lhs += up.v[i] * dy.v[i];
    for (size_t i = 0; i < x.v.size(); ++i) rhs += x.v[i] * dx.v[i];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("pad reflect round trip adjoint") {
    Rng rng(7);
    Tensor x = random_tensor(1, 3, 8, 9, rng);
    for (PadMode mode : {PadMode::zero, PadMode::reflect}) {
        Tensor xp = pad2d(x, 2, mode);
        Tensor dy = random_tensor(xp.n, xp.c, xp.h, xp.w, rng);
        Tensor dx = pad2d_backward(dy, 2, mode, x.h, x.w);
        double lhs = 0.0, rhs = 0.0;
        for (size_t i = 0; i < xp.v.size(); ++i) lhs += xp.v[i] * dy.v[i];
        for (size_t i = 0; i < x.v.size(); ++i) rhs += x.v[i] * dx.v[i];
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
}

TEST_CASE("morphology matches the serial reference on random masks") {
    Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        BinaryMask m(17, 13);
        for (int y = 0; y < 17; ++y)
            for (int x = 0; x < 13; ++x) m.set(y, x, rng.uniform() < 0.5);
        for (int k : {1, 3, 5}) {
            CHECK(erode(m, k) == ref::erode(m, k));
            CHECK(dilate(m, k) == ref::dilate(m, k));
        }
    }
    CHECK_THROWS_AS(erode(BinaryMask(5, 5), 4), std::invalid_argument);
}
