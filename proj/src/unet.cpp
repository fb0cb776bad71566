#include "liquidseg/unet.hpp"

#include <stdexcept>

namespace liquidseg::nn {

DoubleConv::DoubleConv(int in, int out, int mid) {
    if (mid == 0) mid = out;
    conv1 = Conv2d(in, mid, 3, 1, 1, kernels::PadMode::zero);
    conv2 = Conv2d(mid, out, 3, 1, 1, kernels::PadMode::zero);
    bn1 = BatchNorm2d(mid);
    bn2 = BatchNorm2d(out);
}

void DoubleConv::init(Rng& rng) {
    conv1.init_he(rng);
    conv2.init_he(rng);
}

Tensor DoubleConv::forward(const Tensor& x, Cache& c, bool training) const {
    Tensor h = conv1.forward(x, c.c1);
    h = bn1.forward(h, c.b1, training);
    h = relu.forward(h, c.r1);
    h = conv2.forward(h, c.c2);
    h = bn2.forward(h, c.b2, training);
    return relu.forward(h, c.r2);
}

Tensor DoubleConv::backward(const Tensor& dy, const Cache& c) {
    Tensor dh = relu.backward(dy, c.r2);
    dh = bn2.backward(dh, c.b2);
    dh = conv2.backward(dh, c.c2);
    dh = relu.backward(dh, c.r1);
    dh = bn1.backward(dh, c.b1);
    return conv1.backward(dh, c.c1);
}

void DoubleConv::update_running(const Cache& c) {
    bn1.update_running(c.b1);
    bn2.update_running(c.b2);
}

void DoubleConv::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    conv1.collect(prefix + ".conv1", out);
    bn1.collect(prefix + ".bn1", out);
    conv2.collect(prefix + ".conv2", out);
    bn2.collect(prefix + ".bn2", out);
}

void DoubleConv::collect_stats(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".bn1.running_mean", &bn1.running_mean, nullptr});
    out.push_back({prefix + ".bn1.running_var", &bn1.running_var, nullptr});
    out.push_back({prefix + ".bn2.running_mean", &bn2.running_mean, nullptr});
    out.push_back({prefix + ".bn2.running_var", &bn2.running_var, nullptr});
}

UNet::UNet(int width, uint64_t seed) : width_(width) {
    const int w = width;
    inc_ = DoubleConv(3, w);
    d1_ = DoubleConv(w, 2 * w);
    d2_ = DoubleConv(2 * w, 4 * w);
    d3_ = DoubleConv(4 * w, 8 * w);
    d4_ = DoubleConv(8 * w, 8 * w);  // halved: bilinear upsampling is unlearned
    u1_ = DoubleConv(16 * w, 4 * w, 8 * w);
    u2_ = DoubleConv(8 * w, 2 * w, 4 * w);
    u3_ = DoubleConv(4 * w, w, 2 * w);
    u4_ = DoubleConv(2 * w, w, w);
    outc_ = Conv2d(w, 1, 1, 1, 0, kernels::PadMode::zero);

    Rng rng(derive_seed(seed, 0x07E7));
    inc_.init(rng);
    d1_.init(rng);
    d2_.init(rng);
    d3_.init(rng);
    d4_.init(rng);
    u1_.init(rng);
    u2_.init(rng);
    u3_.init(rng);
    u4_.init(rng);
    outc_.init_he(rng);
}

Tensor UNet::forward(const Tensor& x, Cache& c, bool training) const {
    if (x.h % 16 != 0 || x.w % 16 != 0)
        throw std::invalid_argument("unet: input dimensions must be divisible by 16");
    c.x1 = inc_.forward(x, c.inc_c, training);
    c.x2 = d1_.forward(pool_.forward(c.x1, c.p1), c.d1_c, training);
    c.x3 = d2_.forward(pool_.forward(c.x2, c.p2), c.d2_c, training);
    c.x4 = d3_.forward(pool_.forward(c.x3, c.p3), c.d3_c, training);
    Tensor x5 = d4_.forward(pool_.forward(c.x4, c.p4), c.d4_c, training);

    Tensor u = u1_.forward(concat_channels(c.x4, up_.forward(x5)), c.u1_c, training);
    u = u2_.forward(concat_channels(c.x3, up_.forward(u)), c.u2_c, training);
    u = u3_.forward(concat_channels(c.x2, up_.forward(u)), c.u3_c, training);
    u = u4_.forward(concat_channels(c.x1, up_.forward(u)), c.u4_c, training);
    return outc_.forward(u, c.out_c);
}

Tensor UNet::backward(const Tensor& d_logits, const Cache& c) {
    const int w = width_;
    Tensor d = outc_.backward(d_logits, c.out_c);

    Tensor d_skip1, d_up;
    split_channels(u4_.backward(d, c.u4_c), w, d_skip1, d_up);
    Tensor d_skip2, d_up2;
    split_channels(u3_.backward(up_.backward(d_up), c.u3_c), 2 * w, d_skip2, d_up2);
    Tensor d_skip3, d_up3;
    split_channels(u2_.backward(up_.backward(d_up2), c.u2_c), 4 * w, d_skip3, d_up3);
    Tensor d_skip4, d_up4;
    split_channels(u1_.backward(up_.backward(d_up3), c.u1_c), 8 * w, d_skip4, d_up4);

    Tensor d_x5 = up_.backward(d_up4);
    Tensor d_x4 = pool_.backward(d4_.backward(d_x5, c.d4_c), c.p4);
    d_x4 += d_skip4;
    Tensor d_x3 = pool_.backward(d3_.backward(d_x4, c.d3_c), c.p3);
    d_x3 += d_skip3;
    Tensor d_x2 = pool_.backward(d2_.backward(d_x3, c.d2_c), c.p2);
    d_x2 += d_skip2;
    Tensor d_x1 = pool_.backward(d1_.backward(d_x2, c.d1_c), c.p1);
    d_x1 += d_skip1;
    return inc_.backward(d_x1, c.inc_c);
}

void UNet::update_running(const Cache& c) {
    inc_.update_running(c.inc_c);
    d1_.update_running(c.d1_c);
    d2_.update_running(c.d2_c);
    d3_.update_running(c.d3_c);
    d4_.update_running(c.d4_c);
    u1_.update_running(c.u1_c);
    u2_.update_running(c.u2_c);
    u3_.update_running(c.u3_c);
    u4_.update_running(c.u4_c);
}

std::vector<ParamRef> UNet::params() {
    std::vector<ParamRef> out;
    inc_.collect("s.inc", out);
    d1_.collect("s.down1", out);
    d2_.collect("s.down2", out);
    d3_.collect("s.down3", out);
    d4_.collect("s.down4", out);
    u1_.collect("s.up1", out);
    u2_.collect("s.up2", out);
    u3_.collect("s.up3", out);
    u4_.collect("s.up4", out);
    outc_.collect("s.outc", out);
    return out;
}

std::vector<ParamRef> UNet::state() {
    std::vector<ParamRef> out = params();
    inc_.collect_stats("s.inc", out);
    d1_.collect_stats("s.down1", out);
    d2_.collect_stats("s.down2", out);
    d3_.collect_stats("s.down3", out);
    d4_.collect_stats("s.down4", out);
    u1_.collect_stats("s.up1", out);
    u2_.collect_stats("s.up2", out);
    u3_.collect_stats("s.up3", out);
    u4_.collect_stats("s.up4", out);
    return out;
}

size_t UNet::parameter_count() { return param_count(params()); }

}  // namespace liquidseg::nn
