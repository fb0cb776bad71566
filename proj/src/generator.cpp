#include "liquidseg/generator.hpp"

#include <stdexcept>

namespace liquidseg::nn {

using kernels::PadMode;

// ---------------------------------------------------------------- ResBlock

ResBlock::ResBlock(int channels)
    : conv1(channels, channels, 3, 1, 1, PadMode::reflect),
      conv2(channels, channels, 3, 1, 1, PadMode::reflect),
      norm1(channels), norm2(channels) {}

void ResBlock::init(Rng& rng) {
    conv1.init_gan(rng);
    conv2.init_gan(rng);
}

Tensor ResBlock::forward(const Tensor& x, Cache& c) const {
    Tensor h = conv1.forward(x, c.c1);
    h = norm1.forward(h, c.n1);
    h = relu.forward(h, c.r);
    h = conv2.forward(h, c.c2);
    h = norm2.forward(h, c.n2);
    h += x;
    return h;
}

Tensor ResBlock::backward(const Tensor& dy, const Cache& c) {
    Tensor dh = norm2.backward(dy, c.n2);
    dh = conv2.backward(dh, c.c2);
    dh = relu.backward(dh, c.r);
    dh = norm1.backward(dh, c.n1);
    dh = conv1.backward(dh, c.c1);
    dh += dy;  // skip path
    return dh;
}

void ResBlock::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    conv1.collect(prefix + ".conv1", out);
    norm1.collect(prefix + ".norm1", out);
    conv2.collect(prefix + ".conv2", out);
    norm2.collect(prefix + ".norm2", out);
}

// --------------------------------------------------------- ResnetGenerator

ResnetGenerator::ResnetGenerator(const GeneratorConfig& cfg, uint64_t seed) : cfg_(cfg) {
    const int w = cfg.width;
    stem_ = Conv2d(3, w, 7, 1, 3, PadMode::reflect);
    down1_ = Conv2d(w, 2 * w, 3, 2, 1, PadMode::reflect);
    down2_ = Conv2d(2 * w, 4 * w, 3, 2, 1, PadMode::reflect);
    up1_ = Conv2d(4 * w, 2 * w, 3, 1, 1, PadMode::reflect);
    up2_ = Conv2d(2 * w, w, 3, 1, 1, PadMode::reflect);
    out_ = Conv2d(w, 3, 7, 1, 3, PadMode::reflect);
    stem_n_ = InstanceNorm2d(w);
    d1_n_ = InstanceNorm2d(2 * w);
    d2_n_ = InstanceNorm2d(4 * w);
    u1_n_ = InstanceNorm2d(2 * w);
    u2_n_ = InstanceNorm2d(w);
    res_.clear();
    for (int i = 0; i < cfg.n_res_blocks; ++i) res_.emplace_back(4 * w);

    Rng rng(derive_seed(seed, 0x6E4));
    stem_.init_gan(rng);
    down1_.init_gan(rng);
    down2_.init_gan(rng);
    for (auto& r : res_) r.init(rng);
    up1_.init_gan(rng);
    up2_.init_gan(rng);
    out_.init_gan(rng);
}

Tensor ResnetGenerator::forward(const Tensor& x, FullCache& c) const {
    if (x.h % 4 != 0 || x.w % 4 != 0)
        throw std::invalid_argument("generator: input dimensions must be divisible by 4");
    encode(x, c.enc);
    Tensor h = c.enc.tap2;
    c.res_c.resize(res_.size());
    for (size_t i = 0; i < res_.size(); ++i) h = res_[i].forward(h, c.res_c[i]);
    h = up_.forward(h);
    h = up1_.forward(h, c.u1_c);
    h = u1_n_.forward(h, c.u1_n);
    h = relu_.forward(h, c.u1_r);
    h = up_.forward(h);
    h = up2_.forward(h, c.u2_c);
    h = u2_n_.forward(h, c.u2_n);
    h = relu_.forward(h, c.u2_r);
    h = out_.forward(h, c.out_c);
    return squash_.forward(h, c.squash_c);
}

void ResnetGenerator::encode(const Tensor& x, EncoderCache& c) const {
    Tensor h = stem_.forward(x, c.stem_c);
    h = stem_n_.forward(h, c.stem_n);
    c.tap0 = relu_.forward(h, c.stem_r);
    h = down1_.forward(c.tap0, c.d1_c);
    h = d1_n_.forward(h, c.d1_n);
    c.tap1 = relu_.forward(h, c.d1_r);
    h = down2_.forward(c.tap1, c.d2_c);
    h = d2_n_.forward(h, c.d2_n);
    c.tap2 = relu_.forward(h, c.d2_r);
}

Tensor ResnetGenerator::backward(const Tensor& d_out, const FullCache& c,
                                 const Tensor* d_tap0, const Tensor* d_tap1,
                                 const Tensor* d_tap2) {
    Tensor dh = squash_.backward(d_out, c.squash_c);
    dh = out_.backward(dh, c.out_c);
    dh = relu_.backward(dh, c.u2_r);
    dh = u2_n_.backward(dh, c.u2_n);
    dh = up2_.backward(dh, c.u2_c);
    dh = up_.backward(dh);
    dh = relu_.backward(dh, c.u1_r);
    dh = u1_n_.backward(dh, c.u1_n);
    dh = up1_.backward(dh, c.u1_c);
    dh = up_.backward(dh);
    for (size_t i = res_.size(); i-- > 0;) dh = res_[i].backward(dh, c.res_c[i]);
    if (d_tap2) dh += *d_tap2;
    dh = relu_.backward(dh, c.enc.d2_r);
    dh = d2_n_.backward(dh, c.enc.d2_n);
    dh = down2_.backward(dh, c.enc.d2_c);
    if (d_tap1) dh += *d_tap1;
    dh = relu_.backward(dh, c.enc.d1_r);
    dh = d1_n_.backward(dh, c.enc.d1_n);
    dh = down1_.backward(dh, c.enc.d1_c);
    if (d_tap0) dh += *d_tap0;
    dh = relu_.backward(dh, c.enc.stem_r);
    dh = stem_n_.backward(dh, c.enc.stem_n);
    return stem_.backward(dh, c.enc.stem_c);
}

Tensor ResnetGenerator::backward_encoder(const EncoderCache& c, const Tensor& d_tap0,
                                         const Tensor& d_tap1, const Tensor& d_tap2) {
    Tensor dh = relu_.backward(d_tap2, c.d2_r);
    dh = d2_n_.backward(dh, c.d2_n);
    dh = down2_.backward(dh, c.d2_c);
    dh += d_tap1;
    dh = relu_.backward(dh, c.d1_r);
    dh = d1_n_.backward(dh, c.d1_n);
    dh = down1_.backward(dh, c.d1_c);
    dh += d_tap0;
    dh = relu_.backward(dh, c.stem_r);
    dh = stem_n_.backward(dh, c.stem_n);
    return stem_.backward(dh, c.stem_c);
}

std::vector<ParamRef> ResnetGenerator::params() {
    std::vector<ParamRef> out;
    stem_.collect("g.stem", out);
    stem_n_.collect("g.stem_n", out);
    down1_.collect("g.down1", out);
    d1_n_.collect("g.down1_n", out);
    down2_.collect("g.down2", out);
    d2_n_.collect("g.down2_n", out);
    for (size_t i = 0; i < res_.size(); ++i)
        res_[i].collect("g.res" + std::to_string(i), out);
    up1_.collect("g.up1", out);
    u1_n_.collect("g.up1_n", out);
    up2_.collect("g.up2", out);
    u2_n_.collect("g.up2_n", out);
    out_.collect("g.out", out);
    return out;
}

std::array<int, 3> ResnetGenerator::tap_channels() const {
    return {cfg_.width, 2 * cfg_.width, 4 * cfg_.width};
}

// ------------------------------------------------------ PatchDiscriminator

PatchDiscriminator::PatchDiscriminator(int width, uint64_t seed) : width_(width) {
    c1_ = Conv2d(3, width, 4, 2, 1, PadMode::zero);
    c2_ = Conv2d(width, 2 * width, 4, 2, 1, PadMode::zero);
    c3_ = Conv2d(2 * width, 4 * width, 4, 2, 1, PadMode::zero);
    head_ = Conv2d(4 * width, 1, 3, 1, 1, PadMode::zero);
    n2_ = InstanceNorm2d(2 * width);
    n3_ = InstanceNorm2d(4 * width);
    Rng rng(derive_seed(seed, 0xD15C));
    c1_.init_gan(rng);
    c2_.init_gan(rng);
    c3_.init_gan(rng);
    head_.init_gan(rng);
}

Tensor PatchDiscriminator::forward(const Tensor& x, Cache& c) const {
    Tensor h = c1_.forward(x, c.c1);
    h = lrelu_.forward(h, c.r1);
    h = c2_.forward(h, c.c2);
    h = n2_.forward(h, c.n2);
    h = lrelu_.forward(h, c.r2);
    h = c3_.forward(h, c.c3);
    h = n3_.forward(h, c.n3);
    h = lrelu_.forward(h, c.r3);
    return head_.forward(h, c.head);
}

Tensor PatchDiscriminator::backward(const Tensor& d_logits, const Cache& c,
                                    bool accumulate_param_grads) {
    // gradient flow through a frozen discriminator reuses the same math but
    // drops the parameter-gradient accumulation
    auto conv_back = [&](Conv2d& conv, const Tensor& dy, const Conv2d::Cache& cc) {
        if (accumulate_param_grads) return conv.backward(dy, cc);
        Tensor dxp = kernels::conv2d_valid_backward_input(dy, conv.w, conv.stride,
                                                          cc.xp.h, cc.xp.w);
        return kernels::pad2d_backward(dxp, conv.pad, conv.pad_mode, cc.in_h, cc.in_w);
    };
    auto norm_back = [&](InstanceNorm2d& norm, const Tensor& dy,
                         const InstanceNorm2d::Cache& nc) {
        if (accumulate_param_grads) return norm.backward(dy, nc);
        InstanceNorm2d scratch = norm;  // same parameters, throwaway grads
        return scratch.backward(dy, nc);
    };

    Tensor dh = conv_back(head_, d_logits, c.head);
    dh = lrelu_.backward(dh, c.r3);
    dh = norm_back(n3_, dh, c.n3);
    dh = conv_back(c3_, dh, c.c3);
    dh = lrelu_.backward(dh, c.r2);
    dh = norm_back(n2_, dh, c.n2);
    dh = conv_back(c2_, dh, c.c2);
    dh = lrelu_.backward(dh, c.r1);
    return conv_back(c1_, dh, c.c1);
}

std::vector<ParamRef> PatchDiscriminator::params() {
    std::vector<ParamRef> out;
    c1_.collect("d.c1", out);
    c2_.collect("d.c2", out);
    n2_.collect("d.n2", out);
    c3_.collect("d.c3", out);
    n3_.collect("d.n3", out);
    head_.collect("d.head", out);
    return out;
}

// -------------------------------------------------------- ProjectionHeads

ProjectionHeads::ProjectionHeads(const std::array<int, 3>& in_dims, int embed_dim,
                                 uint64_t seed)
    : embed_dim_(embed_dim) {
    Rng rng(derive_seed(seed, 0x4EAD));
    for (int i = 0; i < 3; ++i) {
        heads_[i].l1 = Linear(in_dims[i], embed_dim);
        heads_[i].l2 = Linear(embed_dim, embed_dim);
        heads_[i].l1.init_he(rng);
        heads_[i].l2.init_he(rng);
    }
}

Tensor ProjectionHeads::forward(int layer, const Tensor& feats, HeadCache& c) const {
    const Head& h = heads_[layer];
    Tensor e = h.l1.forward(feats, c.c1);
    e = relu_.forward(e, c.r);
    e = h.l2.forward(e, c.c2);
    return norm_.forward(e, c.n);
}

Tensor ProjectionHeads::backward(int layer, const Tensor& d_embed, const HeadCache& c) {
    Head& h = heads_[layer];
    Tensor d = norm_.backward(d_embed, c.n);
    d = h.l2.backward(d, c.c2);
    d = relu_.backward(d, c.r);
    return h.l1.backward(d, c.c1);
}

std::vector<ParamRef> ProjectionHeads::params() {
    std::vector<ParamRef> out;
    for (int i = 0; i < 3; ++i) {
        heads_[i].l1.collect("h" + std::to_string(i) + ".l1", out);
        heads_[i].l2.collect("h" + std::to_string(i) + ".l2", out);
    }
    return out;
}

}  // namespace liquidseg::nn
