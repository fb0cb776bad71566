#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "liquidseg/nn.hpp"

namespace liquidseg::nn {

struct GeneratorConfig {
    int width = 8;         // stem channels; downsamplings double it twice
    int n_res_blocks = 4;  // residual blocks at the bottleneck resolution
};

struct ResBlock {
    Conv2d conv1, conv2;
    InstanceNorm2d norm1, norm2;
    ReLU relu;

    struct Cache {
        Conv2d::Cache c1, c2;
        InstanceNorm2d::Cache n1, n2;
        ReLU::Cache r;
    };

    ResBlock() = default;
    explicit ResBlock(int channels);
    void init(Rng& rng);
    Tensor forward(const Tensor& x, Cache& c) const;
    Tensor backward(const Tensor& dy, const Cache& c);
    void collect(const std::string& prefix, std::vector<ParamRef>& out);
};

// Reduced CUT backbone: 7x7 stem, two stride-2 downsamplings, residual
// bottleneck, two bilinear upsamplings, 7x7 output head squashed to [0,1].
// Reflection padding throughout. Contrastive feature taps sit after the stem
// and both downsampling activations.
class ResnetGenerator {
public:
    struct EncoderCache {
        Conv2d::Cache stem_c, d1_c, d2_c;
        InstanceNorm2d::Cache stem_n, d1_n, d2_n;
        ReLU::Cache stem_r, d1_r, d2_r;
        Tensor tap0, tap1, tap2;
    };
    struct FullCache {
        EncoderCache enc;
        std::vector<ResBlock::Cache> res_c;
        Conv2d::Cache u1_c, u2_c, out_c;
        InstanceNorm2d::Cache u1_n, u2_n;
        ReLU::Cache u1_r, u2_r;
        Tanh01::Cache squash_c;
    };

    ResnetGenerator() = default;
    ResnetGenerator(const GeneratorConfig& cfg, uint64_t seed);

    // full pass: x (N,3,H,W) with H, W divisible by 4 -> image in [0,1]
    Tensor forward(const Tensor& x, FullCache& c) const;
    // encoder-only pass filling the three feature taps
    void encode(const Tensor& x, EncoderCache& c) const;

    // Backward of the full pass. Optional tap gradients are added where the
    // taps were produced, covering the contrastive key path.
    Tensor backward(const Tensor& d_out, const FullCache& c,
                    const Tensor* d_tap0 = nullptr, const Tensor* d_tap1 = nullptr,
                    const Tensor* d_tap2 = nullptr);
    // Backward of an encoder-only pass given tap gradients (query path).
    Tensor backward_encoder(const EncoderCache& c, const Tensor& d_tap0,
                            const Tensor& d_tap1, const Tensor& d_tap2);

    std::vector<ParamRef> params();
    std::array<int, 3> tap_channels() const;
    const GeneratorConfig& config() const { return cfg_; }

private:
    GeneratorConfig cfg_;
    Conv2d stem_, down1_, down2_, up1_, up2_, out_;
    InstanceNorm2d stem_n_, d1_n_, d2_n_, u1_n_, u2_n_;
    ReLU relu_;
    BilinearUp2 up_;
    Tanh01 squash_;
    std::vector<ResBlock> res_;
};

// PatchGAN: three stride-2 blocks then a 1-channel logit map head.
class PatchDiscriminator {
public:
    struct Cache {
        Conv2d::Cache c1, c2, c3, head;
        InstanceNorm2d::Cache n2, n3;
        LeakyReLU::Cache r1, r2, r3;
    };

    PatchDiscriminator() = default;
    PatchDiscriminator(int width, uint64_t seed);

    Tensor forward(const Tensor& x, Cache& c) const;
    // Returns d input; accumulate_param_grads=false supports the generator
    // step, where gradients flow through a frozen discriminator.
    Tensor backward(const Tensor& d_logits, const Cache& c, bool accumulate_param_grads);

    std::vector<ParamRef> params();

private:
    int width_ = 16;
    Conv2d c1_, c2_, c3_, head_;
    InstanceNorm2d n2_, n3_;
    LeakyReLU lrelu_;
};

// Per-tap two-layer perceptrons projecting feature vectors onto the unit
// sphere for the contrastive loss.
class ProjectionHeads {
public:
    struct HeadCache {
        Linear::Cache c1, c2;
        ReLU::Cache r;
        L2Normalize::Cache n;
    };

    ProjectionHeads() = default;
    ProjectionHeads(const std::array<int, 3>& in_dims, int embed_dim, uint64_t seed);

    Tensor forward(int layer, const Tensor& feats, HeadCache& c) const;
    Tensor backward(int layer, const Tensor& d_embed, const HeadCache& c);

    std::vector<ParamRef> params();
    int embed_dim() const { return embed_dim_; }

private:
    struct Head {
        Linear l1, l2;
    };
    int embed_dim_ = 64;
    std::array<Head, 3> heads_;
    ReLU relu_;
    L2Normalize norm_;
};

}  // namespace liquidseg::nn
