#pragma once

#include <cstdint>
#include <vector>

#include "liquidseg/nn.hpp"

namespace liquidseg::nn {

struct DoubleConv {
    Conv2d conv1, conv2;
    BatchNorm2d bn1, bn2;
    ReLU relu;

    struct Cache {
        Conv2d::Cache c1, c2;
        BatchNorm2d::Cache b1, b2;
        ReLU::Cache r1, r2;
    };

    DoubleConv() = default;
    DoubleConv(int in, int out, int mid = 0);
    void init(Rng& rng);
    Tensor forward(const Tensor& x, Cache& c, bool training) const;
    Tensor backward(const Tensor& dy, const Cache& c);
    void update_running(const Cache& c);
    void collect(const std::string& prefix, std::vector<ParamRef>& out);
    void collect_stats(const std::string& prefix, std::vector<ParamRef>& out);
};

// Four maxpool downsampling blocks and four bilinear upsampling blocks with
// skip concatenation, base width doubling per level (halved at the bottom to
// match non-learned upsampling), 1-channel logit head.
class UNet {
public:
    struct Cache {
        DoubleConv::Cache inc_c, d1_c, d2_c, d3_c, d4_c, u1_c, u2_c, u3_c, u4_c;
        MaxPool2::Cache p1, p2, p3, p4;
        Conv2d::Cache out_c;
        Tensor x1, x2, x3, x4;  // skip activations
    };

    UNet() = default;
    UNet(int width, uint64_t seed);

    // input (N,3,H,W), H and W divisible by 16 -> logits (N,1,H,W)
    Tensor forward(const Tensor& x, Cache& c, bool training) const;
    Tensor backward(const Tensor& d_logits, const Cache& c);
    void update_running(const Cache& c);

    std::vector<ParamRef> params();
    // params plus batch-norm running statistics (grad slots null); this is
    // the serialization set, not an optimizer target
    std::vector<ParamRef> state();
    size_t parameter_count();
    int width() const { return width_; }

private:
    int width_ = 8;
    DoubleConv inc_, d1_, d2_, d3_, d4_, u1_, u2_, u3_, u4_;
    MaxPool2 pool_;
    BilinearUp2 up_;
    Conv2d outc_;
};

}  // namespace liquidseg::nn
