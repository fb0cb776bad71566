#pragma once

#include <string>
#include <vector>

#include "liquidseg/kernels.hpp"
#include "liquidseg/rng.hpp"
#include "liquidseg/tensor.hpp"

// Layer zoo with hand-written backward passes. Layers hold parameters and
// parameter gradients; activations needed by backward live in per-pass Cache
// objects supplied by the caller, so several forward passes through the same
// network can coexist within one training step and gradients accumulate
// across their backwards. zero_grad() starts a step.

namespace liquidseg::nn {

struct ParamRef {
    std::string name;
    Tensor* value;
    Tensor* grad;
};

void init_normal(Tensor& t, Rng& rng, double stddev);
void init_he(Tensor& t, Rng& rng, int fan_in);

struct Conv2d {
    int in_ch = 0, out_ch = 0, ksize = 3, stride = 1, pad = 1;
    kernels::PadMode pad_mode = kernels::PadMode::zero;
    Tensor w, b, gw, gb;

    struct Cache {
        Tensor xp;  // padded input
        int in_h = 0, in_w = 0;
    };

    Conv2d() = default;
    Conv2d(int in, int out, int k, int stride_, int pad_,
           kernels::PadMode mode = kernels::PadMode::zero);

    void init_gan(Rng& rng);  // N(0, 0.02), zero bias
    void init_he(Rng& rng);

    Tensor forward(const Tensor& x, Cache& c) const;
    Tensor backward(const Tensor& dy, const Cache& c);
    void collect(const std::string& prefix, std::vector<ParamRef>& out);
};

struct InstanceNorm2d {
    int ch = 0;
    double eps = 1e-5;
    Tensor gamma, beta, ggamma, gbeta;

    struct Cache {
        Tensor xhat;
        std::vector<double> inv_std;  // per (n, c)
    };

    InstanceNorm2d() = default;
    explicit InstanceNorm2d(int channels);

    Tensor forward(const Tensor& x, Cache& c) const;
    Tensor backward(const Tensor& dy, const Cache& c);
    void collect(const std::string& prefix, std::vector<ParamRef>& out);
};

struct BatchNorm2d {
    int ch = 0;
    double eps = 1e-5;
    double momentum = 0.1;
    Tensor gamma, beta, ggamma, gbeta;
    Tensor running_mean, running_var;

    struct Cache {
        Tensor xhat;
        std::vector<double> inv_std, batch_mean, batch_var;  // per channel
    };

    BatchNorm2d() = default;
    explicit BatchNorm2d(int channels);

    // training=true normalizes with batch statistics; running statistics are
    // only touched by update_running, keeping forward repeatable for
    // finite-difference checks.
    Tensor forward(const Tensor& x, Cache& c, bool training) const;
    void update_running(const Cache& c);
    Tensor backward(const Tensor& dy, const Cache& c);
    void collect(const std::string& prefix, std::vector<ParamRef>& out);
};

struct ReLU {
    struct Cache {
        std::vector<uint8_t> pos;
    };
    Tensor forward(const Tensor& x, Cache& c) const;
    Tensor backward(const Tensor& dy, const Cache& c) const;
};

struct LeakyReLU {
    double slope = 0.2;
    struct Cache {
        std::vector<uint8_t> pos;
    };
    Tensor forward(const Tensor& x, Cache& c) const;
    Tensor backward(const Tensor& dy, const Cache& c) const;
};

// y = (tanh(x) + 1) / 2, squashing generator output into [0,1]
struct Tanh01 {
    struct Cache {
        Tensor t;  // tanh(x)
    };
    Tensor forward(const Tensor& x, Cache& c) const;
    Tensor backward(const Tensor& dy, const Cache& c) const;
};

struct MaxPool2 {
    struct Cache {
        std::vector<uint8_t> argmax;
        int in_h = 0, in_w = 0;
    };
    Tensor forward(const Tensor& x, Cache& c) const;
    Tensor backward(const Tensor& dy, const Cache& c) const;
};

struct BilinearUp2 {
    Tensor forward(const Tensor& x) const;
    Tensor backward(const Tensor& dy) const;
};

// rows are samples: x (N, D, 1, 1) -> y (N, M, 1, 1)
struct Linear {
    int in_dim = 0, out_dim = 0;
    Tensor w, b, gw, gb;

    struct Cache {
        Tensor x;
    };

    Linear() = default;
    Linear(int in, int out);
    void init_he(Rng& rng);

    Tensor forward(const Tensor& x, Cache& c) const;
    Tensor backward(const Tensor& dy, const Cache& c);
    void collect(const std::string& prefix, std::vector<ParamRef>& out);
};

// row-wise L2 normalization onto the unit sphere
struct L2Normalize {
    struct Cache {
        Tensor y;
        std::vector<double> inv_norm;
    };
    Tensor forward(const Tensor& x, Cache& c) const;
    Tensor backward(const Tensor& dy, const Cache& c) const;
};

Tensor concat_channels(const Tensor& a, const Tensor& b);
void split_channels(const Tensor& dy, int ca, Tensor& da, Tensor& db);

// feature vectors at spatial locations of a single-sample map (1, C, H, W)
struct PatchLocations {
    std::vector<int> ys, xs;
};
Tensor gather_locations(const Tensor& map, const PatchLocations& loc);
Tensor scatter_locations_backward(const Tensor& dvecs, const PatchLocations& loc,
                                  int c, int h, int w);

void zero_grads(std::vector<ParamRef>& params);
size_t param_count(const std::vector<ParamRef>& params);

}  // namespace liquidseg::nn
