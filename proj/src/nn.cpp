#include "liquidseg/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace liquidseg::nn {

using kernels::PadMode;

void init_normal(Tensor& t, Rng& rng, double stddev) {
    for (double& v : t.v) v = rng.normal(0.0, stddev);
}

void init_he(Tensor& t, Rng& rng, int fan_in) {
    double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (double& v : t.v) v = rng.normal(0.0, stddev);
}

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(int in, int out, int k, int stride_, int pad_, PadMode mode)
    : in_ch(in), out_ch(out), ksize(k), stride(stride_), pad(pad_), pad_mode(mode),
      w(out, in, k, k), b(1, out, 1, 1), gw(out, in, k, k), gb(1, out, 1, 1) {}

void Conv2d::init_gan(Rng& rng) { init_normal(w, rng, 0.02); }

void Conv2d::init_he(Rng& rng) { nn::init_he(w, rng, in_ch * ksize * ksize); }

Tensor Conv2d::forward(const Tensor& x, Cache& c) const {
    if (x.c != in_ch) throw std::invalid_argument("Conv2d: channel mismatch");
    c.in_h = x.h;
    c.in_w = x.w;
    c.xp = kernels::pad2d(x, pad, pad_mode);
    return kernels::conv2d_valid(c.xp, w, b, stride);
}

Tensor Conv2d::backward(const Tensor& dy, const Cache& c) {
    kernels::conv2d_valid_backward_params(dy, c.xp, stride, ksize, gw, gb);
    Tensor dxp = kernels::conv2d_valid_backward_input(dy, w, stride, c.xp.h, c.xp.w);
    return kernels::pad2d_backward(dxp, pad, pad_mode, c.in_h, c.in_w);
}

void Conv2d::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".w", &w, &gw});
    out.push_back({prefix + ".b", &b, &gb});
}

// ---------------------------------------------------------- InstanceNorm2d

InstanceNorm2d::InstanceNorm2d(int channels)
    : ch(channels), gamma(1, channels, 1, 1), beta(1, channels, 1, 1),
      ggamma(1, channels, 1, 1), gbeta(1, channels, 1, 1) {
    for (double& v : gamma.v) v = 1.0;
}

Tensor InstanceNorm2d::forward(const Tensor& x, Cache& c) const {
    const int m = x.h * x.w;
    Tensor y(x.n, x.c, x.h, x.w);
    c.xhat = Tensor(x.n, x.c, x.h, x.w);
    c.inv_std.assign(static_cast<size_t>(x.n) * x.c, 0.0);

    const int groups = x.n * x.c;
#pragma omp parallel for schedule(static)
    for (int g = 0; g < groups; ++g) {
        const double* xp = x.v.data() + static_cast<size_t>(g) * m;
        double* xh = c.xhat.v.data() + static_cast<size_t>(g) * m;
        double* yp = y.v.data() + static_cast<size_t>(g) * m;
        double mu = 0.0;
        for (int t = 0; t < m; ++t) mu += xp[t];
        mu /= m;
        double var = 0.0;
        for (int t = 0; t < m; ++t) {
            double d = xp[t] - mu;
            var += d * d;
        }
        var /= m;
        double inv = 1.0 / std::sqrt(var + eps);
        c.inv_std[g] = inv;
        int cc = g % x.c;
        double ga = gamma.v[cc], be = beta.v[cc];
        for (int t = 0; t < m; ++t) {
            xh[t] = (xp[t] - mu) * inv;
            yp[t] = ga * xh[t] + be;
        }
    }
    return y;
}

Tensor InstanceNorm2d::backward(const Tensor& dy, const Cache& c) {
    const int m = dy.h * dy.w;
    Tensor dx(dy.n, dy.c, dy.h, dy.w);
    const int groups = dy.n * dy.c;

    // parameter grads: serial accumulation per channel, deterministic
    for (int g = 0; g < groups; ++g) {
        const double* dyp = dy.v.data() + static_cast<size_t>(g) * m;
        const double* xh = c.xhat.v.data() + static_cast<size_t>(g) * m;
        int cc = g % dy.c;
        double sg = 0.0, sb = 0.0;
        for (int t = 0; t < m; ++t) {
            sg += dyp[t] * xh[t];
            sb += dyp[t];
        }
        ggamma.v[cc] += sg;
        gbeta.v[cc] += sb;
    }

#pragma omp parallel for schedule(static)
    for (int g = 0; g < groups; ++g) {
        const double* dyp = dy.v.data() + static_cast<size_t>(g) * m;
        const double* xh = c.xhat.v.data() + static_cast<size_t>(g) * m;
        double* dxp = dx.v.data() + static_cast<size_t>(g) * m;
        int cc = g % dy.c;
        double ga = gamma.v[cc];
        double mean_dxh = 0.0, mean_dxh_xh = 0.0;
        for (int t = 0; t < m; ++t) {
            double dxh = dyp[t] * ga;
            mean_dxh += dxh;
            mean_dxh_xh += dxh * xh[t];
        }
        mean_dxh /= m;
        mean_dxh_xh /= m;
        double inv = c.inv_std[g];
        for (int t = 0; t < m; ++t) {
            double dxh = dyp[t] * ga;
            dxp[t] = inv * (dxh - mean_dxh - xh[t] * mean_dxh_xh);
        }
    }
    return dx;
}

void InstanceNorm2d::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".gamma", &gamma, &ggamma});
    out.push_back({prefix + ".beta", &beta, &gbeta});
}

// ------------------------------------------------------------ BatchNorm2d

BatchNorm2d::BatchNorm2d(int channels)
    : ch(channels), gamma(1, channels, 1, 1), beta(1, channels, 1, 1),
      ggamma(1, channels, 1, 1), gbeta(1, channels, 1, 1),
      running_mean(1, channels, 1, 1), running_var(1, channels, 1, 1) {
    for (double& v : gamma.v) v = 1.0;
    for (double& v : running_var.v) v = 1.0;
}

Tensor BatchNorm2d::forward(const Tensor& x, Cache& c, bool training) const {
    const int m = x.h * x.w;
    Tensor y(x.n, x.c, x.h, x.w);
    c.xhat = Tensor(x.n, x.c, x.h, x.w);
    c.inv_std.assign(x.c, 0.0);
    c.batch_mean.assign(x.c, 0.0);
    c.batch_var.assign(x.c, 0.0);

#pragma omp parallel for schedule(static)
    for (int cc = 0; cc < x.c; ++cc) {
        double mu, var;
        if (training) {
            mu = 0.0;
            for (int nb = 0; nb < x.n; ++nb) {
                const double* xp = x.plane(nb, cc);
                for (int t = 0; t < m; ++t) mu += xp[t];
            }
            mu /= static_cast<double>(x.n) * m;
            var = 0.0;
            for (int nb = 0; nb < x.n; ++nb) {
                const double* xp = x.plane(nb, cc);
                for (int t = 0; t < m; ++t) {
                    double d = xp[t] - mu;
                    var += d * d;
                }
            }
            var /= static_cast<double>(x.n) * m;
        } else {
            mu = running_mean.v[cc];
            var = running_var.v[cc];
        }
        double inv = 1.0 / std::sqrt(var + eps);
        c.batch_mean[cc] = mu;
        c.batch_var[cc] = var;
        c.inv_std[cc] = inv;
        double ga = gamma.v[cc], be = beta.v[cc];
        for (int nb = 0; nb < x.n; ++nb) {
            const double* xp = x.plane(nb, cc);
            double* xh = c.xhat.plane(nb, cc);
            double* yp = y.plane(nb, cc);
            for (int t = 0; t < m; ++t) {
                xh[t] = (xp[t] - mu) * inv;
                yp[t] = ga * xh[t] + be;
            }
        }
    }
    return y;
}

void BatchNorm2d::update_running(const Cache& c) {
    for (int cc = 0; cc < ch; ++cc) {
        running_mean.v[cc] = (1.0 - momentum) * running_mean.v[cc] + momentum * c.batch_mean[cc];
        running_var.v[cc] = (1.0 - momentum) * running_var.v[cc] + momentum * c.batch_var[cc];
    }
}

Tensor BatchNorm2d::backward(const Tensor& dy, const Cache& c) {
    const int m = dy.h * dy.w;
    const double count = static_cast<double>(dy.n) * m;
    Tensor dx(dy.n, dy.c, dy.h, dy.w);

#pragma omp parallel for schedule(static)
    for (int cc = 0; cc < dy.c; ++cc) {
        double sg = 0.0, sb = 0.0, mean_dxh = 0.0, mean_dxh_xh = 0.0;
        double ga = gamma.v[cc];
        for (int nb = 0; nb < dy.n; ++nb) {
            const double* dyp = dy.plane(nb, cc);
            const double* xh = c.xhat.plane(nb, cc);
            for (int t = 0; t < m; ++t) {
                sg += dyp[t] * xh[t];
                sb += dyp[t];
                mean_dxh += dyp[t] * ga;
                mean_dxh_xh += dyp[t] * ga * xh[t];
            }
        }
        ggamma.v[cc] += sg;
        gbeta.v[cc] += sb;
        mean_dxh /= count;
        mean_dxh_xh /= count;
        double inv = c.inv_std[cc];
        for (int nb = 0; nb < dy.n; ++nb) {
            const double* dyp = dy.plane(nb, cc);
            const double* xh = c.xhat.plane(nb, cc);
            double* dxp = dx.plane(nb, cc);
            for (int t = 0; t < m; ++t) {
                double dxh = dyp[t] * ga;
                dxp[t] = inv * (dxh - mean_dxh - xh[t] * mean_dxh_xh);
            }
        }
    }
    return dx;
}

void BatchNorm2d::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".gamma", &gamma, &ggamma});
    out.push_back({prefix + ".beta", &beta, &gbeta});
}

// ------------------------------------------------------------ activations

Tensor ReLU::forward(const Tensor& x, Cache& c) const {
    Tensor y = x;
    c.pos.assign(x.size(), 0);
    for (size_t i = 0; i < y.v.size(); ++i) {
        if (y.v[i] > 0)
            c.pos[i] = 1;
        else
            y.v[i] = 0.0;
    }
    return y;
}

Tensor ReLU::backward(const Tensor& dy, const Cache& c) const {
    Tensor dx = dy;
    for (size_t i = 0; i < dx.v.size(); ++i)
        if (!c.pos[i]) dx.v[i] = 0.0;
    return dx;
}

Tensor LeakyReLU::forward(const Tensor& x, Cache& c) const {
    Tensor y = x;
    c.pos.assign(x.size(), 0);
    for (size_t i = 0; i < y.v.size(); ++i) {
        if (y.v[i] > 0)
            c.pos[i] = 1;
        else
            y.v[i] *= slope;
    }
    return y;
}

Tensor LeakyReLU::backward(const Tensor& dy, const Cache& c) const {
    Tensor dx = dy;
    for (size_t i = 0; i < dx.v.size(); ++i)
        if (!c.pos[i]) dx.v[i] *= slope;
    return dx;
}

Tensor Tanh01::forward(const Tensor& x, Cache& c) const {
    Tensor y(x.n, x.c, x.h, x.w);
    c.t = Tensor(x.n, x.c, x.h, x.w);
    for (size_t i = 0; i < x.v.size(); ++i) {
        double t = std::tanh(x.v[i]);
        c.t.v[i] = t;
        y.v[i] = 0.5 * (t + 1.0);
    }
    return y;
}

Tensor Tanh01::backward(const Tensor& dy, const Cache& c) const {
    Tensor dx(dy.n, dy.c, dy.h, dy.w);
    for (size_t i = 0; i < dy.v.size(); ++i)
        dx.v[i] = dy.v[i] * 0.5 * (1.0 - c.t.v[i] * c.t.v[i]);
    return dx;
}

// --------------------------------------------------------------- pooling

Tensor MaxPool2::forward(const Tensor& x, Cache& c) const {
    c.in_h = x.h;
    c.in_w = x.w;
    return kernels::maxpool2(x, c.argmax);
}

Tensor MaxPool2::backward(const Tensor& dy, const Cache& c) const {
    return kernels::maxpool2_backward(dy, c.argmax, c.in_h, c.in_w);
}

Tensor BilinearUp2::forward(const Tensor& x) const { return kernels::bilinear_up2(x); }

Tensor BilinearUp2::backward(const Tensor& dy) const {
    return kernels::bilinear_up2_backward(dy);
}

// ---------------------------------------------------------------- Linear

Linear::Linear(int in, int out)
    : in_dim(in), out_dim(out), w(out, in, 1, 1), b(1, out, 1, 1),
      gw(out, in, 1, 1), gb(1, out, 1, 1) {}

void Linear::init_he(Rng& rng) { nn::init_he(w, rng, in_dim); }

Tensor Linear::forward(const Tensor& x, Cache& c) const {
    if (x.c != in_dim || x.h != 1 || x.w != 1)
        throw std::invalid_argument("Linear: expected (N, in_dim, 1, 1)");
    c.x = x;
    Tensor y(x.n, out_dim, 1, 1);
#pragma omp parallel for schedule(static)
    for (int nb = 0; nb < x.n; ++nb) {
        const double* xr = x.v.data() + static_cast<size_t>(nb) * in_dim;
        double* yr = y.v.data() + static_cast<size_t>(nb) * out_dim;
        for (int o = 0; o < out_dim; ++o) {
            const double* wr = w.v.data() + static_cast<size_t>(o) * in_dim;
            double acc = b.v[o];
            for (int d = 0; d < in_dim; ++d) acc += xr[d] * wr[d];
            yr[o] = acc;
        }
    }
    return y;
}

Tensor Linear::backward(const Tensor& dy, const Cache& c) {
    const Tensor& x = c.x;
    for (int o = 0; o < out_dim; ++o) {
        double* gwr = gw.v.data() + static_cast<size_t>(o) * in_dim;
        double gbacc = 0.0;
        for (int nb = 0; nb < x.n; ++nb) {
            double g = dy.v[static_cast<size_t>(nb) * out_dim + o];
            gbacc += g;
            const double* xr = x.v.data() + static_cast<size_t>(nb) * in_dim;
            for (int d = 0; d < in_dim; ++d) gwr[d] += g * xr[d];
        }
        gb.v[o] += gbacc;
    }
    Tensor dx(x.n, in_dim, 1, 1);
    for (int nb = 0; nb < x.n; ++nb) {
        const double* dyr = dy.v.data() + static_cast<size_t>(nb) * out_dim;
        double* dxr = dx.v.data() + static_cast<size_t>(nb) * in_dim;
        for (int o = 0; o < out_dim; ++o) {
            const double* wr = w.v.data() + static_cast<size_t>(o) * in_dim;
            for (int d = 0; d < in_dim; ++d) dxr[d] += dyr[o] * wr[d];
        }
    }
    return dx;
}

void Linear::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".w", &w, &gw});
    out.push_back({prefix + ".b", &b, &gb});
}

// ------------------------------------------------------------ L2Normalize

Tensor L2Normalize::forward(const Tensor& x, Cache& c) const {
    Tensor y(x.n, x.c, 1, 1);
    c.inv_norm.assign(x.n, 0.0);
    for (int nb = 0; nb < x.n; ++nb) {
        const double* xr = x.v.data() + static_cast<size_t>(nb) * x.c;
        double* yr = y.v.data() + static_cast<size_t>(nb) * x.c;
        double s = 0.0;
        for (int d = 0; d < x.c; ++d) s += xr[d] * xr[d];
        double inv = 1.0 / std::sqrt(s + 1e-12);
        c.inv_norm[nb] = inv;
        for (int d = 0; d < x.c; ++d) yr[d] = xr[d] * inv;
    }
    c.y = y;
    return y;
}

Tensor L2Normalize::backward(const Tensor& dy, const Cache& c) const {
    Tensor dx(dy.n, dy.c, 1, 1);
    for (int nb = 0; nb < dy.n; ++nb) {
        const double* dyr = dy.v.data() + static_cast<size_t>(nb) * dy.c;
        const double* yr = c.y.v.data() + static_cast<size_t>(nb) * dy.c;
        double* dxr = dx.v.data() + static_cast<size_t>(nb) * dy.c;
        double dot = 0.0;
        for (int d = 0; d < dy.c; ++d) dot += dyr[d] * yr[d];
        for (int d = 0; d < dy.c; ++d)
            dxr[d] = (dyr[d] - yr[d] * dot) * c.inv_norm[nb];
    }
    return dx;
}

// ------------------------------------------------------------- utilities

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    if (a.n != b.n || a.h != b.h || a.w != b.w)
        throw std::invalid_argument("concat_channels: spatial/batch mismatch");
    Tensor y(a.n, a.c + b.c, a.h, a.w);
    const size_t plane = static_cast<size_t>(a.h) * a.w;
    for (int nb = 0; nb < a.n; ++nb) {
        for (int c = 0; c < a.c; ++c)
            std::copy_n(a.plane(nb, c), plane, y.plane(nb, c));
        for (int c = 0; c < b.c; ++c)
            std::copy_n(b.plane(nb, c), plane, y.plane(nb, a.c + c));
    }
    return y;
}

void split_channels(const Tensor& dy, int ca, Tensor& da, Tensor& db) {
    da = Tensor(dy.n, ca, dy.h, dy.w);
    db = Tensor(dy.n, dy.c - ca, dy.h, dy.w);
    const size_t plane = static_cast<size_t>(dy.h) * dy.w;
    for (int nb = 0; nb < dy.n; ++nb) {
        for (int c = 0; c < ca; ++c)
            std::copy_n(dy.plane(nb, c), plane, da.plane(nb, c));
        for (int c = 0; c < dy.c - ca; ++c)
            std::copy_n(dy.plane(nb, ca + c), plane, db.plane(nb, c));
    }
}

Tensor gather_locations(const Tensor& map, const PatchLocations& loc) {
    if (map.n != 1) throw std::invalid_argument("gather_locations: single-sample maps only");
    const int p = static_cast<int>(loc.ys.size());
    Tensor out(p, map.c, 1, 1);
    for (int i = 0; i < p; ++i) {
        int y = loc.ys[i], x = loc.xs[i];
        if (y < 0 || y >= map.h || x < 0 || x >= map.w)
            throw std::out_of_range("gather_locations: location outside feature grid");
        for (int c = 0; c < map.c; ++c)
            out.v[static_cast<size_t>(i) * map.c + c] = map.at(0, c, y, x);
    }
    return out;
}

Tensor scatter_locations_backward(const Tensor& dvecs, const PatchLocations& loc,
                                  int c, int h, int w) {
    Tensor dmap(1, c, h, w);
    for (int i = 0; i < dvecs.n; ++i) {
        int y = loc.ys[i], x = loc.xs[i];
        for (int ch = 0; ch < c; ++ch)
            dmap.at(0, ch, y, x) += dvecs.v[static_cast<size_t>(i) * c + ch];
    }
    return dmap;
}

void zero_grads(std::vector<ParamRef>& params) {
    for (auto& p : params) p.grad->zero();
}

size_t param_count(const std::vector<ParamRef>& params) {
    size_t n = 0;
    for (const auto& p : params) n += p.value->size();
    return n;
}

}  // namespace liquidseg::nn
