#include "liquidseg/kernels.hpp"

#include <stdexcept>

// Naive single-threaded reference implementations. These trade speed for
// obviousness and exist so the OpenMP kernels have something independent to
// be checked against.

namespace liquidseg::kernels::ref {

Tensor conv2d_valid(const Tensor& xp, const Tensor& w, const Tensor& b, int stride) {
    const int oc = w.n, ic = w.c, k = w.h;
    const int oh = (xp.h - k) / stride + 1;
    const int ow = (xp.w - k) / stride + 1;
    Tensor y(xp.n, oc, oh, ow);
    for (int nb = 0; nb < xp.n; ++nb)
        for (int o = 0; o < oc; ++o)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    double acc = b.v[o];
                    for (int i = 0; i < ic; ++i)
                        for (int ky = 0; ky < k; ++ky)
                            for (int kx = 0; kx < k; ++kx)
                                acc += xp.at(nb, i, oy * stride + ky, ox * stride + kx) *
                                       w.at(o, i, ky, kx);
                    y.at(nb, o, oy, ox) = acc;
                }
    return y;
}

Tensor conv2d_valid_backward_input(const Tensor& dy, const Tensor& w, int stride,
                                   int in_h, int in_w) {
    const int oc = w.n, ic = w.c, k = w.h;
    Tensor dx(dy.n, ic, in_h, in_w);
    for (int nb = 0; nb < dy.n; ++nb)
        for (int o = 0; o < oc; ++o)
            for (int oy = 0; oy < dy.h; ++oy)
                for (int ox = 0; ox < dy.w; ++ox) {
                    double g = dy.at(nb, o, oy, ox);
                    for (int i = 0; i < ic; ++i)
                        for (int ky = 0; ky < k; ++ky)
                            for (int kx = 0; kx < k; ++kx)
                                dx.at(nb, i, oy * stride + ky, ox * stride + kx) +=
                                    g * w.at(o, i, ky, kx);
                }
    return dx;
}

void conv2d_valid_backward_params(const Tensor& dy, const Tensor& xp, int stride,
                                  int ksize, Tensor& gw, Tensor& gb) {
    const int oc = dy.c, ic = xp.c, k = ksize;
    for (int nb = 0; nb < dy.n; ++nb)
        for (int o = 0; o < oc; ++o)
            for (int oy = 0; oy < dy.h; ++oy)
                for (int ox = 0; ox < dy.w; ++ox) {
                    double g = dy.at(nb, o, oy, ox);
                    gb.v[o] += g;
                    for (int i = 0; i < ic; ++i)
                        for (int ky = 0; ky < k; ++ky)
                            for (int kx = 0; kx < k; ++kx)
                                gw.at(o, i, ky, kx) +=
                                    g * xp.at(nb, i, oy * stride + ky, ox * stride + kx);
                }
}

Tensor maxpool2(const Tensor& x, std::vector<uint8_t>& argmax) {
    const int oh = x.h / 2, ow = x.w / 2;
    Tensor y(x.n, x.c, oh, ow);
    argmax.assign(y.size(), 0);
    size_t out = 0;
    for (int nb = 0; nb < x.n; ++nb)
        for (int c = 0; c < x.c; ++c)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox, ++out) {
                    double best = x.at(nb, c, 2 * oy, 2 * ox);
                    int arg = 0;
                    const int offs[4][2] = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
                    for (int t = 1; t < 4; ++t) {
                        double v = x.at(nb, c, 2 * oy + offs[t][0], 2 * ox + offs[t][1]);
                        if (v > best) {
                            best = v;
                            arg = t;
                        }
                    }
                    y.v[out] = best;
                    argmax[out] = static_cast<uint8_t>(arg);
                }
    return y;
}

Tensor bilinear_up2(const Tensor& x) {
    Tensor y(x.n, x.c, 2 * x.h, 2 * x.w);
    auto coord = [](int o, int dim, int& lo, int& hi, double& f) {
        double s = (o + 0.5) / 2.0 - 0.5;
        if (s < 0) s = 0;
        if (s > dim - 1) s = dim - 1;
        lo = static_cast<int>(s);
        hi = lo + 1 < dim ? lo + 1 : dim - 1;
        f = s - lo;
    };
    for (int nb = 0; nb < x.n; ++nb)
        for (int c = 0; c < x.c; ++c)
            for (int oy = 0; oy < y.h; ++oy)
                for (int ox = 0; ox < y.w; ++ox) {
                    int y0, y1, x0, x1;
                    double fy, fx;
                    coord(oy, x.h, y0, y1, fy);
                    coord(ox, x.w, x0, x1, fx);
                    y.at(nb, c, oy, ox) =
                        (1 - fy) * ((1 - fx) * x.at(nb, c, y0, x0) + fx * x.at(nb, c, y0, x1)) +
                        fy * ((1 - fx) * x.at(nb, c, y1, x0) + fx * x.at(nb, c, y1, x1));
                }
    return y;
}

BinaryMask erode(const BinaryMask& m, int ksize) {
    if (ksize < 1 || ksize % 2 == 0)
        throw std::invalid_argument("morphology: kernel must be odd and >= 1");
    const int r = ksize / 2;
    BinaryMask out(m.height(), m.width());
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x) {
            bool all = true;
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    int yy = y + dy, xx = x + dx;
                    bool v = yy >= 0 && yy < m.height() && xx >= 0 && xx < m.width() &&
                             m.at(yy, xx);
                    all = all && v;
                }
            out.set(y, x, all);
        }
    return out;
}

BinaryMask dilate(const BinaryMask& m, int ksize) {
    if (ksize < 1 || ksize % 2 == 0)
        throw std::invalid_argument("morphology: kernel must be odd and >= 1");
    const int r = ksize / 2;
    BinaryMask out(m.height(), m.width());
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x) {
            bool any = false;
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    int yy = y + dy, xx = x + dx;
                    any = any || (yy >= 0 && yy < m.height() && xx >= 0 && xx < m.width() &&
                                  m.at(yy, xx));
                }
            out.set(y, x, any);
        }
    return out;
}

}  // namespace liquidseg::kernels::ref
