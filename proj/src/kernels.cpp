#include "liquidseg/kernels.hpp"

#include <algorithm>
#include <stdexcept>

namespace liquidseg::kernels {

namespace {

// reflect index without repeating the edge sample (requires pad <= dim-1)
inline int reflect_index(int t, int dim) {
    if (t < 0) return -t;
    if (t >= dim) return 2 * (dim - 1) - t;
    return t;
}

}  // namespace

Tensor pad2d(const Tensor& x, int pad, PadMode mode) {
    if (pad == 0) return x;
    if (mode == PadMode::reflect && (pad > x.h - 1 || pad > x.w - 1))
        throw std::invalid_argument("pad2d: reflect pad too large for input");
    Tensor out(x.n, x.c, x.h + 2 * pad, x.w + 2 * pad);
    const int planes = x.n * x.c;
#pragma omp parallel for schedule(static)
    for (int p = 0; p < planes; ++p) {
        const double* src = x.v.data() + static_cast<size_t>(p) * x.h * x.w;
        double* dst = out.v.data() + static_cast<size_t>(p) * out.h * out.w;
        for (int y = 0; y < out.h; ++y) {
            int sy = y - pad;
            if (mode == PadMode::reflect) sy = reflect_index(sy, x.h);
            for (int xx = 0; xx < out.w; ++xx) {
                int sx = xx - pad;
                if (mode == PadMode::reflect) sx = reflect_index(sx, x.w);
                bool inside = sy >= 0 && sy < x.h && sx >= 0 && sx < x.w;
                dst[static_cast<size_t>(y) * out.w + xx] =
                    inside ? src[static_cast<size_t>(sy) * x.w + sx] : 0.0;
            }
        }
    }
    return out;
}

Tensor pad2d_backward(const Tensor& dxp, int pad, PadMode mode, int h, int w) {
    if (pad == 0) return dxp;
    Tensor dx(dxp.n, dxp.c, h, w);
    const int planes = dxp.n * dxp.c;
#pragma omp parallel for schedule(static)
    for (int p = 0; p < planes; ++p) {
        const double* src = dxp.v.data() + static_cast<size_t>(p) * dxp.h * dxp.w;
        double* dst = dx.v.data() + static_cast<size_t>(p) * h * w;
        for (int y = 0; y < dxp.h; ++y) {
            int sy = y - pad;
            if (mode == PadMode::reflect)
                sy = reflect_index(sy, h);
            else if (sy < 0 || sy >= h)
                continue;
            for (int xx = 0; xx < dxp.w; ++xx) {
                int sx = xx - pad;
                if (mode == PadMode::reflect)
                    sx = reflect_index(sx, w);
                else if (sx < 0 || sx >= w)
                    continue;
                dst[static_cast<size_t>(sy) * w + sx] += src[static_cast<size_t>(y) * dxp.w + xx];
            }
        }
    }
    return dx;
}

Tensor conv2d_valid(const Tensor& xp, const Tensor& w, const Tensor& b, int stride) {
    const int oc = w.n, ic = w.c, k = w.h;
    if (xp.c != ic) throw std::invalid_argument("conv2d_valid: channel mismatch");
    const int oh = (xp.h - k) / stride + 1;
    const int ow = (xp.w - k) / stride + 1;
    Tensor y(xp.n, oc, oh, ow);

    const int rows = xp.n * oc * oh;
#pragma omp parallel for schedule(static)
    for (int r = 0; r < rows; ++r) {
        const int oy = r % oh;
        const int o = (r / oh) % oc;
        const int nb = r / (oh * oc);
        double* yrow = y.v.data() + ((static_cast<size_t>(nb) * oc + o) * oh + oy) * ow;
        for (int ox = 0; ox < ow; ++ox) yrow[ox] = b.v[o];
        for (int i = 0; i < ic; ++i) {
            const double* wker = w.v.data() + (static_cast<size_t>(o) * ic + i) * k * k;
            const double* xpl = xp.v.data() + (static_cast<size_t>(nb) * ic + i) * xp.h * xp.w;
            for (int ky = 0; ky < k; ++ky) {
                const double* xrow = xpl + static_cast<size_t>(oy * stride + ky) * xp.w;
                const double* wrow = wker + static_cast<size_t>(ky) * k;
                for (int ox = 0; ox < ow; ++ox) {
                    const double* xpix = xrow + ox * stride;
                    double acc = 0.0;
                    for (int kx = 0; kx < k; ++kx) acc += xpix[kx] * wrow[kx];
                    yrow[ox] += acc;
                }
            }
        }
    }
    return y;
}

Tensor conv2d_valid_backward_input(const Tensor& dy, const Tensor& w, int stride,
                                   int in_h, int in_w) {
    const int oc = w.n, ic = w.c, k = w.h;
    Tensor dx(dy.n, ic, in_h, in_w);

    const int rows = dy.n * ic * in_h;
#pragma omp parallel for schedule(static)
    for (int r = 0; r < rows; ++r) {
        const int iy = r % in_h;
        const int i = (r / in_h) % ic;
        const int nb = r / (in_h * ic);
        double* dxrow = dx.v.data() + ((static_cast<size_t>(nb) * ic + i) * in_h + iy) * in_w;
        for (int ix = 0; ix < in_w; ++ix) {
            double acc = 0.0;
            for (int ky = 0; ky < k; ++ky) {
                int t = iy - ky;
                if (t < 0 || t % stride) continue;
                int oy = t / stride;
                if (oy >= dy.h) continue;
                for (int kx = 0; kx < k; ++kx) {
                    int s = ix - kx;
                    if (s < 0 || s % stride) continue;
                    int ox = s / stride;
                    if (ox >= dy.w) continue;
                    for (int o = 0; o < oc; ++o)
                        acc += dy.at(nb, o, oy, ox) * w.at(o, i, ky, kx);
                }
            }
            dxrow[ix] = acc;
        }
    }
    return dx;
}

void conv2d_valid_backward_params(const Tensor& dy, const Tensor& xp, int stride,
                                  int ksize, Tensor& gw, Tensor& gb) {
    const int oc = dy.c, ic = xp.c, k = ksize;

#pragma omp parallel for schedule(static)
    for (int o = 0; o < oc; ++o) {
        double bacc = 0.0;
        for (int nb = 0; nb < dy.n; ++nb) {
            const double* dyp = dy.plane(nb, o);
            for (int t = 0; t < dy.h * dy.w; ++t) bacc += dyp[t];
        }
        gb.v[o] += bacc;

        for (int i = 0; i < ic; ++i) {
            double* gwk = gw.v.data() + (static_cast<size_t>(o) * ic + i) * k * k;
            for (int ky = 0; ky < k; ++ky) {
                for (int kx = 0; kx < k; ++kx) {
                    double acc = 0.0;
                    for (int nb = 0; nb < dy.n; ++nb) {
                        const double* dyp = dy.plane(nb, o);
                        const double* xpl = xp.plane(nb, i);
                        for (int oy = 0; oy < dy.h; ++oy) {
                            const double* xrow = xpl + static_cast<size_t>(oy * stride + ky) * xp.w + kx;
                            const double* dyrow = dyp + static_cast<size_t>(oy) * dy.w;
                            for (int ox = 0; ox < dy.w; ++ox)
                                acc += dyrow[ox] * xrow[ox * stride];
                        }
                    }
                    gwk[static_cast<size_t>(ky) * k + kx] += acc;
                }
            }
        }
    }
}

Tensor maxpool2(const Tensor& x, std::vector<uint8_t>& argmax) {
    const int oh = x.h / 2, ow = x.w / 2;
    Tensor y(x.n, x.c, oh, ow);
    argmax.assign(y.size(), 0);
    const int planes = x.n * x.c;
#pragma omp parallel for schedule(static)
    for (int p = 0; p < planes; ++p) {
        const double* xp = x.v.data() + static_cast<size_t>(p) * x.h * x.w;
        double* yp = y.v.data() + static_cast<size_t>(p) * oh * ow;
        uint8_t* ap = argmax.data() + static_cast<size_t>(p) * oh * ow;
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                const double* base = xp + static_cast<size_t>(2 * oy) * x.w + 2 * ox;
                double vals[4] = {base[0], base[1], base[x.w], base[x.w + 1]};
                int best = 0;
                for (int t = 1; t < 4; ++t)
                    if (vals[t] > vals[best]) best = t;
                yp[static_cast<size_t>(oy) * ow + ox] = vals[best];
                ap[static_cast<size_t>(oy) * ow + ox] = static_cast<uint8_t>(best);
            }
        }
    }
    return y;
}

Tensor maxpool2_backward(const Tensor& dy, const std::vector<uint8_t>& argmax,
                         int in_h, int in_w) {
    Tensor dx(dy.n, dy.c, in_h, in_w);
    const int planes = dy.n * dy.c;
#pragma omp parallel for schedule(static)
    for (int p = 0; p < planes; ++p) {
        const double* dyp = dy.v.data() + static_cast<size_t>(p) * dy.h * dy.w;
        const uint8_t* ap = argmax.data() + static_cast<size_t>(p) * dy.h * dy.w;
        double* dxp = dx.v.data() + static_cast<size_t>(p) * in_h * in_w;
        for (int oy = 0; oy < dy.h; ++oy) {
            for (int ox = 0; ox < dy.w; ++ox) {
                int a = ap[static_cast<size_t>(oy) * dy.w + ox];
                int iy = 2 * oy + (a >> 1), ix = 2 * ox + (a & 1);
                dxp[static_cast<size_t>(iy) * in_w + ix] +=
                    dyp[static_cast<size_t>(oy) * dy.w + ox];
            }
        }
    }
    return dx;
}

namespace {

// half-pixel-center source coordinate for 2x upsampling
inline void up2_coords(int o, int in_dim, int& lo, int& hi, double& f) {
    double s = (o + 0.5) / 2.0 - 0.5;
    if (s < 0) s = 0;
    if (s > in_dim - 1) s = in_dim - 1;
    lo = static_cast<int>(s);
    hi = std::min(lo + 1, in_dim - 1);
    f = s - lo;
}

}  // namespace

Tensor bilinear_up2(const Tensor& x) {
    Tensor y(x.n, x.c, x.h * 2, x.w * 2);
    const int planes = x.n * x.c;
#pragma omp parallel for schedule(static)
    for (int p = 0; p < planes; ++p) {
        const double* xp = x.v.data() + static_cast<size_t>(p) * x.h * x.w;
        double* yp = y.v.data() + static_cast<size_t>(p) * y.h * y.w;
        for (int oy = 0; oy < y.h; ++oy) {
            int y0, y1;
            double fy;
            up2_coords(oy, x.h, y0, y1, fy);
            for (int ox = 0; ox < y.w; ++ox) {
                int x0, x1;
                double fx;
                up2_coords(ox, x.w, x0, x1, fx);
                double v = (1 - fy) * ((1 - fx) * xp[static_cast<size_t>(y0) * x.w + x0] +
                                       fx * xp[static_cast<size_t>(y0) * x.w + x1]) +
                           fy * ((1 - fx) * xp[static_cast<size_t>(y1) * x.w + x0] +
                                 fx * xp[static_cast<size_t>(y1) * x.w + x1]);
                yp[static_cast<size_t>(oy) * y.w + ox] = v;
            }
        }
    }
    return y;
}

Tensor bilinear_up2_backward(const Tensor& dy) {
    const int in_h = dy.h / 2, in_w = dy.w / 2;
    Tensor dx(dy.n, dy.c, in_h, in_w);
    const int planes = dy.n * dy.c;
#pragma omp parallel for schedule(static)
    for (int p = 0; p < planes; ++p) {
        const double* dyp = dy.v.data() + static_cast<size_t>(p) * dy.h * dy.w;
        double* dxp = dx.v.data() + static_cast<size_t>(p) * in_h * in_w;
        // gather form: each input pixel collects from the outputs that read it
        for (int iy = 0; iy < in_h; ++iy) {
            for (int ix = 0; ix < in_w; ++ix) {
                double acc = 0.0;
                for (int oy = std::max(0, 2 * iy - 2); oy < std::min(dy.h, 2 * iy + 4); ++oy) {
                    int y0, y1;
                    double fy;
                    up2_coords(oy, in_h, y0, y1, fy);
                    double wy = (y0 == iy ? (1 - fy) : 0.0) + (y1 == iy ? fy : 0.0);
                    if (wy == 0.0) continue;
                    for (int ox = std::max(0, 2 * ix - 2); ox < std::min(dy.w, 2 * ix + 4); ++ox) {
                        int x0, x1;
                        double fx;
                        up2_coords(ox, in_w, x0, x1, fx);
                        double wx = (x0 == ix ? (1 - fx) : 0.0) + (x1 == ix ? fx : 0.0);
                        if (wx == 0.0) continue;
                        acc += wy * wx * dyp[static_cast<size_t>(oy) * dy.w + ox];
                    }
                }
                dxp[static_cast<size_t>(iy) * in_w + ix] = acc;
            }
        }
    }
    return dx;
}

namespace {

BinaryMask morph(const BinaryMask& m, int ksize, bool erode_op) {
    if (ksize < 1 || ksize % 2 == 0)
        throw std::invalid_argument("morphology: kernel must be odd and >= 1");
    if (ksize == 1) return m;
    const int r = ksize / 2;
    BinaryMask out(m.height(), m.width());
    const int h = m.height(), w = m.width();
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            bool acc = erode_op;
            for (int dy = -r; dy <= r && (acc == erode_op); ++dy) {
                for (int dx = -r; dx <= r; ++dx) {
                    int yy = y + dy, xx = x + dx;
                    // outside the image counts as background
                    bool v = yy >= 0 && yy < h && xx >= 0 && xx < w && m.at(yy, xx);
                    if (erode_op) {
                        if (!v) {
                            acc = false;
                            break;
                        }
                    } else {
                        if (v) {
                            acc = true;
                            break;
                        }
                    }
                }
            }
            out.set(y, x, acc);
        }
    }
    return out;
}

}  // namespace

BinaryMask erode(const BinaryMask& m, int ksize) { return morph(m, ksize, true); }
BinaryMask dilate(const BinaryMask& m, int ksize) { return morph(m, ksize, false); }

}  // namespace liquidseg::kernels
