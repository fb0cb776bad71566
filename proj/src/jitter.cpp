#include "liquidseg/jitter.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "liquidseg/rng.hpp"

namespace liquidseg {
namespace {

void rgb_to_hsv(float r, float g, float b, float& h, float& s, float& v) {
    float mx = std::max({r, g, b});
    float mn = std::min({r, g, b});
    float d = mx - mn;
    v = mx;
    s = mx > 0 ? d / mx : 0.0f;
    if (d <= 0) {
        h = 0;
        return;
    }
    if (mx == r)
        h = (g - b) / d + (g < b ? 6.0f : 0.0f);
    else if (mx == g)
        h = (b - r) / d + 2.0f;
    else
        h = (r - g) / d + 4.0f;
    h /= 6.0f;
}

void hsv_to_rgb(float h, float s, float v, float& r, float& g, float& b) {
    h = h - std::floor(h);
    float hf = h * 6.0f;
    int i = static_cast<int>(hf) % 6;
    float f = hf - std::floor(hf);
    float p = v * (1 - s);
    float q = v * (1 - f * s);
    float t = v * (1 - (1 - f) * s);
    switch (i) {
        case 0: r = v; g = t; b = p; break;
        case 1: r = q; g = v; b = p; break;
        case 2: r = p; g = v; b = t; break;
        case 3: r = p; g = q; b = v; break;
        case 4: r = t; g = p; b = v; break;
        default: r = v; g = p; b = q; break;
    }
}

void validate_range(const JitterRange& r, bool factor, const char* name) {
    if (r.lo > r.hi) throw std::invalid_argument(std::string("color_jitter: empty range for ") + name);
    if (factor && r.lo <= 0.0)
        throw std::invalid_argument(std::string("color_jitter: factor must be > 0 for ") + name);
    if (!factor && (r.lo < -0.5 || r.hi > 0.5))
        throw std::invalid_argument("color_jitter: hue shift must lie in [-0.5, 0.5]");
}

}  // namespace

Image color_jitter(const Image& img, const JitterConfig& cfg, uint64_t seed) {
    validate_range(cfg.brightness, true, "brightness");
    validate_range(cfg.contrast, true, "contrast");
    validate_range(cfg.hue, false, "hue");

    Rng rng(derive_seed(seed, 0x6a177));
    float bf = static_cast<float>(rng.uniform(cfg.brightness.lo, cfg.brightness.hi));
    float cf = static_cast<float>(rng.uniform(cfg.contrast.lo, cfg.contrast.hi));
    float hs = static_cast<float>(rng.uniform(cfg.hue.lo, cfg.hue.hi));

    Image out = img;

    if (bf != 1.0f)
        for (float& v : out.data()) v *= bf;

    if (cf != 1.0f) {
        // contrast pivots on the mean gray level of the (brightness-adjusted) image
        double mean = 0.0;
        for (int y = 0; y < out.height(); ++y)
            for (int x = 0; x < out.width(); ++x)
                mean += 0.299 * out.at(y, x, 0) + 0.587 * out.at(y, x, 1) +
                        0.114 * out.at(y, x, 2);
        mean /= static_cast<double>(out.height()) * out.width();
        float m = static_cast<float>(mean);
        for (float& v : out.data()) v = (v - m) * cf + m;
    }

    if (hs != 0.0f) {
        for (int y = 0; y < out.height(); ++y) {
            for (int x = 0; x < out.width(); ++x) {
                float r = std::clamp(out.at(y, x, 0), 0.0f, 1.0f);
                float g = std::clamp(out.at(y, x, 1), 0.0f, 1.0f);
                float b = std::clamp(out.at(y, x, 2), 0.0f, 1.0f);
                float h, s, v;
                rgb_to_hsv(r, g, b, h, s, v);
                hsv_to_rgb(h + hs, s, v, r, g, b);
                out.at(y, x, 0) = r;
                out.at(y, x, 1) = g;
                out.at(y, x, 2) = b;
            }
        }
    }

    out.clamp01();
    return out;
}

}  // namespace liquidseg
