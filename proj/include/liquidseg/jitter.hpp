#pragma once

#include <cstdint>

#include "liquidseg/image.hpp"

namespace liquidseg {

// Factor/shift interval sampled uniformly. A degenerate interval (lo == hi)
// pins the value; the identity jitter is brightness/contrast (1,1), hue (0,0).
struct JitterRange {
    double lo = 1.0;
    double hi = 1.0;
};

struct JitterConfig {
    JitterRange brightness{1.0, 1.0};  // multiplicative factor, > 0
    JitterRange contrast{1.0, 1.0};    // multiplicative factor about the mean, > 0
    JitterRange hue{0.0, 0.0};         // additive shift, fraction of the hue circle
};

// Randomized photometric transform, deterministic under seed. Applies
// brightness, then contrast (about the mean gray level), then hue rotation;
// output clamped to [0,1].
Image color_jitter(const Image& img, const JitterConfig& cfg, uint64_t seed);

}  // namespace liquidseg
