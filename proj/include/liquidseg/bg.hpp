#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "liquidseg/image.hpp"
#include "liquidseg/manifest.hpp"

namespace liquidseg::bg {

struct GaussComponent {
    double mean[3] = {0, 0, 0};
    double var[3] = {1e-4, 1e-4, 1e-4};  // diagonal, floored at kVarFloor
    double weight = 1.0;
};

constexpr double kVarFloor = 1e-4;
constexpr double kWeightCutoff = 0.05;  // lighter components model transient noise

// Per-pixel Gaussian mixture fit on empty-scene frames.
struct BackgroundModel {
    int height = 0;
    int width = 0;
    int max_components = 3;
    int frame_count = 0;
    uint64_t seed = 0;
    std::vector<std::vector<GaussComponent>> pixels;  // row-major, 1..K comps each

    const std::vector<GaussComponent>& at(int y, int x) const {
        return pixels[static_cast<size_t>(y) * width + x];
    }
};

// Batch EM per pixel; the component count (1..max_components) is chosen by
// the Bayesian information criterion. Deterministic: initialization is
// quantile-based, so the seed only tags the fit metadata.
BackgroundModel fit_background_model(const std::vector<Image>& frames,
                                     int max_components = 3, uint64_t seed = 0);

// Foreground iff the per-channel Mahalanobis distance exceeds threshold_sigma
// for every component of weight >= kWeightCutoff.
BinaryMask subtract(const BackgroundModel& model, const Image& img,
                    double threshold_sigma = 4.0);

// Fits one model on the empty frames, subtracts every image of the colored
// dataset, writes mask PNGs under out_dir/masks/, and returns a manifest
// (record order preserved) whose records carry the pseudo-label mask paths;
// image paths keep pointing at the colored dataset.
DatasetManifest pseudo_label_dataset(const DatasetManifest& colored,
                                     const std::vector<Image>& empty_frames,
                                     double threshold_sigma, const std::string& out_dir);

// Versioned binary checkpoint for a fitted model.
void save_background_model(const BackgroundModel& model, const std::string& path);
BackgroundModel load_background_model(const std::string& path);

}  // namespace liquidseg::bg
