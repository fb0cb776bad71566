#pragma once

#include <functional>
#include <string>
#include <vector>

#include "liquidseg/jitter.hpp"
#include "liquidseg/manifest.hpp"
#include "liquidseg/unet.hpp"

namespace liquidseg::seg {

struct SegTrainConfig {
    double lr = 1e-3;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    int batch_size = 2;
    int epochs = 50;
    uint64_t seed = 1;
    double threshold = 0.5;
    int width = 8;  // desk scale; the full-scale model uses 64

    std::string to_json() const;
    static SegTrainConfig from_json(const std::string& s);
    void validate() const;
};

struct SegmentationModel {
    SegTrainConfig cfg;
    nn::UNet net;

    explicit SegmentationModel(const SegTrainConfig& cfg);
};

struct EpochLog {
    int epoch = 0;
    double loss = 0.0;
};

// per-pixel liquid probability in [0,1], eval-mode statistics
nn::Tensor forward_probabilities(SegmentationModel& model, const Image& img);

BinaryMask predict_mask(SegmentationModel& model, const Image& img, double threshold = 0.5);

// Optional photometric augmentation applied to training inputs (used by the
// color-jitter ablation; the default pipeline trains without augmentation).
struct TrainAugment {
    bool enabled = false;
    JitterConfig jitter;
};

using SegProgress = std::function<void(int epoch, int total, double loss)>;

// SGD with momentum and weight decay on binary cross entropy; seeded
// shuffling; every record must carry a mask.
SegmentationModel train_segmentation(const DatasetManifest& dataset,
                                     const SegTrainConfig& cfg,
                                     std::vector<EpochLog>* log = nullptr,
                                     const TrainAugment& augment = {},
                                     const SegProgress& progress = {});

void save_segmentation(SegmentationModel& model, const std::string& path);
SegmentationModel load_segmentation(const std::string& path);

void write_epoch_log(const std::vector<EpochLog>& log, const std::string& path);

}  // namespace liquidseg::seg
