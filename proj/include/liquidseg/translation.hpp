#pragma once

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "liquidseg/generator.hpp"
#include "liquidseg/losses.hpp"
#include "liquidseg/manifest.hpp"

namespace liquidseg::translation {

struct TranslationConfig {
    double lambda_x = 1.0;
    double lambda_y = 1.0;
    double tau = 0.07;
    int num_patches = 64;
    double lr_g = 2e-4;
    double lr_d = 2e-4;
    double lr_h = 2e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    int epochs = 30;
    uint64_t seed = 1;
    int gen_width = 8;       // desk scale; full-scale CUT depth is width 64
    int n_res_blocks = 4;
    int disc_width = 16;
    int embed_dim = 64;
    nn::GanMode gan_mode = nn::GanMode::logistic;

    std::string to_json() const;
    static TranslationConfig from_json(const std::string& s);
    void validate() const;
};

struct TranslationModel {
    TranslationConfig cfg;
    nn::ResnetGenerator g;
    nn::PatchDiscriminator d;
    nn::ProjectionHeads h;

    explicit TranslationModel(const TranslationConfig& cfg);
    std::vector<nn::ParamRef> all_params();
};

struct StepLog {
    int step = 0;
    double loss_d = 0.0;
    double loss_g = 0.0;  // adversarial generator term
    double nce_x = 0.0;
    double nce_y = 0.0;
};

nn::Tensor image_to_tensor(const Image& img);
Image tensor_to_image(const nn::Tensor& t);

// y_hat = G_dec(G_enc(x)), same dimensions, values in [0,1]
Image generate(const TranslationModel& model, const Image& x);

// Unit-norm contrastive embeddings of the encoder features at the given
// locations, one (P, embed_dim) matrix per tap layer. The same locations
// must be used for a source image and its translation.
std::array<nn::Tensor, 3> sample_patch_features(
    TranslationModel& model, const Image& img,
    const std::array<nn::PatchLocations, 3>& locations);

using EpochProgress = std::function<void(int epoch, int total, double loss_d, double loss_g)>;

// Alternating CUT training: a discriminator step, then a joint generator +
// projection-head step on loss_G + lambda_X * PatchNCE(x, G(x)) +
// lambda_Y * PatchNCE(y, G(y)). Deterministic under cfg.seed.
TranslationModel train_translation(const DatasetManifest& colored,
                                   const DatasetManifest& transparent,
                                   const TranslationConfig& cfg,
                                   std::vector<StepLog>* log = nullptr,
                                   const EpochProgress& progress = {});

// Writes G(x) for every record into out_dir and returns a manifest tagged
// synthetic_transparent whose records keep their pseudo-label masks
// (mask files are copied byte-identically).
DatasetManifest translate_dataset(const DatasetManifest& colored_with_masks,
                                  const TranslationModel& model,
                                  const std::string& out_dir);

void save_translation(TranslationModel& model, const std::string& path);
TranslationModel load_translation(const std::string& path);

void write_step_log(const std::vector<StepLog>& log, const std::string& path);

}  // namespace liquidseg::translation
