#include "liquidseg/segmentation.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "liquidseg/checkpoint.hpp"
#include "liquidseg/losses.hpp"
#include "liquidseg/optim.hpp"
#include "liquidseg/png_io.hpp"
#include "liquidseg/translation.hpp"

using nlohmann::json;

namespace liquidseg::seg {

std::string SegTrainConfig::to_json() const {
    json j;
    j["lr"] = lr;
    j["momentum"] = momentum;
    j["weight_decay"] = weight_decay;
    j["batch_size"] = batch_size;
    j["epochs"] = epochs;
    j["seed"] = seed;
    j["threshold"] = threshold;
    j["width"] = width;
    return j.dump();
}

SegTrainConfig SegTrainConfig::from_json(const std::string& s) {
    json j = json::parse(s);
    SegTrainConfig c;
    c.lr = j.value("lr", c.lr);
    c.momentum = j.value("momentum", c.momentum);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.seed = j.value("seed", c.seed);
    c.threshold = j.value("threshold", c.threshold);
    c.width = j.value("width", c.width);
    return c;
}

void SegTrainConfig::validate() const {
    if (lr <= 0) throw std::invalid_argument("seg config: lr must be positive");
    if (momentum < 0) throw std::invalid_argument("seg config: momentum must be >= 0");
    if (weight_decay < 0) throw std::invalid_argument("seg config: weight_decay must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("seg config: batch_size must be >= 1");
    if (epochs < 1) throw std::invalid_argument("seg config: epochs must be >= 1");
    if (width < 1) throw std::invalid_argument("seg config: width must be >= 1");
}

SegmentationModel::SegmentationModel(const SegTrainConfig& cfg_)
    : cfg(cfg_), net(cfg_.width, cfg_.seed) {
    cfg.validate();
}

nn::Tensor forward_probabilities(SegmentationModel& model, const Image& img) {
    nn::UNet::Cache cache;
    nn::Tensor logits = model.net.forward(translation::image_to_tensor(img), cache, false);
    nn::Tensor probs(logits.n, logits.c, logits.h, logits.w);
    for (size_t i = 0; i < logits.v.size(); ++i)
        probs.v[i] = 1.0 / (1.0 + std::exp(-logits.v[i]));
    return probs;
}

BinaryMask predict_mask(SegmentationModel& model, const Image& img, double threshold) {
    nn::Tensor probs = forward_probabilities(model, img);
    BinaryMask mask(probs.h, probs.w);
    for (int y = 0; y < probs.h; ++y)
        for (int x = 0; x < probs.w; ++x) mask.set(y, x, probs.at(0, 0, y, x) > threshold);
    return mask;
}

namespace {

nn::Tensor mask_to_target(const BinaryMask& mask) {
    nn::Tensor t(1, 1, mask.height(), mask.width());
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x) t.at(0, 0, y, x) = mask.at(y, x) ? 1.0 : 0.0;
    return t;
}

nn::Tensor stack_batch(const std::vector<nn::Tensor>& items) {
    nn::Tensor out(static_cast<int>(items.size()), items[0].c, items[0].h, items[0].w);
    size_t per = items[0].size();
    for (size_t i = 0; i < items.size(); ++i)
        std::copy(items[i].v.begin(), items[i].v.end(), out.v.begin() + i * per);
    return out;
}

}  // namespace

SegmentationModel train_segmentation(const DatasetManifest& dataset,
                                     const SegTrainConfig& cfg, std::vector<EpochLog>* log,
                                     const TrainAugment& augment,
                                     const SegProgress& progress) {
    cfg.validate();
    if (dataset.records.empty())
        throw std::invalid_argument("train_segmentation: empty dataset");
    for (const auto& r : dataset.records)
        if (!r.mask_path)
            throw std::invalid_argument("train_segmentation: record " + r.image_id +
                                        " has no mask");

    std::vector<Image> images;
    std::vector<nn::Tensor> targets;
    images.reserve(dataset.records.size());
    for (const auto& r : dataset.records) {
        images.push_back(load_png(dataset.resolve(r.image_path)));
        BinaryMask mask = load_mask_png(dataset.resolve(*r.mask_path));
        if (mask.height() != images.back().height() || mask.width() != images.back().width())
            throw std::invalid_argument("train_segmentation: image/mask size mismatch for " +
                                        r.image_id);
        targets.push_back(mask_to_target(mask));
    }

    SegmentationModel model(cfg);
    auto params = model.net.params();
    nn::SgdMomentum opt{cfg.lr, cfg.momentum, cfg.weight_decay};

    const int n = static_cast<int>(images.size());
    int step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<int> order(n);
        for (int i = 0; i < n; ++i) order[i] = i;
        Rng shuffle_rng(derive_seed(cfg.seed, 70000 + static_cast<uint64_t>(epoch)));
        shuffle_rng.shuffle(order);

        double epoch_loss = 0.0;
        int batches = 0;
        for (int start = 0; start < n; start += cfg.batch_size, ++step) {
            int stop = std::min(n, start + cfg.batch_size);
            std::vector<nn::Tensor> xb, tb;
            for (int i = start; i < stop; ++i) {
                const Image& src = images[order[i]];
                if (augment.enabled) {
                    uint64_t jseed = derive_seed(cfg.seed, 80000 + static_cast<uint64_t>(step) * 64 +
                                                               static_cast<uint64_t>(i - start));
                    xb.push_back(translation::image_to_tensor(
                        color_jitter(src, augment.jitter, jseed)));
                } else {
                    xb.push_back(translation::image_to_tensor(src));
                }
                tb.push_back(targets[order[i]]);
            }
            nn::Tensor x = stack_batch(xb);
            nn::Tensor t = stack_batch(tb);

            nn::zero_grads(params);
            nn::UNet::Cache cache;
            nn::Tensor logits = model.net.forward(x, cache, true);
            double loss = nn::bce_with_logits(logits, t);
            model.net.backward(nn::bce_with_logits_grad(logits, t), cache);
            opt.step(params);
            model.net.update_running(cache);

            epoch_loss += loss;
            ++batches;
        }
        if (log) log->push_back({epoch, epoch_loss / std::max(1, batches)});
        if (progress) progress(epoch, cfg.epochs, epoch_loss / std::max(1, batches));
    }
    return model;
}

void save_segmentation(SegmentationModel& model, const std::string& path) {
    auto state = model.net.state();  // params plus batch-norm running stats
    save_checkpoint(path, model.cfg.to_json(), state);
}

SegmentationModel load_segmentation(const std::string& path) {
    SegTrainConfig cfg = SegTrainConfig::from_json(read_checkpoint_config(path));
    SegmentationModel model(cfg);
    auto state = model.net.state();
    load_checkpoint(path, state);
    return model;
}

void write_epoch_log(const std::vector<EpochLog>& log, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("segmentation: cannot write log " + path);
    for (const auto& e : log) {
        json j;
        j["epoch"] = e.epoch;
        j["loss"] = e.loss;
        f << j.dump() << "\n";
    }
}

}  // namespace liquidseg::seg
