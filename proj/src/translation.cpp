#include "liquidseg/translation.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "liquidseg/checkpoint.hpp"
#include "liquidseg/optim.hpp"
#include "liquidseg/png_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace liquidseg::translation {

std::string TranslationConfig::to_json() const {
    json j;
    j["lambda_x"] = lambda_x;
    j["lambda_y"] = lambda_y;
    j["tau"] = tau;
    j["num_patches"] = num_patches;
    j["lr_g"] = lr_g;
    j["lr_d"] = lr_d;
    j["lr_h"] = lr_h;
    j["beta1"] = beta1;
    j["beta2"] = beta2;
    j["epochs"] = epochs;
    j["seed"] = seed;
    j["gen_width"] = gen_width;
    j["n_res_blocks"] = n_res_blocks;
    j["disc_width"] = disc_width;
    j["embed_dim"] = embed_dim;
    j["gan_mode"] = gan_mode == nn::GanMode::logistic ? "logistic" : "lsgan";
    return j.dump();
}

TranslationConfig TranslationConfig::from_json(const std::string& s) {
    json j = json::parse(s);
    TranslationConfig c;
    c.lambda_x = j.value("lambda_x", c.lambda_x);
    c.lambda_y = j.value("lambda_y", c.lambda_y);
    c.tau = j.value("tau", c.tau);
    c.num_patches = j.value("num_patches", c.num_patches);
    c.lr_g = j.value("lr_g", c.lr_g);
    c.lr_d = j.value("lr_d", c.lr_d);
    c.lr_h = j.value("lr_h", c.lr_h);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.epochs = j.value("epochs", c.epochs);
    c.seed = j.value("seed", c.seed);
    c.gen_width = j.value("gen_width", c.gen_width);
    c.n_res_blocks = j.value("n_res_blocks", c.n_res_blocks);
    c.disc_width = j.value("disc_width", c.disc_width);
    c.embed_dim = j.value("embed_dim", c.embed_dim);
    c.gan_mode = j.value("gan_mode", std::string("logistic")) == "lsgan"
                     ? nn::GanMode::lsgan
                     : nn::GanMode::logistic;
    return c;
}

void TranslationConfig::validate() const {
    if (lambda_x < 0 || lambda_y < 0)
        throw std::invalid_argument("translation config: lambda weights must be >= 0");
    if (tau <= 0) throw std::invalid_argument("translation config: tau must be > 0");
    if (num_patches < 2)
        throw std::invalid_argument("translation config: num_patches must be >= 2");
    if (epochs < 1) throw std::invalid_argument("translation config: epochs must be >= 1");
}

TranslationModel::TranslationModel(const TranslationConfig& cfg_)
    : cfg(cfg_),
      g(nn::GeneratorConfig{cfg_.gen_width, cfg_.n_res_blocks}, cfg_.seed),
      d(cfg_.disc_width, cfg_.seed),
      h(g.tap_channels(), cfg_.embed_dim, cfg_.seed) {
    cfg.validate();
}

std::vector<nn::ParamRef> TranslationModel::all_params() {
    std::vector<nn::ParamRef> out = g.params();
    for (auto& p : d.params()) out.push_back(p);
    for (auto& p : h.params()) out.push_back(p);
    return out;
}

nn::Tensor image_to_tensor(const Image& img) {
    nn::Tensor t(1, 3, img.height(), img.width());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            for (int c = 0; c < 3; ++c) t.at(0, c, y, x) = img.at(y, x, c);
    return t;
}

Image tensor_to_image(const nn::Tensor& t) {
    Image img(t.h, t.w);
    for (int y = 0; y < t.h; ++y)
        for (int x = 0; x < t.w; ++x)
            for (int c = 0; c < 3; ++c)
                img.at(y, x, c) = static_cast<float>(t.at(0, c, y, x));
    img.clamp01();
    return img;
}

Image generate(const TranslationModel& model, const Image& x) {
    nn::ResnetGenerator::FullCache cache;
    nn::Tensor out = model.g.forward(image_to_tensor(x), cache);
    return tensor_to_image(out);
}

std::array<nn::Tensor, 3> sample_patch_features(
    TranslationModel& model, const Image& img,
    const std::array<nn::PatchLocations, 3>& locations) {
    nn::ResnetGenerator::EncoderCache enc;
    model.g.encode(image_to_tensor(img), enc);
    const nn::Tensor* taps[3] = {&enc.tap0, &enc.tap1, &enc.tap2};
    std::array<nn::Tensor, 3> out;
    for (int l = 0; l < 3; ++l) {
        nn::ProjectionHeads::HeadCache hc;
        out[l] = model.h.forward(l, nn::gather_locations(*taps[l], locations[l]), hc);
    }
    return out;
}

namespace {

std::vector<Image> load_images(const DatasetManifest& m) {
    std::vector<Image> out;
    out.reserve(m.records.size());
    for (const auto& r : m.records) out.push_back(load_png(m.resolve(r.image_path)));
    return out;
}

std::array<nn::PatchLocations, 3> sample_locations(const nn::Tensor* taps[3],
                                                   int num_patches, Rng& rng) {
    std::array<nn::PatchLocations, 3> locs;
    for (int l = 0; l < 3; ++l) {
        int grid = taps[l]->h * taps[l]->w;
        int take = std::min(num_patches, grid);
        std::vector<int> flat = rng.sample_without_replacement(grid, take);
        for (int f : flat) {
            locs[l].ys.push_back(f / taps[l]->w);
            locs[l].xs.push_back(f % taps[l]->w);
        }
    }
    return locs;
}

// One side of the contrastive term: embeddings of taps at shared locations.
struct NcePass {
    std::array<nn::ProjectionHeads::HeadCache, 3> hc_q, hc_k;
    std::array<nn::Tensor, 3> q, k;
};

}  // namespace

TranslationModel train_translation(const DatasetManifest& colored,
                                   const DatasetManifest& transparent,
                                   const TranslationConfig& cfg,
                                   std::vector<StepLog>* log,
                                   const EpochProgress& progress) {
    if (colored.records.empty() || transparent.records.empty())
        throw std::invalid_argument("train_translation: empty manifest");
    cfg.validate();

    TranslationModel model(cfg);
    auto g_params = model.g.params();
    auto d_params = model.d.params();
    auto h_params = model.h.params();

    nn::Adam opt_g{cfg.lr_g, cfg.beta1, cfg.beta2};
    nn::Adam opt_d{cfg.lr_d, cfg.beta1, cfg.beta2};
    nn::Adam opt_h{cfg.lr_h, cfg.beta1, cfg.beta2};

    std::vector<Image> xs = load_images(colored);
    std::vector<Image> ys = load_images(transparent);

    int step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<int> xi(xs.size()), yi(ys.size());
        for (size_t i = 0; i < xi.size(); ++i) xi[i] = static_cast<int>(i);
        for (size_t i = 0; i < yi.size(); ++i) yi[i] = static_cast<int>(i);
        Rng shuffle_rng(derive_seed(cfg.seed, 60000 + static_cast<uint64_t>(epoch)));
        shuffle_rng.shuffle(xi);
        shuffle_rng.shuffle(yi);

        double epoch_loss_d = 0.0, epoch_loss_g = 0.0;
        for (size_t it = 0; it < xi.size(); ++it, ++step) {
            const Image& x_img = xs[xi[it]];
            const Image& y_img = ys[yi[it % yi.size()]];
            nn::Tensor x = image_to_tensor(x_img);
            nn::Tensor y = image_to_tensor(y_img);

            // forward passes whose caches the generator step reuses
            nn::ResnetGenerator::FullCache gx_cache, gy_cache;
            nn::Tensor y_hat = model.g.forward(x, gx_cache);
            nn::Tensor idt = model.g.forward(y, gy_cache);

            // --- discriminator step (y_hat treated as a constant) ---
            nn::zero_grads(d_params);
            nn::PatchDiscriminator::Cache d_real_c, d_fake_c;
            nn::Tensor z_real = model.d.forward(y, d_real_c);
            nn::Tensor z_fake = model.d.forward(y_hat, d_fake_c);
            nn::GanLossValue gl = nn::gan_loss(z_real, z_fake, cfg.gan_mode);
            model.d.backward(nn::gan_loss_d_grad_real(z_real, cfg.gan_mode), d_real_c, true);
            model.d.backward(nn::gan_loss_d_grad_fake(z_fake, cfg.gan_mode), d_fake_c, true);
            opt_d.step(d_params);

            // --- generator + head step against the updated discriminator ---
            nn::zero_grads(g_params);
            nn::zero_grads(h_params);

            nn::PatchDiscriminator::Cache d_g_c;
            nn::Tensor z_fake2 = model.d.forward(y_hat, d_g_c);
            nn::GanLossValue gl2 = nn::gan_loss(z_real, z_fake2, cfg.gan_mode);
            nn::Tensor d_yhat =
                model.d.backward(nn::gan_loss_g_grad_fake(z_fake2, cfg.gan_mode), d_g_c, false);

            Rng loc_rng(derive_seed(cfg.seed, 500000 + static_cast<uint64_t>(step)));

            double nce_x_val = 0.0, nce_y_val = 0.0;

            // PatchNCE(X): keys from G_enc(x) taps, queries from G_enc(y_hat)
            nn::ResnetGenerator::EncoderCache q_enc;
            std::array<nn::Tensor, 3> d_taps_k;
            {
                model.g.encode(y_hat, q_enc);
                const nn::Tensor* k_taps[3] = {&gx_cache.enc.tap0, &gx_cache.enc.tap1,
                                               &gx_cache.enc.tap2};
                const nn::Tensor* q_taps[3] = {&q_enc.tap0, &q_enc.tap1, &q_enc.tap2};
                auto locs = sample_locations(k_taps, cfg.num_patches, loc_rng);

                std::array<nn::Tensor, 3> d_q_taps;
                for (int l = 0; l < 3; ++l) {
                    nn::ProjectionHeads::HeadCache hq, hk;
                    nn::Tensor fq = nn::gather_locations(*q_taps[l], locs[l]);
                    nn::Tensor fk = nn::gather_locations(*k_taps[l], locs[l]);
                    nn::Tensor q = model.h.forward(l, fq, hq);
                    nn::Tensor k = model.h.forward(l, fk, hk);
                    nn::NceResult nce = nn::patchnce_loss(q, k, cfg.tau);
                    nce_x_val += nce.loss;
                    for (double& v : nce.dq.v) v *= cfg.lambda_x;
                    for (double& v : nce.dk.v) v *= cfg.lambda_x;
                    nn::Tensor dfq = model.h.backward(l, nce.dq, hq);
                    nn::Tensor dfk = model.h.backward(l, nce.dk, hk);
                    d_q_taps[l] = nn::scatter_locations_backward(dfq, locs[l], q_taps[l]->c,
                                                                 q_taps[l]->h, q_taps[l]->w);
                    d_taps_k[l] = nn::scatter_locations_backward(dfk, locs[l], k_taps[l]->c,
                                                                 k_taps[l]->h, k_taps[l]->w);
                }
                nn::Tensor d_yhat_nce =
                    model.g.backward_encoder(q_enc, d_q_taps[0], d_q_taps[1], d_q_taps[2]);
                d_yhat += d_yhat_nce;
            }
            model.g.backward(d_yhat, gx_cache, &d_taps_k[0], &d_taps_k[1], &d_taps_k[2]);

            // PatchNCE(Y): identity term on the target domain
            {
                nn::ResnetGenerator::EncoderCache qy_enc;
                model.g.encode(idt, qy_enc);
                const nn::Tensor* k_taps[3] = {&gy_cache.enc.tap0, &gy_cache.enc.tap1,
                                               &gy_cache.enc.tap2};
                const nn::Tensor* q_taps[3] = {&qy_enc.tap0, &qy_enc.tap1, &qy_enc.tap2};
                auto locs = sample_locations(k_taps, cfg.num_patches, loc_rng);

                std::array<nn::Tensor, 3> d_q_taps, d_k_taps;
                for (int l = 0; l < 3; ++l) {
                    nn::ProjectionHeads::HeadCache hq, hk;
                    nn::Tensor fq = nn::gather_locations(*q_taps[l], locs[l]);
                    nn::Tensor fk = nn::gather_locations(*k_taps[l], locs[l]);
                    nn::Tensor q = model.h.forward(l, fq, hq);
                    nn::Tensor k = model.h.forward(l, fk, hk);
                    nn::NceResult nce = nn::patchnce_loss(q, k, cfg.tau);
                    nce_y_val += nce.loss;
                    for (double& v : nce.dq.v) v *= cfg.lambda_y;
                    for (double& v : nce.dk.v) v *= cfg.lambda_y;
                    nn::Tensor dfq = model.h.backward(l, nce.dq, hq);
                    nn::Tensor dfk = model.h.backward(l, nce.dk, hk);
                    d_q_taps[l] = nn::scatter_locations_backward(dfq, locs[l], q_taps[l]->c,
                                                                 q_taps[l]->h, q_taps[l]->w);
                    d_k_taps[l] = nn::scatter_locations_backward(dfk, locs[l], k_taps[l]->c,
                                                                 k_taps[l]->h, k_taps[l]->w);
                }
                nn::Tensor d_idt =
                    model.g.backward_encoder(qy_enc, d_q_taps[0], d_q_taps[1], d_q_taps[2]);
                model.g.backward(d_idt, gy_cache, &d_k_taps[0], &d_k_taps[1], &d_k_taps[2]);
            }

            opt_g.step(g_params);
            opt_h.step(h_params);

            epoch_loss_d += gl.loss_d;
            epoch_loss_g += gl2.loss_g;
            if (log) log->push_back({step, gl.loss_d, gl2.loss_g, nce_x_val, nce_y_val});
        }
        if (progress)
            progress(epoch, cfg.epochs, epoch_loss_d / xi.size(), epoch_loss_g / xi.size());
    }
    return model;
}

DatasetManifest translate_dataset(const DatasetManifest& colored_with_masks,
                                  const TranslationModel& model,
                                  const std::string& out_dir) {
    for (const auto& r : colored_with_masks.records)
        if (!r.mask_path)
            throw std::invalid_argument("translate_dataset: record " + r.image_id +
                                        " has no mask");

    fs::create_directories(fs::path(out_dir) / "images");
    fs::create_directories(fs::path(out_dir) / "masks");

    DatasetManifest out;
    out.domain_tag = DomainTag::synthetic_transparent;
    out.base_dir = out_dir;
    out.pipeline_seed = colored_with_masks.pipeline_seed;

    for (const auto& r : colored_with_masks.records) {
        Image x = load_png(colored_with_masks.resolve(r.image_path));
        Image y_hat = generate(model, x);
        std::string image_rel = "images/" + r.image_id + ".png";
        std::string mask_rel = "masks/" + r.image_id + ".png";
        save_png((fs::path(out_dir) / image_rel).string(), y_hat);
        fs::copy_file(colored_with_masks.resolve(*r.mask_path),
                      fs::path(out_dir) / mask_rel, fs::copy_options::overwrite_existing);

        ManifestRecord rec = r;
        rec.image_path = image_rel;
        rec.mask_path = mask_rel;
        out.records.push_back(std::move(rec));
    }
    save_manifest(out, (fs::path(out_dir) / "manifest.json").string());
    return out;
}

void save_translation(TranslationModel& model, const std::string& path) {
    auto params = model.all_params();
    save_checkpoint(path, model.cfg.to_json(), params);
}

TranslationModel load_translation(const std::string& path) {
    TranslationConfig cfg = TranslationConfig::from_json(read_checkpoint_config(path));
    TranslationModel model(cfg);
    auto params = model.all_params();
    load_checkpoint(path, params);
    return model;
}

void write_step_log(const std::vector<StepLog>& log, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("translation: cannot write log " + path);
    for (const auto& s : log) {
        json j;
        j["step"] = s.step;
        j["loss_D"] = s.loss_d;
        j["loss_G"] = s.loss_g;
        j["nce_x"] = s.nce_x;
        j["nce_y"] = s.nce_y;
        f << j.dump() << "\n";
    }
}

}  // namespace liquidseg::translation
