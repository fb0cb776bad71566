#include "liquidseg/bg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "liquidseg/png_io.hpp"

namespace fs = std::filesystem;

namespace liquidseg::bg {
namespace {

constexpr double kLogTwoPi = 1.8378770664093453;

double log_gauss_diag(const double x[3], const GaussComponent& g) {
    double acc = 0.0;
    for (int c = 0; c < 3; ++c) {
        double d = x[c] - g.mean[c];
        acc += -0.5 * (kLogTwoPi + std::log(g.var[c]) + d * d / g.var[c]);
    }
    return acc;
}

// EM for one pixel's samples with a fixed component count. Initialization is
// deterministic: samples sorted by luminance, split into k contiguous groups.
struct PixelFit {
    std::vector<GaussComponent> comps;
    double loglik = 0.0;
};

PixelFit fit_k(const std::vector<std::array<double, 3>>& samples, int k) {
    const int n = static_cast<int>(samples.size());
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> luma(n);
    for (int i = 0; i < n; ++i)
        luma[i] = 0.299 * samples[i][0] + 0.587 * samples[i][1] + 0.114 * samples[i][2];
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return luma[a] < luma[b]; });

    PixelFit fit;
    fit.comps.resize(k);
    for (int c = 0; c < k; ++c) {
        int lo = c * n / k, hi = (c + 1) * n / k;
        if (hi <= lo) hi = lo + 1;
        GaussComponent& g = fit.comps[c];
        g.weight = static_cast<double>(hi - lo) / n;
        for (int ch = 0; ch < 3; ++ch) g.mean[ch] = 0.0;
        for (int i = lo; i < hi; ++i)
            for (int ch = 0; ch < 3; ++ch) g.mean[ch] += samples[order[i]][ch];
        for (int ch = 0; ch < 3; ++ch) g.mean[ch] /= (hi - lo);
        for (int ch = 0; ch < 3; ++ch) {
            double v = 0.0;
            for (int i = lo; i < hi; ++i) {
                double d = samples[order[i]][ch] - g.mean[ch];
                v += d * d;
            }
            g.var[ch] = std::max(kVarFloor, v / (hi - lo));
        }
    }

    std::vector<double> resp(static_cast<size_t>(n) * k);
    double prev_ll = -1e300;
    for (int iter = 0; iter < 100; ++iter) {
        // E step
        double ll = 0.0;
        for (int i = 0; i < n; ++i) {
            double mx = -1e300;
            std::array<double, 3> x = samples[i];
            std::vector<double> lp(k);
            for (int c = 0; c < k; ++c) {
                lp[c] = std::log(std::max(fit.comps[c].weight, 1e-12)) +
                        log_gauss_diag(x.data(), fit.comps[c]);
                mx = std::max(mx, lp[c]);
            }
            double sum = 0.0;
            for (int c = 0; c < k; ++c) sum += std::exp(lp[c] - mx);
            ll += mx + std::log(sum);
            for (int c = 0; c < k; ++c)
                resp[static_cast<size_t>(i) * k + c] = std::exp(lp[c] - mx) / sum;
        }
        // M step
        for (int c = 0; c < k; ++c) {
            GaussComponent& g = fit.comps[c];
            double w = 0.0;
            double mean[3] = {0, 0, 0};
            for (int i = 0; i < n; ++i) {
                double r = resp[static_cast<size_t>(i) * k + c];
                w += r;
                for (int ch = 0; ch < 3; ++ch) mean[ch] += r * samples[i][ch];
            }
            if (w < 1e-9) {
                g.weight = 0.0;
                continue;
            }
            for (int ch = 0; ch < 3; ++ch) g.mean[ch] = mean[ch] / w;
            for (int ch = 0; ch < 3; ++ch) {
                double v = 0.0;
                for (int i = 0; i < n; ++i) {
                    double r = resp[static_cast<size_t>(i) * k + c];
                    double d = samples[i][ch] - g.mean[ch];
                    v += r * d * d;
                }
                g.var[ch] = std::max(kVarFloor, v / w);
            }
            g.weight = w / n;
        }
        if (ll - prev_ll < 1e-9 * std::abs(ll) + 1e-12) {
            fit.loglik = ll;
            break;
        }
        prev_ll = ll;
        fit.loglik = ll;
    }

    // renormalize weights (guards the degenerate-component branch)
    double wsum = 0.0;
    for (const auto& g : fit.comps) wsum += g.weight;
    if (wsum > 0)
        for (auto& g : fit.comps) g.weight /= wsum;
    return fit;
}

std::vector<GaussComponent> fit_pixel(const std::vector<std::array<double, 3>>& samples,
                                      int max_k) {
    const int n = static_cast<int>(samples.size());
    double best_bic = 1e300;
    std::vector<GaussComponent> best;
    for (int k = 1; k <= std::min(max_k, n); ++k) {
        PixelFit fit = fit_k(samples, k);
        int params = k * 6 + (k - 1);
        double bic = -2.0 * fit.loglik + params * std::log(static_cast<double>(n));
        if (bic < best_bic - 1e-12) {
            best_bic = bic;
            best = fit.comps;
        }
    }
    // drop numerically dead components
    best.erase(std::remove_if(best.begin(), best.end(),
                              [](const GaussComponent& g) { return g.weight < 1e-9; }),
               best.end());
    double wsum = 0.0;
    for (const auto& g : best) wsum += g.weight;
    for (auto& g : best) g.weight /= wsum;
    return best;
}

}  // namespace

BackgroundModel fit_background_model(const std::vector<Image>& frames,
                                     int max_components, uint64_t seed) {
    if (frames.size() < 2)
        throw std::invalid_argument("fit_background_model: need at least 2 frames");
    for (const auto& f : frames)
        if (!f.same_size(frames[0]))
            throw std::invalid_argument("fit_background_model: frame dimension mismatch");
    if (max_components < 1)
        throw std::invalid_argument("fit_background_model: max_components must be >= 1");

    BackgroundModel model;
    model.height = frames[0].height();
    model.width = frames[0].width();
    model.max_components = max_components;
    model.frame_count = static_cast<int>(frames.size());
    model.seed = seed;
    model.pixels.resize(static_cast<size_t>(model.height) * model.width);

    const int n_px = model.height * model.width;
#pragma omp parallel for schedule(static)
    for (int p = 0; p < n_px; ++p) {
        int y = p / model.width, x = p % model.width;
        std::vector<std::array<double, 3>> samples(frames.size());
        for (size_t f = 0; f < frames.size(); ++f)
            for (int c = 0; c < 3; ++c) samples[f][c] = frames[f].at(y, x, c);
        model.pixels[p] = fit_pixel(samples, max_components);
    }
    return model;
}

BinaryMask subtract(const BackgroundModel& model, const Image& img, double threshold_sigma) {
    if (img.height() != model.height || img.width() != model.width)
        throw std::invalid_argument("subtract: dimension mismatch");

    BinaryMask mask(model.height, model.width);
    const int n_px = model.height * model.width;
#pragma omp parallel for schedule(static)
    for (int p = 0; p < n_px; ++p) {
        int y = p / model.width, x = p % model.width;
        bool fg = true;
        for (const auto& g : model.pixels[p]) {
            if (g.weight < kWeightCutoff) continue;
            double d2 = 0.0;
            for (int c = 0; c < 3; ++c) {
                double d = img.at(y, x, c) - g.mean[c];
                d2 += d * d / g.var[c];
            }
            if (std::sqrt(d2) <= threshold_sigma) {
                fg = false;
                break;
            }
        }
        mask.data()[p] = fg ? 1 : 0;
    }
    return mask;
}

DatasetManifest pseudo_label_dataset(const DatasetManifest& colored,
                                     const std::vector<Image>& empty_frames,
                                     double threshold_sigma, const std::string& out_dir) {
    if (colored.domain_tag != DomainTag::colored)
        throw std::invalid_argument("pseudo_label_dataset: expected a colored dataset");

    BackgroundModel model = fit_background_model(empty_frames, 3, colored.pipeline_seed);

    fs::create_directories(fs::path(out_dir) / "masks");
    DatasetManifest out = colored;
    out.base_dir = out_dir;
    for (auto& rec : out.records) {
        Image img = load_png(colored.resolve(rec.image_path));
        BinaryMask mask = subtract(model, img, threshold_sigma);
        std::string rel = "masks/" + rec.image_id + ".png";
        save_mask_png(out.resolve(rel), mask);
        rec.mask_path = rel;
        rec.image_path =
            fs::relative(fs::path(colored.base_dir) / rec.image_path, out_dir).string();
    }
    save_manifest(out, (fs::path(out_dir) / "manifest.json").string());
    return out;
}

void save_background_model(const BackgroundModel& model, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("bg: cannot write " + path);
    const char magic[8] = {'L', 'S', 'B', 'G', 'M', 'D', 'L', '1'};
    f.write(magic, 8);
    auto w32 = [&](int32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); };
    auto w64 = [&](uint64_t v) { f.write(reinterpret_cast<const char*>(&v), 8); };
    w32(model.height);
    w32(model.width);
    w32(model.max_components);
    w32(model.frame_count);
    w64(model.seed);
    for (const auto& px : model.pixels) {
        w32(static_cast<int32_t>(px.size()));
        for (const auto& g : px) {
            f.write(reinterpret_cast<const char*>(g.mean), sizeof(g.mean));
            f.write(reinterpret_cast<const char*>(g.var), sizeof(g.var));
            f.write(reinterpret_cast<const char*>(&g.weight), sizeof(g.weight));
        }
    }
}

BackgroundModel load_background_model(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("bg: cannot open " + path);
    char magic[8];
    f.read(magic, 8);
    if (std::memcmp(magic, "LSBGMDL1", 8) != 0)
        throw std::runtime_error("bg: bad model file " + path);
    BackgroundModel model;
    auto r32 = [&]() { int32_t v; f.read(reinterpret_cast<char*>(&v), 4); return v; };
    model.height = r32();
    model.width = r32();
    model.max_components = r32();
    model.frame_count = r32();
    f.read(reinterpret_cast<char*>(&model.seed), 8);
    model.pixels.resize(static_cast<size_t>(model.height) * model.width);
    for (auto& px : model.pixels) {
        int k = r32();
        px.resize(k);
        for (auto& g : px) {
            f.read(reinterpret_cast<char*>(g.mean), sizeof(g.mean));
            f.read(reinterpret_cast<char*>(g.var), sizeof(g.var));
            f.read(reinterpret_cast<char*>(&g.weight), sizeof(g.weight));
        }
    }
    if (!f) throw std::runtime_error("bg: truncated model file " + path);
    return model;
}

}  // namespace liquidseg::bg
