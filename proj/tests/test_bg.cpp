#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <vector>

#ifndef M_PI
#define M_PI 3.14159265358979323846
#endif

#include "liquidseg/bg.hpp"
#include "liquidseg/rng.hpp"
#include "liquidseg/synth.hpp"

using namespace liquidseg;
using namespace liquidseg::bg;

namespace {

// Independent scalar EM oracle for a 2-component 1-D mixture, run on the
// two-point sample to pin the expected means/weights before checking the
// production fit.
struct ScalarEmResult {
    double mean0, mean1, w0, w1;
};

ScalarEmResult scalar_em_two_components(const std::vector<double>& xs, double var_floor) {
    double m0 = *std::min_element(xs.begin(), xs.end());
    double m1 = *std::max_element(xs.begin(), xs.end());
    double v0 = var_floor, v1 = var_floor, w0 = 0.5, w1 = 0.5;
    auto gauss = [](double x, double m, double v) {
        return std::exp(-0.5 * (x - m) * (x - m) / v) / std::sqrt(2.0 * M_PI * v);
    };
    for (int iter = 0; iter < 200; ++iter) {
        double r0_sum = 0, r1_sum = 0, m0_acc = 0, m1_acc = 0;
        std::vector<double> r0(xs.size());
        for (size_t i = 0; i < xs.size(); ++i) {
            double p0 = w0 * gauss(xs[i], m0, v0);
            double p1 = w1 * gauss(xs[i], m1, v1);
            r0[i] = p0 / (p0 + p1);
            r0_sum += r0[i];
            r1_sum += 1.0 - r0[i];
            m0_acc += r0[i] * xs[i];
            m1_acc += (1.0 - r0[i]) * xs[i];
        }
        m0 = m0_acc / r0_sum;
        m1 = m1_acc / r1_sum;
        double v0_acc = 0, v1_acc = 0;
        for (size_t i = 0; i < xs.size(); ++i) {
            v0_acc += r0[i] * (xs[i] - m0) * (xs[i] - m0);
            v1_acc += (1.0 - r0[i]) * (xs[i] - m1) * (xs[i] - m1);
        }
        v0 = std::max(var_floor, v0_acc / r0_sum);
        v1 = std::max(var_floor, v1_acc / r1_sum);
        w0 = r0_sum / xs.size();
        w1 = r1_sum / xs.size();
    }
    return {m0, m1, w0, w1};
}

std::vector<Image> constant_frames(int n, float value) {
    std::vector<Image> frames;
    for (int i = 0; i < n; ++i) frames.emplace_back(8, 8, value);
    return frames;
}

}  // namespace

TEST_CASE("identical frames give one floor-variance component per pixel") {
    auto frames = constant_frames(10, 0.4f);
    BackgroundModel model = fit_background_model(frames, 3, 1);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            const auto& comps = model.at(y, x);
            REQUIRE(comps.size() == 1);
            for (int c = 0; c < 3; ++c) {
                CHECK(comps[0].mean[c] == doctest::Approx(0.4).epsilon(1e-6));
                CHECK(comps[0].var[c] == doctest::Approx(kVarFloor));
            }
            CHECK(comps[0].weight == doctest::Approx(1.0));
        }
}

TEST_CASE("alternating two-color pixel matches the scalar EM oracle") {
    // frames alternate between 0.2 and 0.8 everywhere
    std::vector<Image> frames;
    for (int i = 0; i < 10; ++i) frames.emplace_back(8, 8, i % 2 == 0 ? 0.2f : 0.8f);

    std::vector<double> sample;
    for (int i = 0; i < 10; ++i) sample.push_back(i % 2 == 0 ? 0.2 : 0.8);
    ScalarEmResult oracle = scalar_em_two_components(sample, kVarFloor);
    CHECK(oracle.mean0 == doctest::Approx(0.2).epsilon(1e-9));
    CHECK(oracle.mean1 == doctest::Approx(0.8).epsilon(1e-9));
    CHECK(oracle.w0 == doctest::Approx(0.5).epsilon(1e-9));

    BackgroundModel model = fit_background_model(frames, 3, 1);
    const auto& comps = model.at(3, 3);
    REQUIRE(comps.size() == 2);
    double lo = std::min(comps[0].mean[0], comps[1].mean[0]);
    double hi = std::max(comps[0].mean[0], comps[1].mean[0]);
    CHECK(lo == doctest::Approx(oracle.mean0).epsilon(1e-6));
    CHECK(hi == doctest::Approx(oracle.mean1).epsilon(1e-6));
    CHECK(comps[0].weight == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(comps[1].weight == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("fitting is deterministic and validates input") {
    std::vector<Image> frames;
    Rng rng(5);
    for (int i = 0; i < 6; ++i) {
        Image f(8, 8, 0.5f);
        for (float& v : f.data()) v += static_cast<float>(rng.normal(0.0, 0.01));
        frames.push_back(f);
    }
    BackgroundModel a = fit_background_model(frames, 3, 9);
    BackgroundModel b = fit_background_model(frames, 3, 9);
    for (int p = 0; p < 64; ++p) {
        REQUIRE(a.pixels[p].size() == b.pixels[p].size());
        for (size_t k = 0; k < a.pixels[p].size(); ++k) {
            CHECK(a.pixels[p][k].mean[0] == b.pixels[p][k].mean[0]);
            CHECK(a.pixels[p][k].weight == b.pixels[p][k].weight);
        }
    }

    CHECK_THROWS_AS(fit_background_model({frames[0]}, 3, 1), std::invalid_argument);
    std::vector<Image> mismatched = {Image(8, 8), Image(8, 9)};
    CHECK_THROWS_AS(fit_background_model(mismatched, 3, 1), std::invalid_argument);
}

TEST_CASE("weights per pixel sum to 1") {
    std::vector<Image> frames;
    Rng rng(11);
    for (int i = 0; i < 8; ++i) {
        Image f(8, 8);
        for (float& v : f.data()) v = static_cast<float>(rng.uniform());
        frames.push_back(f);
    }
    BackgroundModel model = fit_background_model(frames, 3, 2);
    for (const auto& comps : model.pixels) {
        double sum = 0;
        for (const auto& g : comps) sum += g.weight;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("subtract: mean pixel is background, 10-sigma outlier is foreground") {
    auto frames = constant_frames(10, 0.4f);
    BackgroundModel model = fit_background_model(frames, 3, 1);

    Image same(8, 8, 0.4f);
    CHECK(subtract(model, same, 4.0).count() == 0);

    Image shifted(8, 8, 0.4f);
    // displace one pixel by 10 sigma per channel (sigma = sqrt(floor) = 0.01)
    for (int c = 0; c < 3; ++c) shifted.at(4, 4, c) = 0.4f + 0.1f;
    BinaryMask fg = subtract(model, shifted, 4.0);
    CHECK(fg.count() == 1);
    CHECK(fg.at(4, 4));

    CHECK_THROWS_AS(subtract(model, Image(8, 9), 4.0), std::invalid_argument);
}

TEST_CASE("raising the threshold never adds foreground") {
    std::vector<Image> frames;
    Rng rng(13);
    for (int i = 0; i < 6; ++i) {
        Image f(8, 8, 0.5f);
        for (float& v : f.data()) v += static_cast<float>(rng.normal(0.0, 0.01));
        frames.push_back(f);
    }
    BackgroundModel model = fit_background_model(frames, 3, 3);
    Image probe(8, 8);
    for (float& v : probe.data()) v = static_cast<float>(rng.uniform());

    BinaryMask prev = subtract(model, probe, 1.0);
    for (double thr : {2.0, 4.0, 8.0, 16.0}) {
        BinaryMask cur = subtract(model, probe, thr);
        for (size_t i = 0; i < cur.data().size(); ++i)
            if (cur.data()[i]) CHECK(prev.data()[i]);
        prev = cur;
    }
}

TEST_CASE("background frames stay below 1% foreground at 4 sigma") {
    synth::DatasetOptions opts;
    synth::SceneSpec spec = synth::record_spec(404, 0, opts);
    spec.fill_fraction = 0.0;
    std::vector<Image> frames;
    for (int j = 0; j < 10; ++j) {
        spec.noise_stream = 100 + j;
        frames.push_back(synth::render_scene(spec, synth::RenderMode::colored).image);
    }
    BackgroundModel model = fit_background_model(frames, 3, 7);
    for (const auto& frame : frames) {
        BinaryMask fg = subtract(model, frame, 4.0);
        CHECK(static_cast<double>(fg.count()) <= 0.01 * 64 * 64);
    }
}

TEST_CASE("synthetic colored scene recovers ground truth at IoU >= 0.95") {
    synth::DatasetOptions opts;
    synth::SceneSpec spec = synth::record_spec(505, 0, opts);
    spec.fill_fraction = 0.0;
    std::vector<Image> frames;
    for (int j = 0; j < 10; ++j) {
        spec.noise_stream = 200 + j;
        frames.push_back(synth::render_scene(spec, synth::RenderMode::colored).image);
    }
    BackgroundModel model = fit_background_model(frames, 3, 7);

    spec.fill_fraction = 0.55;
    spec.noise_stream = 999;
    synth::RenderedScene filled = synth::render_scene(spec, synth::RenderMode::colored);
    BinaryMask pred = subtract(model, filled.image, 4.0);
    CHECK(iou(pred, filled.mask) >= 0.95);
}

TEST_CASE("model checkpoint round trip") {
    auto frames = constant_frames(4, 0.6f);
    BackgroundModel model = fit_background_model(frames, 3, 42);
    std::filesystem::create_directories("test_tmp");
    save_background_model(model, "test_tmp/bg_model.bin");
    BackgroundModel back = load_background_model("test_tmp/bg_model.bin");
    CHECK(back.height == model.height);
    CHECK(back.seed == 42);
    CHECK(back.at(2, 2)[0].mean[1] == model.at(2, 2)[0].mean[1]);
}
