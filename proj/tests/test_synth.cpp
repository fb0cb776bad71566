#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "liquidseg/png_io.hpp"
#include "liquidseg/synth.hpp"

using namespace liquidseg;
using namespace liquidseg::synth;

namespace fs = std::filesystem;

namespace {

SceneSpec default_spec(uint64_t seed = 5, double fill = 0.5) {
    SceneSpec s;
    s.seed = seed;
    s.fill_fraction = fill;
    return s;
}

std::string file_bytes(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(f)),
                       std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("fill 0 gives an empty mask, fill 1 fills the interior") {
    RenderedScene empty = render_scene(default_spec(3, 0.0), RenderMode::colored);
    CHECK(empty.mask.count() == 0);

    RenderedScene full = render_scene(default_spec(3, 1.0), RenderMode::colored);
    CHECK(full.mask.count() > 0);
    // every mask pixel lies inside the interior bbox
    auto box = bounding_box_of(full.mask).value();
    CHECK(box.y_min == full.cup_bbox.y_min);
    CHECK(box.y_max == full.cup_bbox.y_max);
    CHECK(box.x_min >= full.cup_bbox.x_min);
    CHECK(box.x_max <= full.cup_bbox.x_max);
}

TEST_CASE("colored and transparent modes share bit-identical masks") {
    for (uint64_t seed : {1ULL, 2ULL, 9ULL}) {
        SceneSpec spec = default_spec(seed, 0.6);
        RenderedScene a = render_scene(spec, RenderMode::colored);
        RenderedScene b = render_scene(spec, RenderMode::transparent);
        CHECK(a.mask == b.mask);
        CHECK(a.cup_bbox == b.cup_bbox);
    }
}

TEST_CASE("modes differ only inside the mask") {
    SceneSpec spec = default_spec(11, 0.7);
    RenderedScene a = render_scene(spec, RenderMode::colored);
    RenderedScene b = render_scene(spec, RenderMode::transparent);
    int inside_diffs = 0;
    for (int y = 0; y < a.image.height(); ++y)
        for (int x = 0; x < a.image.width(); ++x) {
            bool same = true;
            for (int c = 0; c < 3; ++c)
                same = same && a.image.at(y, x, c) == b.image.at(y, x, c);
            if (a.mask.at(y, x)) {
                if (!same) ++inside_diffs;
            } else {
                CHECK(same);
            }
        }
    CHECK(inside_diffs > 0);
}

TEST_CASE("masks nest with increasing fill") {
    SceneSpec lo = default_spec(21, 0.3);
    SceneSpec hi = default_spec(21, 0.8);
    RenderedScene a = render_scene(lo, RenderMode::colored);
    RenderedScene b = render_scene(hi, RenderMode::colored);
    CHECK(a.mask.count() > 0);
    CHECK(b.mask.count() > a.mask.count());
    for (int y = 0; y < a.mask.height(); ++y)
        for (int x = 0; x < a.mask.width(); ++x)
            if (a.mask.at(y, x)) CHECK(b.mask.at(y, x));
}

TEST_CASE("render is deterministic and cup bounds are validated") {
    SceneSpec spec = default_spec(33, 0.5);
    RenderedScene a = render_scene(spec, RenderMode::transparent);
    RenderedScene b = render_scene(spec, RenderMode::transparent);
    CHECK(a.image.data() == b.image.data());
    CHECK(a.mask == b.mask);

    SceneSpec bad = spec;
    bad.cup.bottom_y = 63;  // touches the border
    CHECK_THROWS_AS(render_scene(bad, RenderMode::colored), std::invalid_argument);
}

TEST_CASE("make_dataset writes manifests with the promised label visibility") {
    fs::remove_all("test_tmp/synth_c");
    fs::remove_all("test_tmp/synth_t");
    DatasetOptions opts;
    opts.n_empty_frames = 3;

    DatasetManifest colored =
        make_dataset(10, 77, RenderMode::colored, "test_tmp/synth_c", opts);
    CHECK(colored.records.size() == 10);
    for (const auto& r : colored.records) {
        CHECK(r.mask_path.has_value());
        CHECK(r.fill_fraction.has_value());
        CHECK(fs::exists(fs::path("test_tmp/synth_c") / r.image_path));
        CHECK(fs::exists(fs::path("test_tmp/synth_c") / *r.mask_path));
    }
    CHECK(fs::exists("test_tmp/synth_c/empty/empty_000.png"));

    DatasetManifest transparent =
        make_dataset(10, 78, RenderMode::transparent, "test_tmp/synth_t", opts);
    CHECK(transparent.records.size() == 10);
    for (const auto& r : transparent.records) {
        CHECK(!r.mask_path.has_value());
        CHECK(!r.fill_fraction.has_value());
    }

    DatasetOptions labeled = opts;
    labeled.include_labels = true;
    fs::remove_all("test_tmp/synth_t2");
    DatasetManifest test_set =
        make_dataset(5, 78, RenderMode::transparent, "test_tmp/synth_t2", labeled);
    for (const auto& r : test_set.records) CHECK(r.mask_path.has_value());
}

TEST_CASE("make_dataset is byte-identical across reruns with one seed") {
    fs::remove_all("test_tmp/synth_d1");
    fs::remove_all("test_tmp/synth_d2");
    DatasetOptions opts;
    opts.n_empty_frames = 2;
    make_dataset(6, 123, RenderMode::colored, "test_tmp/synth_d1", opts);
    make_dataset(6, 123, RenderMode::colored, "test_tmp/synth_d2", opts);

    for (const auto& entry : fs::recursive_directory_iterator("test_tmp/synth_d1")) {
        if (!entry.is_regular_file()) continue;
        fs::path rel = fs::relative(entry.path(), "test_tmp/synth_d1");
        CAPTURE(rel.string());
        CHECK(file_bytes(entry.path()) == file_bytes(fs::path("test_tmp/synth_d2") / rel));
    }
}

TEST_CASE("mask pixels are always a subset of the cup interior box") {
    for (int i = 0; i < 8; ++i) {
        DatasetOptions opts;
        SceneSpec spec = record_spec(555, i, opts);
        spec.fill_fraction = (i + 1) / 9.0;
        RenderedScene scene = render_scene(spec, RenderMode::transparent);
        for (int y = 0; y < scene.mask.height(); ++y)
            for (int x = 0; x < scene.mask.width(); ++x)
                if (scene.mask.at(y, x)) {
                    CHECK(y >= scene.cup_bbox.y_min);
                    CHECK(y <= scene.cup_bbox.y_max);
                    CHECK(x >= scene.cup_bbox.x_min);
                    CHECK(x <= scene.cup_bbox.x_max);
                }
    }
}
