#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>

#include "liquidseg/image.hpp"
#include "liquidseg/jitter.hpp"
#include "liquidseg/manifest.hpp"
#include "liquidseg/png_io.hpp"
#include "liquidseg/rng.hpp"

using namespace liquidseg;

namespace {

BinaryMask mask_from(int h, int w, std::initializer_list<std::pair<int, int>> px) {
    BinaryMask m(h, w);
    for (auto [y, x] : px) m.set(y, x, true);
    return m;
}

double iou_bruteforce(const BinaryMask& a, const BinaryMask& b) {
    int inter = 0, uni = 0;
    for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x) {
            if (a.at(y, x) && b.at(y, x)) ++inter;
            if (a.at(y, x) || b.at(y, x)) ++uni;
        }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / uni;
}

}  // namespace

TEST_CASE("iou identity and disjoint cases") {
    BinaryMask a = mask_from(8, 8, {{1, 1}, {1, 2}, {2, 1}, {2, 2}});
    CHECK(iou(a, a) == doctest::Approx(1.0));

    BinaryMask b = mask_from(8, 8, {{5, 5}, {5, 6}});
    CHECK(iou(a, b) == doctest::Approx(0.0));
}

TEST_CASE("iou counted case: 4+4 pixels overlapping in 2") {
    BinaryMask a = mask_from(8, 8, {{0, 0}, {0, 1}, {0, 2}, {0, 3}});
    BinaryMask b = mask_from(8, 8, {{0, 2}, {0, 3}, {0, 4}, {0, 5}});
    CHECK(iou(a, b) == doctest::Approx(2.0 / 6.0));
}

TEST_CASE("iou of two empty masks is 1 by convention") {
    BinaryMask a(8, 8), b(8, 8);
    CHECK(iou(a, b) == 1.0);
}

TEST_CASE("iou rejects mismatched dimensions") {
    CHECK_THROWS_AS(iou(BinaryMask(8, 8), BinaryMask(8, 9)), std::invalid_argument);
}

TEST_CASE("iou is symmetric and matches brute force on random 6x6 masks") {
    Rng rng(42);
    for (int trial = 0; trial < 200; ++trial) {
        BinaryMask a(6, 6), b(6, 6);
        for (int y = 0; y < 6; ++y)
            for (int x = 0; x < 6; ++x) {
                a.set(y, x, rng.uniform() < 0.4);
                b.set(y, x, rng.uniform() < 0.4);
            }
        double ab = iou(a, b);
        CHECK(ab == iou(b, a));
        CHECK(ab == iou_bruteforce(a, b));
        CHECK(iou(a, a) == 1.0);
    }
}

TEST_CASE("crop with full bbox and zero padding is the identity") {
    Image img(10, 12);
    Rng rng(1);
    for (float& v : img.data()) v = static_cast<float>(rng.uniform());
    Image out = crop(img, BoundingBox{0, 0, 11, 9}, 0);
    CHECK(out.height() == 10);
    CHECK(out.width() == 12);
    CHECK(out.data() == img.data());
}

TEST_CASE("crop expands by padding and clamps at borders") {
    Image img(10, 10, 0.5f);
    Image mid = crop(img, BoundingBox{2, 2, 5, 5}, 1);
    CHECK(mid.height() == 6);
    CHECK(mid.width() == 6);

    // corner bbox with large padding: clamped, no out-of-bounds read
    Image corner = crop(img, BoundingBox{0, 0, 1, 1}, 10);
    CHECK(corner.height() == 10);
    CHECK(corner.width() == 10);
}

TEST_CASE("bounding_box_of singleton, extremes, empty") {
    CHECK(bounding_box_of(mask_from(10, 10, {{7, 3}})) == BoundingBox{3, 7, 3, 7});
    CHECK(bounding_box_of(mask_from(10, 10, {{1, 1}, {9, 5}})) == BoundingBox{1, 1, 5, 9});
    CHECK(!bounding_box_of(BinaryMask(10, 10)).has_value());
}

TEST_CASE("bounding_box_of is tight and contains every true pixel") {
    Rng rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        BinaryMask m(9, 11);
        for (int y = 0; y < 9; ++y)
            for (int x = 0; x < 11; ++x) m.set(y, x, rng.uniform() < 0.15);
        auto box = bounding_box_of(m);
        if (!box) {
            CHECK(m.count() == 0);
            continue;
        }
        bool top = false, bottom = false, left = false, right = false;
        for (int y = 0; y < 9; ++y)
            for (int x = 0; x < 11; ++x) {
                if (!m.at(y, x)) continue;
                CHECK(x >= box->x_min);
                CHECK(x <= box->x_max);
                CHECK(y >= box->y_min);
                CHECK(y <= box->y_max);
                top |= y == box->y_min;
                bottom |= y == box->y_max;
                left |= x == box->x_min;
                right |= x == box->x_max;
            }
        CHECK(top);
        CHECK(bottom);
        CHECK(left);
        CHECK(right);
    }
}

TEST_CASE("png round trip for images and masks") {
    std::filesystem::create_directories("test_tmp");
    Image img(16, 24);
    Rng rng(3);
    for (float& v : img.data()) v = static_cast<float>(rng.uniform());
    img.clamp01();
    save_png("test_tmp/img.png", img);
    Image back = load_png("test_tmp/img.png");
    REQUIRE(back.height() == 16);
    REQUIRE(back.width() == 24);
    for (size_t i = 0; i < img.data().size(); ++i)
        CHECK(std::abs(back.data()[i] - img.data()[i]) <= 0.5f / 255.0f + 1e-6f);

    BinaryMask m(16, 24);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 24; ++x) m.set(y, x, rng.uniform() < 0.5);
    save_mask_png("test_tmp/mask.png", m);
    CHECK(load_mask_png("test_tmp/mask.png") == m);
}

TEST_CASE("png encoder is byte-deterministic") {
    std::filesystem::create_directories("test_tmp");
    Image img(12, 12);
    Rng rng(9);
    for (float& v : img.data()) v = static_cast<float>(rng.uniform());
    save_png("test_tmp/det_a.png", img);
    save_png("test_tmp/det_b.png", img);
    std::ifstream fa("test_tmp/det_a.png", std::ios::binary);
    std::ifstream fb("test_tmp/det_b.png", std::ios::binary);
    std::string a((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
    std::string b((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
    CHECK(a == b);
}

TEST_CASE("color_jitter identity ranges leave the image untouched") {
    Image img(8, 8);
    Rng rng(5);
    for (float& v : img.data()) v = static_cast<float>(rng.uniform());
    img.clamp01();
    Image out = color_jitter(img, JitterConfig{}, 123);
    CHECK(out.data() == img.data());
}

TEST_CASE("color_jitter same seed twice is bit-identical") {
    Image img(8, 8);
    Rng rng(6);
    for (float& v : img.data()) v = static_cast<float>(rng.uniform());
    img.clamp01();
    JitterConfig cfg{{0.7, 1.3}, {0.8, 1.2}, {-0.2, 0.2}};
    Image a = color_jitter(img, cfg, 99);
    Image b = color_jitter(img, cfg, 99);
    CHECK(a.data() == b.data());
    Image c = color_jitter(img, cfg, 100);
    CHECK(a.data() != c.data());
}

TEST_CASE("color_jitter brightness factor pinned at 2 doubles a constant image") {
    Image img(8, 8, 0.3f);
    JitterConfig cfg;
    cfg.brightness = {2.0, 2.0};
    Image out = color_jitter(img, cfg, 1);
    for (float v : out.data()) CHECK(v == doctest::Approx(0.6f));
}

TEST_CASE("color_jitter validates ranges") {
    Image img(8, 8, 0.5f);
    JitterConfig bad;
    bad.brightness = {0.0, 1.0};
    CHECK_THROWS_AS(color_jitter(img, bad, 1), std::invalid_argument);
    JitterConfig hue;
    hue.hue = {-0.7, 0.2};
    CHECK_THROWS_AS(color_jitter(img, hue, 1), std::invalid_argument);
}

TEST_CASE("manifest round trip with optional fields and unknown-field tolerance") {
    std::filesystem::create_directories("test_tmp/ds");
    DatasetManifest m;
    m.domain_tag = DomainTag::colored;
    m.pipeline_seed = 77;
    ManifestRecord r1;
    r1.image_id = "a";
    r1.image_path = "images/a.png";
    r1.mask_path = "masks/a.png";
    r1.fill_fraction = 0.25;
    r1.cup_bbox = {2, 3, 10, 12};
    r1.scene_id = 0;
    ManifestRecord r2;
    r2.image_id = "b";
    r2.image_path = "images/b.png";
    r2.cup_bbox = {1, 1, 5, 5};
    m.records = {r1, r2};
    save_manifest(m, "test_tmp/ds/manifest.json");

    DatasetManifest back = load_manifest("test_tmp/ds/manifest.json");
    CHECK(back.domain_tag == DomainTag::colored);
    CHECK(back.pipeline_seed == 77);
    REQUIRE(back.records.size() == 2);
    CHECK(back.records[0].mask_path.value() == "masks/a.png");
    CHECK(back.records[0].fill_fraction.value() == doctest::Approx(0.25));
    CHECK(!back.records[1].mask_path.has_value());

    // unknown fields are ignored on read
    {
        std::ifstream in("test_tmp/ds/manifest.json");
        std::string text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
        text.insert(text.find('{') + 1, "\"future_field\": 42,");
        std::ofstream out("test_tmp/ds/manifest2.json");
        out << text;
    }
    CHECK(load_manifest("test_tmp/ds/manifest2.json").records.size() == 2);
}

TEST_CASE("manifest rejects duplicate ids") {
    DatasetManifest m;
    ManifestRecord r;
    r.image_id = "dup";
    r.image_path = "x.png";
    r.cup_bbox = {0, 0, 1, 1};
    m.records = {r, r};
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);
}
