#include "liquidseg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "liquidseg/png_io.hpp"
#include "liquidseg/rng.hpp"

namespace fs = std::filesystem;

namespace liquidseg::synth {
namespace {

constexpr double kTintAlpha = 0.55;      // colored liquid blend toward the tint
constexpr float kBrightnessLift = 0.05f; // transparent liquid lift
constexpr float kMeniscusLift = 0.12f;   // extra lift on the surface row
constexpr float kWallColor[3] = {0.30f, 0.32f, 0.36f};
constexpr double kWallAlpha = 0.45;

struct CupRegion {
    int top_y, bottom_y;             // interior rows: top_y .. bottom_y
    std::vector<int> left, right;    // interior column span per interior row
    BoundingBox interior_bbox;
    std::vector<int> wall_left, wall_right;  // wall columns per cup row
    int cup_top_y;
};

int wall_x(const CupGeometry& c, int y, bool left) {
    double t = static_cast<double>(c.bottom_y - y) / std::max(1, c.height - 1);
    double half = 0.5 * (c.base_width + t * (c.top_width - c.base_width));
    return left ? static_cast<int>(std::lround(c.center_x - half))
                : static_cast<int>(std::lround(c.center_x + half));
}

CupRegion cup_region(const SceneSpec& spec) {
    const CupGeometry& c = spec.cup;
    int cup_top = c.bottom_y - c.height + 1;
    int max_half = (std::max(c.base_width, c.top_width) + 1) / 2;
    if (cup_top < 1 || c.bottom_y > spec.image_height - 2 ||
        c.center_x - max_half < 1 || c.center_x + max_half > spec.image_width - 2)
        throw std::invalid_argument("render_scene: cup not strictly inside image bounds");
    if (c.height < 4 || c.base_width < 4 || c.top_width < 4)
        throw std::invalid_argument("render_scene: degenerate cup geometry");

    CupRegion r;
    r.cup_top_y = cup_top;
    r.top_y = cup_top;
    r.bottom_y = c.bottom_y - 1;  // row bottom_y is the cup bottom wall
    int min_left = spec.image_width, max_right = -1;
    for (int y = cup_top; y <= c.bottom_y; ++y) {
        r.wall_left.push_back(wall_x(c, y, true));
        r.wall_right.push_back(wall_x(c, y, false));
    }
    for (int y = r.top_y; y <= r.bottom_y; ++y) {
        int wl = r.wall_left[y - cup_top], wr = r.wall_right[y - cup_top];
        r.left.push_back(wl + 1);
        r.right.push_back(wr - 1);
        min_left = std::min(min_left, wl + 1);
        max_right = std::max(max_right, wr - 1);
    }
    r.interior_bbox = BoundingBox{min_left, r.top_y, max_right, r.bottom_y};
    return r;
}

// keep any one channel from dominating so the liquid tint stays separable
void temper_color(float c[3]) {
    float base = std::max(c[0], c[2]);
    c[1] = std::min(c[1], base + 0.12f);
}

void random_color(Rng& rng, float c[3]) {
    for (int i = 0; i < 3; ++i) c[i] = static_cast<float>(rng.uniform(0.15, 0.85));
    temper_color(c);
}

Image render_background(const SceneSpec& spec) {
    Image img(spec.image_height, spec.image_width);
    Rng rng(derive_seed(spec.seed, 100 + spec.background_id));
    float c0[3], c1[3];
    random_color(rng, c0);
    random_color(rng, c1);

    switch (spec.background_id & 3) {
        case 0: {  // linear gradient
            int dir = static_cast<int>(rng.uniform_int(3));
            for (int y = 0; y < img.height(); ++y)
                for (int x = 0; x < img.width(); ++x) {
                    double t = dir == 0   ? static_cast<double>(y) / (img.height() - 1)
                               : dir == 1 ? static_cast<double>(x) / (img.width() - 1)
                                          : 0.5 * (static_cast<double>(y) / (img.height() - 1) +
                                                   static_cast<double>(x) / (img.width() - 1));
                    for (int c = 0; c < 3; ++c)
                        img.at(y, x, c) = static_cast<float>(c0[c] + t * (c1[c] - c0[c]));
                }
            break;
        }
        case 1: {  // stripes
            int w = 4 + static_cast<int>(rng.uniform_int(7));
            bool vertical = rng.uniform() < 0.5;
            for (int y = 0; y < img.height(); ++y)
                for (int x = 0; x < img.width(); ++x) {
                    int band = (vertical ? x : y) / w;
                    const float* c = (band % 2 == 0) ? c0 : c1;
                    for (int ch = 0; ch < 3; ++ch) img.at(y, x, ch) = c[ch];
                }
            break;
        }
        case 2: {  // smooth value noise: coarse random grid, bilinear upsample
            int cell = 8;
            int gh = img.height() / cell + 2, gw = img.width() / cell + 2;
            std::vector<float> grid(static_cast<size_t>(gh) * gw * 3);
            for (size_t i = 0; i < grid.size(); i += 3) {
                float c[3];
                random_color(rng, c);
                grid[i] = c[0];
                grid[i + 1] = c[1];
                grid[i + 2] = c[2];
            }
            for (int y = 0; y < img.height(); ++y)
                for (int x = 0; x < img.width(); ++x) {
                    double gy = static_cast<double>(y) / cell, gx = static_cast<double>(x) / cell;
                    int iy = static_cast<int>(gy), ix = static_cast<int>(gx);
                    double fy = gy - iy, fx = gx - ix;
                    for (int c = 0; c < 3; ++c) {
                        auto g = [&](int yy, int xx) {
                            return grid[(static_cast<size_t>(yy) * gw + xx) * 3 + c];
                        };
                        double v = (1 - fy) * ((1 - fx) * g(iy, ix) + fx * g(iy, ix + 1)) +
                                   fy * ((1 - fx) * g(iy + 1, ix) + fx * g(iy + 1, ix + 1));
                        img.at(y, x, c) = static_cast<float>(v);
                    }
                }
            break;
        }
        default: {  // checker
            int cell = 6 + static_cast<int>(rng.uniform_int(7));
            for (int y = 0; y < img.height(); ++y)
                for (int x = 0; x < img.width(); ++x) {
                    const float* c = (((y / cell) + (x / cell)) % 2 == 0) ? c0 : c1;
                    for (int ch = 0; ch < 3; ++ch) img.at(y, x, ch) = c[ch];
                }
        }
    }
    return img;
}

float sample_bilinear(const Image& img, double y, double x, int c) {
    y = std::clamp(y, 0.0, static_cast<double>(img.height() - 1));
    x = std::clamp(x, 0.0, static_cast<double>(img.width() - 1));
    int y0 = static_cast<int>(y), x0 = static_cast<int>(x);
    int y1 = std::min(y0 + 1, img.height() - 1), x1 = std::min(x0 + 1, img.width() - 1);
    double fy = y - y0, fx = x - x0;
    return static_cast<float>((1 - fy) * ((1 - fx) * img.at(y0, x0, c) + fx * img.at(y0, x1, c)) +
                              fy * ((1 - fx) * img.at(y1, x0, c) + fx * img.at(y1, x1, c)));
}

}  // namespace

RenderedScene render_scene(const SceneSpec& spec, RenderMode mode) {
    if (spec.fill_fraction < 0.0 || spec.fill_fraction > 1.0)
        throw std::invalid_argument("render_scene: fill_fraction out of [0,1]");
    if (spec.image_height < 8 || spec.image_width < 8)
        throw std::invalid_argument("render_scene: image too small");

    CupRegion cup = cup_region(spec);

    Image base = render_background(spec);
    if (spec.noise_sigma > 0.0) {
        Rng noise(derive_seed(spec.seed, 7000 + static_cast<uint64_t>(spec.noise_stream)));
        for (float& v : base.data())
            v += static_cast<float>(noise.normal(0.0, spec.noise_sigma));
    }

    // liquid mask: bottom n_liq interior rows
    int n_rows = cup.bottom_y - cup.top_y + 1;
    int n_liq = static_cast<int>(std::llround(spec.fill_fraction * n_rows));
    int surface_y = cup.bottom_y - n_liq + 1;

    BinaryMask mask(spec.image_height, spec.image_width);
    for (int y = surface_y; y <= cup.bottom_y; ++y) {
        int i = y - cup.top_y;
        for (int x = cup.left[i]; x <= cup.right[i]; ++x) mask.set(y, x, true);
    }

    Image img = base;
    if (n_liq > 0) {
        if (mode == RenderMode::colored) {
            for (int y = surface_y; y <= cup.bottom_y; ++y) {
                int i = y - cup.top_y;
                for (int x = cup.left[i]; x <= cup.right[i]; ++x)
                    for (int c = 0; c < 3; ++c)
                        img.at(y, x, c) = static_cast<float>(
                            (1.0 - kTintAlpha) * base.at(y, x, c) +
                            kTintAlpha * spec.liquid_tint[c]);
            }
        } else {
            Rng warp_rng(derive_seed(spec.seed, 42));
            double period = 7.0 + warp_rng.uniform() * 6.0;
            double phase = warp_rng.uniform() * 2.0 * 3.14159265358979323846;
            for (int y = surface_y; y <= cup.bottom_y; ++y) {
                int i = y - cup.top_y;
                double dx = spec.refraction_strength *
                            std::sin(2.0 * 3.14159265358979323846 * (y - cup.top_y) / period + phase);
                for (int x = cup.left[i]; x <= cup.right[i]; ++x) {
                    for (int c = 0; c < 3; ++c)
                        img.at(y, x, c) = sample_bilinear(base, y, x + dx, c) + kBrightnessLift;
                    if (y == surface_y)
                        for (int c = 0; c < 3; ++c) img.at(y, x, c) += kMeniscusLift;
                }
            }
        }
    }

    // cup walls, identical in both modes (they lie outside the interior)
    auto blend_wall = [&](int y, int x) {
        if (x < 0 || x >= img.width() || y < 0 || y >= img.height()) return;
        for (int c = 0; c < 3; ++c)
            img.at(y, x, c) = static_cast<float>((1.0 - kWallAlpha) * img.at(y, x, c) +
                                                 kWallAlpha * kWallColor[c]);
    };
    for (int y = cup.cup_top_y; y <= spec.cup.bottom_y; ++y) {
        blend_wall(y, cup.wall_left[y - cup.cup_top_y]);
        blend_wall(y, cup.wall_right[y - cup.cup_top_y]);
    }
    int bi = spec.cup.bottom_y - cup.cup_top_y;
    for (int x = cup.wall_left[bi]; x <= cup.wall_right[bi]; ++x)
        blend_wall(spec.cup.bottom_y, x);

    img.clamp01();
    return RenderedScene{std::move(img), std::move(mask), cup.interior_bbox};
}

SceneSpec record_spec(uint64_t dataset_seed, int record_index, const DatasetOptions& options) {
    SceneSpec spec;
    spec.image_height = spec.image_width = options.image_size;
    spec.noise_sigma = options.noise_sigma;
    spec.refraction_strength = options.refraction_strength;
    spec.noise_stream = options.record_offset + record_index;

    uint64_t scene_seed =
        options.fixed_scene
            ? derive_seed(dataset_seed, 1)
            : derive_seed(dataset_seed, 2000 + static_cast<uint64_t>(options.record_offset) +
                                            static_cast<uint64_t>(record_index));
    spec.seed = scene_seed;

    Rng rng(derive_seed(scene_seed, 3));
    spec.background_id = static_cast<int>(rng.uniform_int(4));
    int size = options.image_size;
    spec.cup.height = static_cast<int>(std::lround(size * rng.uniform(0.55, 0.68)));
    spec.cup.top_width = static_cast<int>(std::lround(size * rng.uniform(0.50, 0.62)));
    spec.cup.base_width = static_cast<int>(std::lround(spec.cup.top_width * rng.uniform(0.68, 0.85)));
    spec.cup.center_x = size / 2 + static_cast<int>(rng.uniform_int(5)) - 2;
    spec.cup.bottom_y = size - 4 - static_cast<int>(rng.uniform_int(4));
    spec.liquid_tint[0] = static_cast<float>(rng.uniform(0.08, 0.20));
    spec.liquid_tint[1] = static_cast<float>(rng.uniform(0.55, 0.75));
    spec.liquid_tint[2] = static_cast<float>(rng.uniform(0.15, 0.30));
    return spec;
}

DatasetManifest make_dataset(int n, uint64_t seed, RenderMode mode,
                             const std::string& out_dir, const DatasetOptions& options) {
    if (n < 1) throw std::invalid_argument("make_dataset: n must be >= 1");

    std::error_code ec;
    fs::create_directories(fs::path(out_dir) / "images", ec);
    fs::create_directories(fs::path(out_dir) / "masks", ec);
    if (ec) throw std::runtime_error("make_dataset: cannot create " + out_dir);
    if (!fs::exists(fs::path(out_dir) / "images"))
        throw std::runtime_error("make_dataset: unwritable out_dir " + out_dir);

    // stratified fills over [0,1], shuffled so record order is fill-agnostic
    Rng fill_rng(derive_seed(seed, 11 + static_cast<uint64_t>(options.record_offset)));
    std::vector<double> fills(n);
    for (int i = 0; i < n; ++i)
        fills[i] = std::min(1.0, (i + fill_rng.uniform()) / static_cast<double>(n));
    fill_rng.shuffle(fills);

    bool withhold = (mode == RenderMode::transparent) && !options.include_labels;

    DatasetManifest manifest;
    manifest.domain_tag = mode == RenderMode::colored ? DomainTag::colored : DomainTag::transparent;
    manifest.base_dir = out_dir;
    manifest.pipeline_seed = seed;

    char buf[64];
    for (int i = 0; i < n; ++i) {
        SceneSpec spec = record_spec(seed, i, options);
        spec.fill_fraction = fills[i];
        RenderedScene scene = render_scene(spec, mode);

        std::snprintf(buf, sizeof(buf), "%s_%04d", options.id_prefix.c_str(), i);
        std::string id = buf;
        std::string image_rel = "images/" + id + ".png";
        std::string mask_rel = "masks/" + id + ".png";
        save_png((fs::path(out_dir) / image_rel).string(), scene.image);
        save_mask_png((fs::path(out_dir) / mask_rel).string(), scene.mask);

        ManifestRecord rec;
        rec.image_id = id;
        rec.image_path = image_rel;
        if (!withhold) {
            rec.mask_path = mask_rel;
            rec.fill_fraction = fills[i];
        }
        rec.cup_bbox = scene.cup_bbox;
        rec.scene_id = options.fixed_scene ? 0 : i;
        rec.split_tag = options.split_tag;
        manifest.records.push_back(std::move(rec));
    }

    if (mode == RenderMode::colored && options.n_empty_frames > 0) {
        fs::create_directories(fs::path(out_dir) / "empty");
        for (int j = 0; j < options.n_empty_frames; ++j) {
            SceneSpec spec = record_spec(seed, 0, options);
            spec.fill_fraction = 0.0;
            spec.noise_stream = 100000 + j;
            RenderedScene scene = render_scene(spec, RenderMode::colored);
            std::snprintf(buf, sizeof(buf), "empty/empty_%03d.png", j);
            save_png((fs::path(out_dir) / buf).string(), scene.image);
        }
    }

    save_manifest(manifest, (fs::path(out_dir) / "manifest.json").string());
    return manifest;
}

}  // namespace liquidseg::synth
