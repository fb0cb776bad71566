#pragma once

#include <cstdint>
#include <string>
#include <tuple>

#include "liquidseg/image.hpp"
#include "liquidseg/manifest.hpp"

namespace liquidseg::synth {

enum class RenderMode { colored, transparent };

// Symmetric trapezoid cup, open at the top. Pixel rows: the bottom wall sits
// at bottom_y, the rim at bottom_y - height + 1. Interior rows exclude the
// bottom wall; interior columns exclude the side walls.
struct CupGeometry {
    int base_width = 26;
    int top_width = 36;
    int height = 40;
    int center_x = 32;
    int bottom_y = 56;
};

struct SceneSpec {
    uint64_t seed = 1;
    int image_height = 64;
    int image_width = 64;
    CupGeometry cup;
    double fill_fraction = 0.5;
    int background_id = 0;            // 0 gradient, 1 stripes, 2 noise, 3 checker
    float liquid_tint[3] = {0.15f, 0.65f, 0.22f};
    double refraction_strength = 1.5; // horizontal displacement amplitude, px
    double noise_sigma = 0.004;       // per-frame photometric noise
    int noise_stream = 0;             // varies noise across frames of one scene
};

struct RenderedScene {
    Image image;
    BinaryMask mask;
    BoundingBox cup_bbox;  // interior region the liquid can occupy
};

// Deterministic render. The mask depends only on geometry and fill, so the
// two modes produce bit-identical masks, and pixels outside the mask are
// bit-identical across modes for the same spec.
RenderedScene render_scene(const SceneSpec& spec, RenderMode mode);

struct DatasetOptions {
    int image_size = 64;
    bool fixed_scene = true;       // one background/cup/tint for the whole set
    bool include_labels = false;   // test flag: keep mask/fill in a transparent manifest
    int n_empty_frames = 10;       // colored mode: empty-cup frames for bg fitting
    double noise_sigma = 0.004;
    double refraction_strength = 1.5;
    std::string split_tag = "train";
    std::string id_prefix = "scene";
    // Offsets the per-record streams (fills, photometric noise) so several
    // datasets can share one fixed scene while staying unpaired.
    int record_offset = 0;
};

// Renders n scenes with per-record seeds derived from `seed`, fill fractions
// stratified over [0,1], and writes images/, masks/ and manifest.json under
// out_dir. Transparent-mode manifests omit mask_path and fill_fraction unless
// options.include_labels is set (the mask files themselves are still written;
// they are the evaluation oracle).
DatasetManifest make_dataset(int n, uint64_t seed, RenderMode mode,
                             const std::string& out_dir,
                             const DatasetOptions& options = {});

// The spec a dataset record was rendered from (used by oracle tests and the
// closed-loop simulation to re-render a record's scene at a new fill).
SceneSpec record_spec(uint64_t dataset_seed, int record_index,
                      const DatasetOptions& options);

}  // namespace liquidseg::synth
