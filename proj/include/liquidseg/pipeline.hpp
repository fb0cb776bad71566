#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "liquidseg/jitter.hpp"
#include "liquidseg/pour.hpp"
#include "liquidseg/segmentation.hpp"
#include "liquidseg/translation.hpp"

namespace liquidseg::pipeline {

// exit code 2
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// exit code 3; names the command that has to run first
struct MissingPrerequisite : std::runtime_error {
    std::string required_command;
    MissingPrerequisite(const std::string& artifact, const std::string& command)
        : std::runtime_error("missing " + artifact + "; run `" + command + "` first"),
          required_command(command) {}
};

struct SynthSettings {
    int image_size = 64;
    int n_train_colored = 200;
    int n_train_transparent = 200;
    int n_test = 40;
    int n_empty_frames = 10;
    double noise_sigma = 0.004;
    double refraction_strength = 1.5;
    bool fixed_scene = true;
};

struct BgSettings {
    int max_components = 3;
    double threshold_sigma = 4.0;
};

struct PourSettings {
    std::vector<std::pair<double, double>> scenarios = {
        {0.0, 0.25}, {0.0, 0.50}, {0.0, 0.75}, {0.25, 0.75}};
    int trials = 5;
    std::string perception = "oracle";  // oracle | model
    double perception_noise = 0.005;    // measurement noise, per-trial seeded
};

struct AblationSettings {
    JitterConfig jitter{{0.6, 1.4}, {0.6, 1.4}, {-0.25, 0.25}};
    std::vector<double> fractions = {0.01, 0.10, 1.0};
};

struct PipelineConfig {
    std::string workspace = "workspace";
    uint64_t seed = 7;
    SynthSettings synth;
    BgSettings bg;
    translation::TranslationConfig translation;
    seg::SegTrainConfig seg;
    pour::ControllerConfig controller;
    pour::PlantConfig plant;
    PourSettings pour;
    AblationSettings ablation;

    // file load on top of defaults; unknown or ill-typed fields raise
    // ConfigError naming the field path
    static PipelineConfig load_file(const std::string& path);
    static PipelineConfig from_json_text(const std::string& text);
    std::string to_json() const;

    // dotted-path override, e.g. "translation.epochs=5"
    void apply_override(const std::string& assignment);

    // seeds for the sub-configs are derived from the pipeline seed
    void propagate_seed();
};

// Runs one pipeline command. Throws ConfigError / MissingPrerequisite /
// std::runtime_error; the CLI maps these to exit codes 2 / 3 / 4.
void run_command(const std::string& name, const PipelineConfig& cfg, bool force = false);

std::vector<std::string> command_names();

}  // namespace liquidseg::pipeline
