#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "liquidseg/evalreport.hpp"
#include "liquidseg/pipeline.hpp"
#include "liquidseg/png_io.hpp"
#include "liquidseg/postprocess.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitPrerequisite = 3;
constexpr int kExitRuntime = 4;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"liquidseg: transparent-liquid segmentation pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::string workspace;
    std::vector<std::string> overrides;
    uint64_t seed = 0;
    bool seed_set = false;
    bool force = false;

    app.add_option("--config", config_path, "pipeline config file (JSON)");
    app.add_option("--workspace", workspace, "workspace directory override");
    app.add_option("--set", overrides, "dotted config override, e.g. translation.epochs=5");
    app.add_option_function<uint64_t>(
        "--seed", [&](uint64_t v) { seed = v; seed_set = true; }, "pipeline seed override");
    app.add_flag("--force", force, "allow mixing artifacts from different seeds in report");

    // pipeline subcommands
    for (const auto& name : liquidseg::pipeline::command_names()) {
        if (name == "segment" || name == "run-all") continue;
        app.add_subcommand(name)->silent(false);
    }
    auto* run_all = app.add_subcommand("run-all", "execute the full pipeline in order");
    bool desk = false;
    run_all->add_flag("--desk", desk, "use the built-in desk-scale defaults");

    auto* segment = app.add_subcommand("segment", "segment one PNG image");
    std::string seg_input, seg_output, seg_model;
    double seg_threshold = 0.5;
    segment->add_option("--input", seg_input, "input PNG")->required();
    segment->add_option("--output", seg_output, "output mask PNG")->required();
    segment->add_option("--model", seg_model, "segmentation checkpoint");
    segment->add_option("--threshold", seg_threshold, "binarization threshold");

    CLI11_PARSE(app, argc, argv);

    try {
        liquidseg::pipeline::PipelineConfig cfg;
        if (!config_path.empty())
            cfg = liquidseg::pipeline::PipelineConfig::load_file(config_path);

        if (const char* env_ws = std::getenv("LIQUIDSEG_WORKSPACE"))
            if (workspace.empty()) workspace = env_ws;
        if (!workspace.empty()) cfg.workspace = workspace;
        if (seed_set) {
            cfg.seed = seed;
            cfg.propagate_seed();
        }
        for (const auto& o : overrides) cfg.apply_override(o);

        for (auto* sub : app.get_subcommands()) {
            const std::string name = sub->get_name();
            if (name == "segment") {
                std::string model_path = seg_model.empty()
                                             ? cfg.workspace + "/models/seg/checkpoint.bin"
                                             : seg_model;
                if (!std::filesystem::exists(model_path))
                    throw liquidseg::pipeline::MissingPrerequisite(model_path, "train-seg");
                auto model = liquidseg::seg::load_segmentation(model_path);
                liquidseg::Image img = liquidseg::load_png(seg_input);
                liquidseg::BinaryMask mask =
                    liquidseg::seg::predict_mask(model, img, seg_threshold);
                liquidseg::save_mask_png(seg_output, mask);
                std::cout << "segment: wrote " << seg_output << "\n";
            } else {
                liquidseg::pipeline::run_command(name, cfg, force);
            }
        }
        return kExitOk;
    } catch (const liquidseg::pipeline::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const liquidseg::pipeline::MissingPrerequisite& e) {
        std::cerr << "missing prerequisite: " << e.what() << "\n";
        return kExitPrerequisite;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}
