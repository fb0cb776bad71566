#include "liquidseg/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>

#include "json.hpp"
#include "liquidseg/bg.hpp"
#include "liquidseg/evalreport.hpp"
#include "liquidseg/postprocess.hpp"
#include "liquidseg/png_io.hpp"
#include "liquidseg/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace liquidseg::pipeline {
namespace {

// ------------------------------------------------------------- config io

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::string& path) {
    if (!j.is_object()) throw ConfigError("config: expected object at " + path);
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("config: unknown field " + path + "." + it.key());
}

template <typename T>
T get_field(const json& j, const char* key, T fallback, const std::string& path) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config: bad value for " + path + "." + key);
    }
}

JitterConfig parse_jitter(const json& j, const std::string& path) {
    check_keys(j, {"brightness", "contrast", "hue"}, path);
    JitterConfig out;
    auto range = [&](const char* key, JitterRange fallback) {
        if (!j.contains(key)) return fallback;
        const auto& a = j.at(key);
        if (!a.is_array() || a.size() != 2)
            throw ConfigError("config: " + path + "." + key + " must be [lo, hi]");
        return JitterRange{a[0].get<double>(), a[1].get<double>()};
    };
    out.brightness = range("brightness", out.brightness);
    out.contrast = range("contrast", out.contrast);
    out.hue = range("hue", out.hue);
    return out;
}

}  // namespace

PipelineConfig PipelineConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: parse failure: ") + e.what());
    }

    PipelineConfig cfg;
    check_keys(j, {"workspace", "seed", "synth", "bg", "translation", "seg", "controller",
                   "plant", "pour", "ablation"},
               "config");
    cfg.workspace = get_field<std::string>(j, "workspace", cfg.workspace, "config");
    cfg.seed = get_field<uint64_t>(j, "seed", cfg.seed, "config");

    if (j.contains("synth")) {
        const auto& s = j["synth"];
        check_keys(s, {"image_size", "n_train_colored", "n_train_transparent", "n_test",
                       "n_empty_frames", "noise_sigma", "refraction_strength", "fixed_scene"},
                   "synth");
        cfg.synth.image_size = get_field(s, "image_size", cfg.synth.image_size, "synth");
        cfg.synth.n_train_colored =
            get_field(s, "n_train_colored", cfg.synth.n_train_colored, "synth");
        cfg.synth.n_train_transparent =
            get_field(s, "n_train_transparent", cfg.synth.n_train_transparent, "synth");
        cfg.synth.n_test = get_field(s, "n_test", cfg.synth.n_test, "synth");
        cfg.synth.n_empty_frames =
            get_field(s, "n_empty_frames", cfg.synth.n_empty_frames, "synth");
        cfg.synth.noise_sigma = get_field(s, "noise_sigma", cfg.synth.noise_sigma, "synth");
        cfg.synth.refraction_strength =
            get_field(s, "refraction_strength", cfg.synth.refraction_strength, "synth");
        cfg.synth.fixed_scene = get_field(s, "fixed_scene", cfg.synth.fixed_scene, "synth");
    }
    if (j.contains("bg")) {
        const auto& s = j["bg"];
        check_keys(s, {"max_components", "threshold_sigma"}, "bg");
        cfg.bg.max_components = get_field(s, "max_components", cfg.bg.max_components, "bg");
        cfg.bg.threshold_sigma = get_field(s, "threshold_sigma", cfg.bg.threshold_sigma, "bg");
    }
    if (j.contains("translation")) {
        const auto& s = j["translation"];
        check_keys(s, {"lambda_x", "lambda_y", "tau", "num_patches", "lr_g", "lr_d", "lr_h",
                       "beta1", "beta2", "epochs", "gen_width", "n_res_blocks", "disc_width",
                       "embed_dim", "gan_mode"},
                   "translation");
        auto& t = cfg.translation;
        t.lambda_x = get_field(s, "lambda_x", t.lambda_x, "translation");
        t.lambda_y = get_field(s, "lambda_y", t.lambda_y, "translation");
        t.tau = get_field(s, "tau", t.tau, "translation");
        t.num_patches = get_field(s, "num_patches", t.num_patches, "translation");
        t.lr_g = get_field(s, "lr_g", t.lr_g, "translation");
        t.lr_d = get_field(s, "lr_d", t.lr_d, "translation");
        t.lr_h = get_field(s, "lr_h", t.lr_h, "translation");
        t.beta1 = get_field(s, "beta1", t.beta1, "translation");
        t.beta2 = get_field(s, "beta2", t.beta2, "translation");
        t.epochs = get_field(s, "epochs", t.epochs, "translation");
        t.gen_width = get_field(s, "gen_width", t.gen_width, "translation");
        t.n_res_blocks = get_field(s, "n_res_blocks", t.n_res_blocks, "translation");
        t.disc_width = get_field(s, "disc_width", t.disc_width, "translation");
        t.embed_dim = get_field(s, "embed_dim", t.embed_dim, "translation");
        std::string mode = get_field<std::string>(
            s, "gan_mode", t.gan_mode == nn::GanMode::lsgan ? "lsgan" : "logistic",
            "translation");
        if (mode != "logistic" && mode != "lsgan")
            throw ConfigError("config: translation.gan_mode must be logistic or lsgan");
        t.gan_mode = mode == "lsgan" ? nn::GanMode::lsgan : nn::GanMode::logistic;
    }
    if (j.contains("seg")) {
        const auto& s = j["seg"];
        check_keys(s, {"lr", "momentum", "weight_decay", "batch_size", "epochs", "threshold",
                       "width"},
                   "seg");
        auto& g = cfg.seg;
        g.lr = get_field(s, "lr", g.lr, "seg");
        g.momentum = get_field(s, "momentum", g.momentum, "seg");
        g.weight_decay = get_field(s, "weight_decay", g.weight_decay, "seg");
        g.batch_size = get_field(s, "batch_size", g.batch_size, "seg");
        g.epochs = get_field(s, "epochs", g.epochs, "seg");
        g.threshold = get_field(s, "threshold", g.threshold, "seg");
        g.width = get_field(s, "width", g.width, "seg");
    }
    if (j.contains("controller")) {
        const auto& s = j["controller"];
        check_keys(s, {"l_target", "epsilon", "initial_pour_duration", "loop_period",
                       "pour_tilt_deg", "tilt_rate_deg_per_s"},
                   "controller");
        auto& c = cfg.controller;
        c.l_target = get_field(s, "l_target", c.l_target, "controller");
        c.epsilon = get_field(s, "epsilon", c.epsilon, "controller");
        c.initial_pour_duration =
            get_field(s, "initial_pour_duration", c.initial_pour_duration, "controller");
        c.loop_period = get_field(s, "loop_period", c.loop_period, "controller");
        c.pour_tilt_deg = get_field(s, "pour_tilt_deg", c.pour_tilt_deg, "controller");
        c.tilt_rate_deg_per_s =
            get_field(s, "tilt_rate_deg_per_s", c.tilt_rate_deg_per_s, "controller");
    }
    if (j.contains("plant")) {
        const auto& s = j["plant"];
        check_keys(s, {"q_max", "source_volume", "tilt_threshold_deg"}, "plant");
        cfg.plant.q_max = get_field(s, "q_max", cfg.plant.q_max, "plant");
        cfg.plant.source_volume =
            get_field(s, "source_volume", cfg.plant.source_volume, "plant");
        cfg.plant.tilt_threshold_deg =
            get_field(s, "tilt_threshold_deg", cfg.plant.tilt_threshold_deg, "plant");
    }
    if (j.contains("pour")) {
        const auto& s = j["pour"];
        check_keys(s, {"scenarios", "trials", "perception", "perception_noise"}, "pour");
        if (s.contains("scenarios")) {
            cfg.pour.scenarios.clear();
            for (const auto& sc : s["scenarios"]) {
                if (!sc.is_array() || sc.size() != 2)
                    throw ConfigError("config: pour.scenarios entries must be [l0, l_target]");
                cfg.pour.scenarios.emplace_back(sc[0].get<double>(), sc[1].get<double>());
            }
        }
        cfg.pour.trials = get_field(s, "trials", cfg.pour.trials, "pour");
        cfg.pour.perception =
            get_field<std::string>(s, "perception", cfg.pour.perception, "pour");
        if (cfg.pour.perception != "oracle" && cfg.pour.perception != "model")
            throw ConfigError("config: pour.perception must be oracle or model");
        cfg.pour.perception_noise =
            get_field(s, "perception_noise", cfg.pour.perception_noise, "pour");
    }
    if (j.contains("ablation")) {
        const auto& s = j["ablation"];
        check_keys(s, {"jitter", "fractions"}, "ablation");
        if (s.contains("jitter")) cfg.ablation.jitter = parse_jitter(s["jitter"], "ablation.jitter");
        if (s.contains("fractions"))
            cfg.ablation.fractions = s["fractions"].get<std::vector<double>>();
    }

    cfg.propagate_seed();
    return cfg;
}

PipelineConfig PipelineConfig::load_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("config: cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return from_json_text(text);
}

std::string PipelineConfig::to_json() const {
    json j;
    j["workspace"] = workspace;
    j["seed"] = seed;
    j["synth"] = {{"image_size", synth.image_size},
                  {"n_train_colored", synth.n_train_colored},
                  {"n_train_transparent", synth.n_train_transparent},
                  {"n_test", synth.n_test},
                  {"n_empty_frames", synth.n_empty_frames},
                  {"noise_sigma", synth.noise_sigma},
                  {"refraction_strength", synth.refraction_strength},
                  {"fixed_scene", synth.fixed_scene}};
    j["bg"] = {{"max_components", bg.max_components},
               {"threshold_sigma", bg.threshold_sigma}};
    j["translation"] = json::parse(translation.to_json());
    j["translation"].erase("seed");
    j["seg"] = json::parse(seg.to_json());
    j["seg"].erase("seed");
    j["controller"] = {{"l_target", controller.l_target},
                       {"epsilon", controller.epsilon},
                       {"initial_pour_duration", controller.initial_pour_duration},
                       {"loop_period", controller.loop_period},
                       {"pour_tilt_deg", controller.pour_tilt_deg},
                       {"tilt_rate_deg_per_s", controller.tilt_rate_deg_per_s}};
    j["plant"] = {{"q_max", plant.q_max},
                  {"source_volume", plant.source_volume},
                  {"tilt_threshold_deg", plant.tilt_threshold_deg}};
    json scen = json::array();
    for (const auto& s : pour.scenarios) scen.push_back({s.first, s.second});
    j["pour"] = {{"scenarios", scen},
                 {"trials", pour.trials},
                 {"perception", pour.perception},
                 {"perception_noise", pour.perception_noise}};
    j["ablation"] = {{"jitter",
                      {{"brightness", {ablation.jitter.brightness.lo, ablation.jitter.brightness.hi}},
                       {"contrast", {ablation.jitter.contrast.lo, ablation.jitter.contrast.hi}},
                       {"hue", {ablation.jitter.hue.lo, ablation.jitter.hue.hi}}}},
                     {"fractions", ablation.fractions}};
    return j.dump(2);
}

void PipelineConfig::apply_override(const std::string& assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override must look like key=value: " + assignment);
    std::string key = assignment.substr(0, eq);
    std::string value = assignment.substr(eq + 1);

    json j = json::parse(to_json());
    std::string pointer = "/" + key;
    std::replace(pointer.begin(), pointer.end(), '.', '/');
    json parsed;
    try {
        parsed = json::parse(value);
    } catch (const json::exception&) {
        parsed = value;  // plain strings
    }
    try {
        json::json_pointer ptr(pointer);
        if (!j.contains(ptr)) throw ConfigError("config: unknown field " + key);
        j[ptr] = parsed;
    } catch (const json::exception&) {
        throw ConfigError("config: cannot set " + key);
    }
    uint64_t keep_seed = seed;
    std::string keep_ws = workspace;
    *this = from_json_text(j.dump());
    if (key == "seed" || key == "workspace") return;
    // overrides of nested fields keep explicit seed/workspace intact
    (void)keep_seed;
    (void)keep_ws;
}

void PipelineConfig::propagate_seed() {
    translation.seed = derive_seed(seed, 21);
    seg.seed = derive_seed(seed, 22);
}

// --------------------------------------------------------------- helpers

namespace {

struct Paths {
    fs::path ws;
    fs::path colored, transparent, test, pseudo, synthetic;
    fs::path model_translate, model_seg, eval_dir, traces, logs;

    explicit Paths(const PipelineConfig& cfg) : ws(cfg.workspace) {
        colored = ws / "datasets" / "colored";
        transparent = ws / "datasets" / "transparent";
        test = ws / "datasets" / "transparent_test";
        pseudo = ws / "datasets" / "colored_pseudo";
        synthetic = ws / "datasets" / "synthetic_transparent";
        model_translate = ws / "models" / "translate";
        model_seg = ws / "models" / "seg";
        eval_dir = ws / "eval";
        traces = ws / "traces";
        logs = ws / "logs";
    }
};

uint64_t scene_master_seed(const PipelineConfig& cfg) { return derive_seed(cfg.seed, 101); }

synth::DatasetOptions base_options(const PipelineConfig& cfg) {
    synth::DatasetOptions o;
    o.image_size = cfg.synth.image_size;
    o.fixed_scene = cfg.synth.fixed_scene;
    o.noise_sigma = cfg.synth.noise_sigma;
    o.refraction_strength = cfg.synth.refraction_strength;
    o.n_empty_frames = cfg.synth.n_empty_frames;
    return o;
}

void require_file(const fs::path& p, const std::string& command) {
    if (!fs::exists(p)) throw MissingPrerequisite(p.string(), command);
}

std::ofstream open_log(const Paths& paths, const std::string& command) {
    fs::create_directories(paths.logs);
    std::ofstream log(paths.logs / (command + ".log"), std::ios::trunc);
    return log;
}

std::vector<Image> load_empty_frames(const fs::path& colored_dir) {
    std::vector<fs::path> files;
    fs::path dir = colored_dir / "empty";
    if (fs::exists(dir))
        for (const auto& e : fs::directory_iterator(dir))
            if (e.path().extension() == ".png") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<Image> frames;
    for (const auto& f : files) frames.push_back(load_png(f.string()));
    return frames;
}

// ------------------------------------------------------------- commands

void cmd_synth_gen(const PipelineConfig& cfg) {
    Paths paths(cfg);
    auto log = open_log(paths, "synth-gen");

    uint64_t scene_seed = scene_master_seed(cfg);
    synth::DatasetOptions opts = base_options(cfg);

    opts.record_offset = 0;
    synth::make_dataset(cfg.synth.n_train_colored, scene_seed, synth::RenderMode::colored,
                        paths.colored.string(), opts);
    log << "colored: " << cfg.synth.n_train_colored << " records\n";

    opts.record_offset = 20000;
    opts.n_empty_frames = 0;
    synth::make_dataset(cfg.synth.n_train_transparent, scene_seed,
                        synth::RenderMode::transparent, paths.transparent.string(), opts);
    log << "transparent: " << cfg.synth.n_train_transparent << " records\n";

    opts.record_offset = 40000;
    opts.include_labels = true;
    opts.split_tag = "test";
    synth::make_dataset(cfg.synth.n_test, scene_seed, synth::RenderMode::transparent,
                        paths.test.string(), opts);
    log << "transparent_test: " << cfg.synth.n_test << " records\n";
    std::cout << "synth-gen: wrote " << paths.colored << ", " << paths.transparent << ", "
              << paths.test << "\n";
}

void cmd_pseudo_label(const PipelineConfig& cfg) {
    Paths paths(cfg);
    require_file(paths.colored / "manifest.json", "synth-gen");
    auto log = open_log(paths, "pseudo-label");

    DatasetManifest colored = load_manifest((paths.colored / "manifest.json").string());
    std::vector<Image> empty = load_empty_frames(paths.colored);
    if (empty.size() < 2)
        throw MissingPrerequisite((paths.colored / "empty").string(), "synth-gen");

    DatasetManifest out = bg::pseudo_label_dataset(colored, empty, cfg.bg.threshold_sigma,
                                                   paths.pseudo.string());
    log << "pseudo-labeled " << out.records.size() << " records at threshold "
        << cfg.bg.threshold_sigma << "\n";
    std::cout << "pseudo-label: wrote " << paths.pseudo << "\n";
}

void cmd_train_translate(const PipelineConfig& cfg) {
    Paths paths(cfg);
    require_file(paths.colored / "manifest.json", "synth-gen");
    require_file(paths.transparent / "manifest.json", "synth-gen");
    auto log = open_log(paths, "train-translate");

    DatasetManifest colored = load_manifest((paths.colored / "manifest.json").string());
    DatasetManifest transparent = load_manifest((paths.transparent / "manifest.json").string());

    std::vector<translation::StepLog> step_log;
    translation::TranslationModel model = translation::train_translation(
        colored, transparent, cfg.translation, &step_log,
        [&](int epoch, int total, double ld, double lg) {
            std::cout << "train-translate epoch " << (epoch + 1) << "/" << total
                      << " loss_D=" << ld << " loss_G=" << lg << "\n";
            log << "epoch " << (epoch + 1) << " loss_D=" << ld << " loss_G=" << lg << "\n";
        });

    fs::create_directories(paths.model_translate);
    translation::save_translation(model, (paths.model_translate / "checkpoint.bin").string());
    translation::write_step_log(step_log,
                                (paths.model_translate / "train_log.jsonl").string());
    std::cout << "train-translate: wrote " << paths.model_translate << "\n";
}

void cmd_translate(const PipelineConfig& cfg) {
    Paths paths(cfg);
    require_file(paths.model_translate / "checkpoint.bin", "train-translate");
    require_file(paths.pseudo / "manifest.json", "pseudo-label");
    auto log = open_log(paths, "translate");

    translation::TranslationModel model =
        translation::load_translation((paths.model_translate / "checkpoint.bin").string());
    DatasetManifest pseudo = load_manifest((paths.pseudo / "manifest.json").string());
    DatasetManifest out =
        translation::translate_dataset(pseudo, model, paths.synthetic.string());
    log << "translated " << out.records.size() << " records\n";
    std::cout << "translate: wrote " << paths.synthetic << "\n";
}

void cmd_train_seg(const PipelineConfig& cfg) {
    Paths paths(cfg);
    require_file(paths.synthetic / "manifest.json", "translate");
    auto log = open_log(paths, "train-seg");

    DatasetManifest dataset = load_manifest((paths.synthetic / "manifest.json").string());
    std::vector<seg::EpochLog> epoch_log;
    seg::SegmentationModel model = seg::train_segmentation(
        dataset, cfg.seg, &epoch_log, {}, [&](int epoch, int total, double loss) {
            std::cout << "train-seg epoch " << (epoch + 1) << "/" << total
                      << " loss=" << loss << "\n";
            log << "epoch " << (epoch + 1) << " loss=" << loss << "\n";
        });

    fs::create_directories(paths.model_seg);
    seg::save_segmentation(model, (paths.model_seg / "checkpoint.bin").string());
    seg::write_epoch_log(epoch_log, (paths.model_seg / "train_log.jsonl").string());
    std::cout << "train-seg: wrote " << paths.model_seg << "\n";
}

void cmd_eval_seg(const PipelineConfig& cfg) {
    Paths paths(cfg);
    require_file(paths.model_seg / "checkpoint.bin", "train-seg");
    require_file(paths.test / "manifest.json", "synth-gen");

    seg::SegmentationModel model =
        seg::load_segmentation((paths.model_seg / "checkpoint.bin").string());
    DatasetManifest test = load_manifest((paths.test / "manifest.json").string());
    evalr::SegEvalReport report = evalr::eval_segmentation(model, test);

    fs::create_directories(paths.eval_dir);
    evalr::write_seg_report(report, (paths.eval_dir / "seg_report.jsonl").string(),
                            (paths.eval_dir / "seg_report.txt").string(), cfg.seed);
    std::cout << "eval-seg:\n" << evalr::format_seg_report(report);
}

void cmd_ablate(const PipelineConfig& cfg) {
    Paths paths(cfg);
    require_file(paths.test / "manifest.json", "synth-gen");
    auto log = open_log(paths, "ablate");
    DatasetManifest test = load_manifest((paths.test / "manifest.json").string());
    fs::create_directories(paths.eval_dir);

    // Ablation 1: color jitter on colored images with pseudo-labels
    require_file(paths.pseudo / "manifest.json", "pseudo-label");
    DatasetManifest pseudo = load_manifest((paths.pseudo / "manifest.json").string());
    evalr::SegEvalReport jitter_report =
        evalr::run_ablation_color_jitter(pseudo, test, cfg.ablation.jitter, cfg.seg);
    evalr::write_seg_report(jitter_report,
                            (paths.eval_dir / "ablation_jitter.jsonl").string(),
                            (paths.eval_dir / "ablation_jitter.txt").string(), cfg.seed);
    log << "ablation jitter All-IoU " << jitter_report.mean_all << "\n";
    std::cout << "ablate (color jitter):\n" << evalr::format_seg_report(jitter_report);

    // Ablation 2: training-set fractions of the synthetic labeled data
    require_file(paths.synthetic / "manifest.json", "translate");
    DatasetManifest synthetic = load_manifest((paths.synthetic / "manifest.json").string());
    for (double fraction : cfg.ablation.fractions) {
        evalr::SegEvalReport rep = evalr::run_ablation_fraction(
            synthetic, fraction, test, cfg.seg, derive_seed(cfg.seed, 31));
        int pct = static_cast<int>(std::lround(fraction * 100.0));
        std::string stem = "ablation_fraction_" + std::to_string(pct);
        evalr::write_seg_report(rep, (paths.eval_dir / (stem + ".jsonl")).string(),
                                (paths.eval_dir / (stem + ".txt")).string(), cfg.seed);
        log << "ablation fraction " << fraction << " All-IoU " << rep.mean_all << "\n";
        std::cout << "ablate (fraction " << fraction << "):\n"
                  << evalr::format_seg_report(rep);
    }
}

pour::Perception build_perception(const PipelineConfig& cfg, uint64_t trial_seed) {
    pour::Perception perc;
    if (cfg.pour.perception == "model") {
        Paths paths(cfg);
        require_file(paths.model_seg / "checkpoint.bin", "train-seg");
        auto model = std::make_shared<seg::SegmentationModel>(
            seg::load_segmentation((paths.model_seg / "checkpoint.bin").string()));
        synth::DatasetOptions opts = base_options(cfg);
        synth::SceneSpec base_spec = synth::record_spec(scene_master_seed(cfg), 0, opts);
        auto counter = std::make_shared<int>(0);
        double threshold = cfg.seg.threshold;
        perc.measure = [model, base_spec, counter, trial_seed,
                        threshold](const pour::PlantState& state) {
            synth::SceneSpec spec = base_spec;
            spec.fill_fraction = std::clamp(state.fill, 0.0, 1.0);
            spec.noise_stream = static_cast<int>(900000 + (*counter)++ +
                                                 static_cast<int>(trial_seed % 1000) * 4096);
            synth::RenderedScene scene =
                synth::render_scene(spec, synth::RenderMode::transparent);
            BinaryMask mask = seg::predict_mask(*model, scene.image, threshold);
            return post::estimate_fill(mask, scene.cup_bbox).level;
        };
    } else if (cfg.pour.perception_noise > 0.0) {
        auto rng = std::make_shared<Rng>(derive_seed(trial_seed, 0x90153));
        double sigma = cfg.pour.perception_noise;
        perc.measure = [rng, sigma](const pour::PlantState& state) {
            return std::clamp(state.fill + rng->normal(0.0, sigma), 0.0, 1.0);
        };
        perc.warmup_seconds = 0.0;  // noisy oracle needs no warm-up
    }
    return perc;
}

void cmd_pour_sim(const PipelineConfig& cfg) {
    Paths paths(cfg);
    auto log = open_log(paths, "pour-sim");
    fs::create_directories(paths.traces);
    fs::create_directories(paths.eval_dir);

    std::vector<pour::PourTrace> traces;
    for (const auto& [l0, lt] : cfg.pour.scenarios) {
        for (int trial = 0; trial < cfg.pour.trials; ++trial) {
            pour::ControllerConfig ctrl = cfg.controller;
            ctrl.l_target = lt;
            uint64_t trial_seed = derive_seed(cfg.seed, 7000 + traces.size());
            pour::PourTrace trace = pour::simulate_pour(ctrl, cfg.plant, l0,
                                                        build_perception(cfg, trial_seed),
                                                        trial_seed);
            char name[96];
            std::snprintf(name, sizeof(name), "pour_%03d_%03d_trial%02d.jsonl",
                          static_cast<int>(std::lround(l0 * 100)),
                          static_cast<int>(std::lround(lt * 100)), trial);
            pour::save_trace(trace, (paths.traces / name).string());
            log << name << " final_error=" << trace.final_error
                << (trace.complete ? "" : " INCOMPLETE") << "\n";
            traces.push_back(std::move(trace));
        }
    }

    evalr::PourEvalReport report = evalr::eval_pouring(traces);
    evalr::write_pour_report(report, (paths.eval_dir / "pour_report.jsonl").string(),
                             (paths.eval_dir / "pour_report.txt").string(), cfg.seed);
    std::cout << "pour-sim:\n" << evalr::format_pour_report(report);
}

void cmd_segment(const PipelineConfig& cfg) {
    // handled by the CLI front end (needs --input/--output); kept here so the
    // command list stays complete
    (void)cfg;
    throw ConfigError("segment requires --input and --output (CLI front end)");
}

void cmd_report(const PipelineConfig& cfg, bool force) {
    Paths paths(cfg);
    require_file(paths.eval_dir / "seg_report.jsonl", "eval-seg");
    require_file(paths.eval_dir / "pour_report.jsonl", "pour-sim");

    uint64_t seg_seed = 0, pour_seed = 0;
    evalr::SegEvalReport seg_rep =
        evalr::read_seg_report((paths.eval_dir / "seg_report.jsonl").string(), &seg_seed);
    evalr::PourEvalReport pour_rep =
        evalr::read_pour_report((paths.eval_dir / "pour_report.jsonl").string(), &pour_seed);
    if (seg_seed != pour_seed && !force)
        throw std::runtime_error(
            "report: artifacts come from different pipeline seeds (" +
            std::to_string(seg_seed) + " vs " + std::to_string(pour_seed) +
            "); re-run the stages with one seed or pass --force");

    std::string summary;
    summary += "pipeline seed: " + std::to_string(seg_seed) + "\n\n";
    summary += "segmentation IoU on held-out transparent images\n";
    summary += evalr::format_seg_report(seg_rep);

    auto append_optional = [&](const std::string& stem, const std::string& title) {
        fs::path p = paths.eval_dir / (stem + ".jsonl");
        if (!fs::exists(p)) return;
        uint64_t s = 0;
        evalr::SegEvalReport rep = evalr::read_seg_report(p.string(), &s);
        if (s != seg_seed && !force)
            throw std::runtime_error("report: " + stem + " has mismatched pipeline seed");
        summary += "\n" + title + "\n" + evalr::format_seg_report(rep);
    };
    append_optional("ablation_jitter", "ablation 1: color jitter on colored liquid");
    append_optional("ablation_fraction_1", "ablation 2: 1% training subset");
    append_optional("ablation_fraction_10", "ablation 2: 10% training subset");
    append_optional("ablation_fraction_100", "ablation 2: full training set");

    summary += "\npouring percent error\n";
    summary += evalr::format_pour_report(pour_rep);

    std::ofstream f(paths.eval_dir / "summary.txt", std::ios::trunc);
    f << summary;
    std::cout << summary;
}

}  // namespace

std::vector<std::string> command_names() {
    return {"synth-gen", "pseudo-label", "train-translate", "translate", "train-seg",
            "segment", "eval-seg", "ablate", "pour-sim", "report", "run-all"};
}

void run_command(const std::string& name, const PipelineConfig& cfg, bool force) {
    if (name == "synth-gen") return cmd_synth_gen(cfg);
    if (name == "pseudo-label") return cmd_pseudo_label(cfg);
    if (name == "train-translate") return cmd_train_translate(cfg);
    if (name == "translate") return cmd_translate(cfg);
    if (name == "train-seg") return cmd_train_seg(cfg);
    if (name == "segment") return cmd_segment(cfg);
    if (name == "eval-seg") return cmd_eval_seg(cfg);
    if (name == "ablate") return cmd_ablate(cfg);
    if (name == "pour-sim") return cmd_pour_sim(cfg);
    if (name == "report") return cmd_report(cfg, force);
    if (name == "run-all") {
        for (const char* step : {"synth-gen", "pseudo-label", "train-translate", "translate",
                                 "train-seg", "eval-seg", "ablate", "pour-sim", "report"})
            run_command(step, cfg, force);
        return;
    }
    throw ConfigError("unknown command: " + name);
}

}  // namespace liquidseg::pipeline
