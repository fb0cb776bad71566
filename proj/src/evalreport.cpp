#include "liquidseg/evalreport.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>

#include "json.hpp"
#include "liquidseg/png_io.hpp"

using nlohmann::json;

namespace liquidseg::evalr {

std::string to_string(FillCategory c) {
    switch (c) {
        case FillCategory::Low: return "Low";
        case FillCategory::Medium: return "Medium";
        default: return "High";
    }
}

FillCategory fill_category(double f) {
    if (f < 0.0 || f > 1.0)
        throw std::invalid_argument("fill_category: fraction outside [0,1]");
    if (f < 1.0 / 3.0) return FillCategory::Low;
    if (f < 2.0 / 3.0) return FillCategory::Medium;
    return FillCategory::High;
}

void SegEvalReport::finalize() {
    double sum = 0.0;
    double cat_sum[3] = {0.0, 0.0, 0.0};
    for (int i = 0; i < 3; ++i) count_by_category[i] = 0;
    for (const auto& r : records) {
        sum += r.iou;
        int c = static_cast<int>(r.category);
        cat_sum[c] += r.iou;
        ++count_by_category[c];
    }
    mean_all = records.empty() ? 0.0 : sum / static_cast<double>(records.size());
    for (int i = 0; i < 3; ++i)
        mean_by_category[i] =
            count_by_category[i] ? cat_sum[i] / count_by_category[i] : 0.0;
}

SegEvalReport eval_segmentation(seg::SegmentationModel& model, const DatasetManifest& test) {
    SegEvalReport report;
    for (const auto& r : test.records) {
        if (!r.mask_path || !r.fill_fraction)
            throw std::invalid_argument("eval_segmentation: record " + r.image_id +
                                        " missing mask or fill fraction");
        Image img = load_png(test.resolve(r.image_path));
        BinaryMask truth = load_mask_png(test.resolve(*r.mask_path));
        BinaryMask pred = seg::predict_mask(model, img, model.cfg.threshold);
        report.records.push_back(
            {r.image_id, iou(pred, truth), fill_category(*r.fill_fraction)});
    }
    report.finalize();
    return report;
}

namespace {

void finalize_scenario(ScenarioError& s) {
    double sq = 0.0, mean = 0.0;
    for (double e : s.percent_errors) {
        sq += e * e;
        mean += e;
    }
    const double n = static_cast<double>(s.percent_errors.size());
    s.rmse = std::sqrt(sq / n);
    mean /= n;
    double var = 0.0;
    for (double e : s.percent_errors) var += (e - mean) * (e - mean);
    s.stddev = std::sqrt(var / n);
}

}  // namespace

PourEvalReport eval_pouring(const std::vector<pour::PourTrace>& traces) {
    if (traces.empty()) throw std::invalid_argument("eval_pouring: no traces");
    for (const auto& t : traces)
        if (!t.complete)
            throw std::invalid_argument("eval_pouring: incomplete trace in input");

    PourEvalReport report;
    std::map<std::pair<double, double>, ScenarioError> groups;
    for (const auto& t : traces) {
        double e = 100.0 * std::abs(t.final_fill - t.l_target);
        auto key = std::make_pair(t.initial_fill, t.l_target);
        auto& s = groups[key];
        s.initial_fill = t.initial_fill;
        s.l_target = t.l_target;
        s.percent_errors.push_back(e);
        report.all.percent_errors.push_back(e);
    }
    for (auto& [key, s] : groups) {
        finalize_scenario(s);
        report.scenarios.push_back(s);
    }
    finalize_scenario(report.all);
    return report;
}

SegEvalReport run_ablation_color_jitter(const DatasetManifest& colored_with_masks,
                                        const DatasetManifest& test,
                                        const JitterConfig& jitter,
                                        const seg::SegTrainConfig& seg_cfg) {
    seg::TrainAugment augment;
    augment.enabled = true;
    augment.jitter = jitter;
    seg::SegmentationModel model =
        seg::train_segmentation(colored_with_masks, seg_cfg, nullptr, augment);
    return eval_segmentation(model, test);
}

SegEvalReport run_ablation_fraction(const DatasetManifest& synthetic_labeled,
                                    double fraction, const DatasetManifest& test,
                                    const seg::SegTrainConfig& seg_cfg, uint64_t seed) {
    const int n = static_cast<int>(synthetic_labeled.records.size());
    DatasetManifest subset = synthetic_labeled;
    if (fraction < 1.0) {
        int count = static_cast<int>(std::llround(fraction * n));
        if (count < 1)
            throw std::invalid_argument("run_ablation_fraction: empty subsample");
        Rng rng(derive_seed(seed, 0xAB2));
        std::vector<int> chosen = rng.sample_without_replacement(n, count);
        std::sort(chosen.begin(), chosen.end());
        subset.records.clear();
        for (int i : chosen) subset.records.push_back(synthetic_labeled.records[i]);
    }
    seg::SegmentationModel model = seg::train_segmentation(subset, seg_cfg);
    return eval_segmentation(model, test);
}

std::string format_seg_report(const SegEvalReport& report) {
    char buf[160];
    std::string out;
    out += "  category    count   mean IoU\n";
    const char* names[3] = {"Low", "Medium", "High"};
    for (int i = 0; i < 3; ++i) {
        if (report.count_by_category[i])
            std::snprintf(buf, sizeof(buf), "  %-10s %6d   %8.4f\n", names[i],
                          report.count_by_category[i], report.mean_by_category[i]);
        else
            std::snprintf(buf, sizeof(buf), "  %-10s %6d   %8s\n", names[i], 0, "-");
        out += buf;
    }
    std::snprintf(buf, sizeof(buf), "  %-10s %6zu   %8.4f\n", "All",
                  report.records.size(), report.mean_all);
    out += buf;
    return out;
}

std::string format_pour_report(const PourEvalReport& report) {
    char buf[160];
    std::string out;
    out += "  scenario            trials   RMSE%%    std%%\n";
    auto line = [&](const ScenarioError& s, const std::string& name) {
        std::snprintf(buf, sizeof(buf), "  %-18s %6zu   %6.3f   %6.3f\n", name.c_str(),
                      s.percent_errors.size(), s.rmse, s.stddev);
        out += buf;
    };
    for (const auto& s : report.scenarios) {
        std::snprintf(buf, sizeof(buf), "%.0f%% -> %.0f%%", 100.0 * s.initial_fill,
                      100.0 * s.l_target);
        line(s, buf);
    }
    line(report.all, "All");
    return out;
}

void write_seg_report(const SegEvalReport& report, const std::string& jsonl_path,
                      const std::string& table_path, uint64_t pipeline_seed) {
    std::ofstream f(jsonl_path, std::ios::trunc);
    if (!f) throw std::runtime_error("eval: cannot write " + jsonl_path);
    json header;
    header["kind"] = "seg_eval";
    header["pipeline_seed"] = pipeline_seed;
    f << header.dump() << "\n";
    for (const auto& r : report.records) {
        json j;
        j["image_id"] = r.image_id;
        j["iou"] = r.iou;
        j["category"] = to_string(r.category);
        f << j.dump() << "\n";
    }
    std::ofstream t(table_path, std::ios::trunc);
    t << format_seg_report(report);
}

void write_pour_report(const PourEvalReport& report, const std::string& jsonl_path,
                       const std::string& table_path, uint64_t pipeline_seed) {
    std::ofstream f(jsonl_path, std::ios::trunc);
    if (!f) throw std::runtime_error("eval: cannot write " + jsonl_path);
    json header;
    header["kind"] = "pour_eval";
    header["pipeline_seed"] = pipeline_seed;
    f << header.dump() << "\n";
    for (const auto& s : report.scenarios) {
        json j;
        j["initial_fill"] = s.initial_fill;
        j["l_target"] = s.l_target;
        j["percent_errors"] = s.percent_errors;
        j["rmse"] = s.rmse;
        j["stddev"] = s.stddev;
        f << j.dump() << "\n";
    }
    std::ofstream t(table_path, std::ios::trunc);
    t << format_pour_report(report);
}

SegEvalReport read_seg_report(const std::string& jsonl_path, uint64_t* pipeline_seed) {
    std::ifstream f(jsonl_path);
    if (!f) throw std::runtime_error("eval: cannot open " + jsonl_path);
    SegEvalReport report;
    std::string line;
    bool first = true;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        if (first) {
            first = false;
            if (pipeline_seed) *pipeline_seed = j.value("pipeline_seed", uint64_t{0});
            continue;
        }
        RecordIou r;
        r.image_id = j.at("image_id").get<std::string>();
        r.iou = j.at("iou").get<double>();
        std::string cat = j.at("category").get<std::string>();
        r.category = cat == "Low" ? FillCategory::Low
                     : cat == "Medium" ? FillCategory::Medium
                                       : FillCategory::High;
        report.records.push_back(r);
    }
    report.finalize();
    return report;
}

PourEvalReport read_pour_report(const std::string& jsonl_path, uint64_t* pipeline_seed) {
    std::ifstream f(jsonl_path);
    if (!f) throw std::runtime_error("eval: cannot open " + jsonl_path);
    PourEvalReport report;
    std::string line;
    bool first = true;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        if (first) {
            first = false;
            if (pipeline_seed) *pipeline_seed = j.value("pipeline_seed", uint64_t{0});
            continue;
        }
        ScenarioError s;
        s.initial_fill = j.at("initial_fill").get<double>();
        s.l_target = j.at("l_target").get<double>();
        s.percent_errors = j.at("percent_errors").get<std::vector<double>>();
        finalize_scenario(s);
        report.scenarios.push_back(s);
        for (double e : s.percent_errors) report.all.percent_errors.push_back(e);
    }
    if (!report.all.percent_errors.empty()) finalize_scenario(report.all);
    return report;
}

}  // namespace liquidseg::evalr
