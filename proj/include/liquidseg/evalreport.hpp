#pragma once

#include <optional>
#include <string>
#include <vector>

#include "liquidseg/manifest.hpp"
#include "liquidseg/pour.hpp"
#include "liquidseg/segmentation.hpp"

namespace liquidseg::evalr {

enum class FillCategory { Low, Medium, High };

std::string to_string(FillCategory c);

// Low: f < 1/3, Medium: 1/3 <= f < 2/3, High: otherwise
FillCategory fill_category(double fill_fraction);

struct RecordIou {
    std::string image_id;
    double iou = 0.0;
    FillCategory category = FillCategory::Low;
};

struct SegEvalReport {
    std::vector<RecordIou> records;
    double mean_all = 0.0;
    double mean_by_category[3] = {0.0, 0.0, 0.0};
    int count_by_category[3] = {0, 0, 0};

    void finalize();  // recompute means from records
};

// predict, score against ground-truth masks, group by fill category
SegEvalReport eval_segmentation(seg::SegmentationModel& model, const DatasetManifest& test);

struct ScenarioError {
    double initial_fill = 0.0;
    double l_target = 0.0;
    std::vector<double> percent_errors;  // 100 * |l_final - l_target|
    double rmse = 0.0;
    double stddev = 0.0;  // population std of the percent errors
};

struct PourEvalReport {
    std::vector<ScenarioError> scenarios;
    ScenarioError all;  // aggregate row
};

PourEvalReport eval_pouring(const std::vector<pour::PourTrace>& traces);

// Ablation 1: train on jittered colored images with their (pseudo) masks and
// evaluate on the transparent test set.
SegEvalReport run_ablation_color_jitter(const DatasetManifest& colored_with_masks,
                                        const DatasetManifest& test,
                                        const JitterConfig& jitter,
                                        const seg::SegTrainConfig& seg_cfg);

// Ablation 2: train on a seeded subsample of the synthetic labeled dataset.
// fraction == 1.0 reproduces the full-pipeline training exactly.
SegEvalReport run_ablation_fraction(const DatasetManifest& synthetic_labeled,
                                    double fraction, const DatasetManifest& test,
                                    const seg::SegTrainConfig& seg_cfg, uint64_t seed);

std::string format_seg_report(const SegEvalReport& report);
std::string format_pour_report(const PourEvalReport& report);

void write_seg_report(const SegEvalReport& report, const std::string& jsonl_path,
                      const std::string& table_path, uint64_t pipeline_seed);
void write_pour_report(const PourEvalReport& report, const std::string& jsonl_path,
                       const std::string& table_path, uint64_t pipeline_seed);

SegEvalReport read_seg_report(const std::string& jsonl_path, uint64_t* pipeline_seed);
PourEvalReport read_pour_report(const std::string& jsonl_path, uint64_t* pipeline_seed);

}  // namespace liquidseg::evalr
