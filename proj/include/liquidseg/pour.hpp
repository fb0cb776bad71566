#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace liquidseg::pour {

enum class ControlState { NotPouring, Pouring };

std::string to_string(ControlState s);

struct ControllerConfig {
    double l_target = 0.5;
    double epsilon = 0.01;              // stopping margin
    double initial_pour_duration = 1.0; // seconds of forced pouring
    double loop_period = 0.1;           // 10 Hz
    double pour_tilt_deg = 60.0;
    double tilt_rate_deg_per_s = 60.0;

    void validate() const;
};

struct PlantConfig {
    double q_max = 0.05;             // fill fraction per second at full tilt
    double source_volume = 1.0;      // fill-fraction equivalents available
    double tilt_threshold_deg = 30.0;  // no flow below this tilt
};

struct PlantState {
    double fill = 0.0;  // true fill fraction l
    double tilt_deg = 0.0;
    double source = 1.0;
};

struct ControllerDecision {
    ControlState state = ControlState::NotPouring;
    bool latched = false;
};

// Bang-bang rule: forced pouring for the initial window, then NotPouring as
// soon as l_hat >= l_target - epsilon, latched for the rest of the episode.
ControllerDecision controller_step(double l_hat, double t, const ControllerConfig& cfg,
                                   bool latched_stop);

// Tilt moves toward the commanded angle at the configured rate; inflow is
// linear in tilt beyond the threshold, integrated with the step-average tilt
// so ramp segments integrate exactly. Fill and source are clamped.
PlantState plant_step(const PlantState& state, ControlState cmd, double dt,
                      const ControllerConfig& cfg, const PlantConfig& plant);

struct TracePoint {
    double t = 0.0;
    ControlState state = ControlState::NotPouring;
    double l_true = 0.0;
    double l_hat = 0.0;
};

struct PourTrace {
    std::vector<TracePoint> points;
    double initial_fill = 0.0;
    double l_target = 0.0;
    double final_fill = 0.0;
    double final_error = 0.0;  // final_fill - l_target
    bool complete = false;
    std::string config_echo;  // JSON
    uint64_t seed = 0;
};

// Measurement hook for the closed-loop perception path; the simulator
// substitutes the oracle during the first warmup_seconds of the episode.
struct Perception {
    std::function<double(const PlantState&)> measure;  // unset: oracle
    double warmup_seconds = 2.0;
};

PourTrace simulate_pour(const ControllerConfig& cfg, const PlantConfig& plant_cfg,
                        double initial_fill, const Perception& perception,
                        uint64_t seed);

void save_trace(const PourTrace& trace, const std::string& path);
PourTrace load_trace(const std::string& path);

}  // namespace liquidseg::pour
