#include "liquidseg/pour.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

using nlohmann::json;

namespace liquidseg::pour {

std::string to_string(ControlState s) {
    return s == ControlState::Pouring ? "Pouring" : "NotPouring";
}

void ControllerConfig::validate() const {
    if (l_target < 0.0 || l_target > 1.0)
        throw std::invalid_argument("controller: l_target must lie in [0,1]");
    if (epsilon <= 0.0 || epsilon >= 1.0)
        throw std::invalid_argument("controller: epsilon must lie in (0,1)");
    if (loop_period <= 0.0) throw std::invalid_argument("controller: loop_period must be > 0");
    if (tilt_rate_deg_per_s <= 0.0)
        throw std::invalid_argument("controller: tilt rate must be > 0");
    if (pour_tilt_deg <= 0.0) throw std::invalid_argument("controller: pour tilt must be > 0");
}

ControllerDecision controller_step(double l_hat, double t, const ControllerConfig& cfg,
                                   bool latched_stop) {
    if (l_hat < 0.0 || l_hat > 1.0)
        throw std::invalid_argument("controller_step: l_hat must lie in [0,1]");
    if (latched_stop) return {ControlState::NotPouring, true};
    if (t < cfg.initial_pour_duration) return {ControlState::Pouring, false};
    if (l_hat >= cfg.l_target - cfg.epsilon) return {ControlState::NotPouring, true};
    return {ControlState::Pouring, false};
}

PlantState plant_step(const PlantState& state, ControlState cmd, double dt,
                      const ControllerConfig& cfg, const PlantConfig& plant) {
    if (dt <= 0.0) throw std::invalid_argument("plant_step: dt must be > 0");

    PlantState next = state;
    double target = cmd == ControlState::Pouring ? cfg.pour_tilt_deg : 0.0;
    double max_delta = cfg.tilt_rate_deg_per_s * dt;
    double delta = std::clamp(target - state.tilt_deg, -max_delta, max_delta);
    next.tilt_deg = state.tilt_deg + delta;

    double tilt_eff = 0.5 * (state.tilt_deg + next.tilt_deg);
    double denom = cfg.pour_tilt_deg - plant.tilt_threshold_deg;
    double frac = denom > 0.0
                      ? std::max(0.0, (tilt_eff - plant.tilt_threshold_deg) / denom)
                      : 0.0;
    double inflow = plant.q_max * frac * dt;
    inflow = std::min({inflow, next.source, 1.0 - next.fill});
    inflow = std::max(inflow, 0.0);
    next.fill += inflow;
    next.source -= inflow;
    return next;
}

PourTrace simulate_pour(const ControllerConfig& cfg, const PlantConfig& plant_cfg,
                        double initial_fill, const Perception& perception, uint64_t seed) {
    cfg.validate();
    if (initial_fill < 0.0 || initial_fill > 1.0)
        throw std::invalid_argument("simulate_pour: initial fill must lie in [0,1]");

    PourTrace trace;
    trace.initial_fill = initial_fill;
    trace.l_target = cfg.l_target;
    trace.seed = seed;
    {
        json echo;
        echo["l_target"] = cfg.l_target;
        echo["epsilon"] = cfg.epsilon;
        echo["initial_pour_duration"] = cfg.initial_pour_duration;
        echo["loop_period"] = cfg.loop_period;
        echo["pour_tilt_deg"] = cfg.pour_tilt_deg;
        echo["tilt_rate_deg_per_s"] = cfg.tilt_rate_deg_per_s;
        echo["q_max"] = plant_cfg.q_max;
        echo["source_volume"] = plant_cfg.source_volume;
        echo["tilt_threshold_deg"] = plant_cfg.tilt_threshold_deg;
        echo["initial_fill"] = initial_fill;
        echo["seed"] = seed;
        trace.config_echo = echo.dump();
    }

    PlantState state;
    state.fill = initial_fill;
    state.source = plant_cfg.source_volume;

    bool latched = false;
    double t = 0.0;
    const double t_max = 600.0;
    bool exhausted = false;

    while (t < t_max) {
        double l_hat = state.fill;  // oracle
        if (perception.measure && t >= perception.warmup_seconds)
            l_hat = std::clamp(perception.measure(state), 0.0, 1.0);

        ControllerDecision dec = controller_step(l_hat, t, cfg, latched);
        latched = dec.latched;
        trace.points.push_back({t, dec.state, state.fill, l_hat});

        state = plant_step(state, dec.state, cfg.loop_period, cfg, plant_cfg);
        t += cfg.loop_period;

        if (latched && state.tilt_deg <= 0.0) break;
        if (!latched && state.source <= 1e-12 && state.tilt_deg >= cfg.pour_tilt_deg) {
            exhausted = true;
            break;
        }
    }

    trace.final_fill = state.fill;
    trace.final_error = state.fill - cfg.l_target;
    trace.complete = !exhausted && t < t_max;
    return trace;
}

void save_trace(const PourTrace& trace, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("pour: cannot write trace " + path);
    json header;
    header["config"] = json::parse(trace.config_echo);
    header["initial_fill"] = trace.initial_fill;
    header["l_target"] = trace.l_target;
    header["seed"] = trace.seed;
    f << header.dump() << "\n";
    for (const auto& p : trace.points) {
        json j;
        j["t"] = p.t;
        j["state"] = to_string(p.state);
        j["l_true"] = p.l_true;
        j["l_hat"] = p.l_hat;
        f << j.dump() << "\n";
    }
    json footer;
    footer["final_fill"] = trace.final_fill;
    footer["final_error"] = trace.final_error;
    footer["complete"] = trace.complete;
    f << footer.dump() << "\n";
}

PourTrace load_trace(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("pour: cannot open trace " + path);
    PourTrace trace;
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("pour: empty trace " + path);
    json header = json::parse(line);
    trace.config_echo = header.at("config").dump();
    trace.initial_fill = header.value("initial_fill", 0.0);
    trace.l_target = header.value("l_target", 0.0);
    trace.seed = header.value("seed", uint64_t{0});

    std::vector<std::string> lines;
    while (std::getline(f, line))
        if (!line.empty()) lines.push_back(line);
    if (lines.empty()) throw std::runtime_error("pour: truncated trace " + path);

    json footer = json::parse(lines.back());
    trace.final_fill = footer.at("final_fill").get<double>();
    trace.final_error = footer.at("final_error").get<double>();
    trace.complete = footer.at("complete").get<bool>();

    for (size_t i = 0; i + 1 < lines.size(); ++i) {
        json j = json::parse(lines[i]);
        TracePoint p;
        p.t = j.at("t").get<double>();
        p.state = j.at("state").get<std::string>() == "Pouring" ? ControlState::Pouring
                                                                : ControlState::NotPouring;
        p.l_true = j.at("l_true").get<double>();
        p.l_hat = j.at("l_hat").get<double>();
        trace.points.push_back(p);
    }
    return trace;
}

}  // namespace liquidseg::pour
