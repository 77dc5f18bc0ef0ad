/*
 * Copyright (c) 2026, the msdis authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "msdis/common.hpp"
#include "msdis/detector.hpp"
#include "msdis/geometry.hpp"
#include "msdis/harness.hpp"
#include "msdis/scene.hpp"
#include "msdis/waveform.hpp"

namespace msdis {

struct TargetSpec {
    double x = 0.0;
    double y = 0.0;
    double snr_db = 0.0;
};

/// Complete description of one simulated setup: geometry, waveform, search
/// grids, scene, detector knobs, and experiment sizes. Everything a command
/// needs is derived from this plus a master seed.
struct ScenarioConfig {
    std::vector<Vec2> tx_positions;
    std::vector<Vec2> rx_positions;

    double pulse_duration = 6.4e-6;
    int code_length = 64;
    double bandwidth = 1e7;
    double sample_interval = 5e-8;
    double filter_support = 0.0;  // nonpositive means one chip
    std::uint64_t code_seed = 1;

    double xmin = 0.0, xmax = 0.0, ymin = 0.0, ymax = 0.0;
    double grid_spacing = 10.0;
    double fine_spacing = 0.05;

    std::vector<TargetSpec> targets;
    double noise_variance = 1.0;

    int k_max = 5;
    double epsilon = 0.0;  // nonpositive means the noise-scaled default
    bool mitigation = true;

    double target_pfa = 0.05;
    int calibration_trials = 2000;

    std::vector<double> snr_sweep_db;
    int trials = 500;
    double association_radius = 0.0;  // nonpositive means one resolution cell

    std::uint64_t seed = 1;

    void validate() const {
        if (tx_positions.empty() || rx_positions.empty())
            throw UsageError("scenario needs at least one transmitter and one receiver");
        if (!(xmax >= xmin) || !(ymax >= ymin)) throw UsageError("grid bounding box is empty");
        if (!(target_pfa > 0.0 && target_pfa < 1.0)) throw UsageError("target_pfa must lie in (0, 1)");
        if (calibration_trials < 100) throw UsageError("calibration needs at least 100 trials");
        if (trials < 1) throw UsageError("trials must be at least 1");
        if (k_max < 1) throw UsageError("k_max must be at least 1");
    }
};

inline nlohmann::json scenario_to_json(const ScenarioConfig& cfg) {
    nlohmann::json j;
    auto points = [](const std::vector<Vec2>& v) {
        nlohmann::json out = nlohmann::json::array();
        for (const Vec2& p : v) out.push_back({p.x(), p.y()});
        return out;
    };
    j["layout"] = {{"tx", points(cfg.tx_positions)}, {"rx", points(cfg.rx_positions)}};
    j["waveform"] = {{"pulse_duration", cfg.pulse_duration}, {"code_length", cfg.code_length},
                     {"bandwidth", cfg.bandwidth},           {"sample_interval", cfg.sample_interval},
                     {"filter_support", cfg.filter_support}, {"code_seed", cfg.code_seed}};
    j["grid"] = {{"xmin", cfg.xmin},       {"xmax", cfg.xmax},
                 {"ymin", cfg.ymin},       {"ymax", cfg.ymax},
                 {"spacing", cfg.grid_spacing}, {"fine_spacing", cfg.fine_spacing}};
    j["targets"] = nlohmann::json::array();
    for (const TargetSpec& t : cfg.targets)
        j["targets"].push_back({{"x", t.x}, {"y", t.y}, {"snr_db", t.snr_db}});
    j["noise"] = {{"variance", cfg.noise_variance}};
    j["detector"] = {{"k_max", cfg.k_max}, {"epsilon", cfg.epsilon}, {"mitigation", cfg.mitigation}};
    j["calibration"] = {{"target_pfa", cfg.target_pfa}, {"trials", cfg.calibration_trials}};
    j["experiment"] = {{"snr_sweep_db", cfg.snr_sweep_db},
                       {"trials", cfg.trials},
                       {"association_radius", cfg.association_radius}};
    j["seed"] = cfg.seed;
    return j;
}

inline ScenarioConfig scenario_from_json(const nlohmann::json& j) {
    ScenarioConfig cfg;
    try {
        auto points = [](const nlohmann::json& arr) {
            std::vector<Vec2> out;
            for (const auto& p : arr) out.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
            return out;
        };
        cfg.tx_positions = points(j.at("layout").at("tx"));
        cfg.rx_positions = points(j.at("layout").at("rx"));
        const auto& wf = j.at("waveform");
        cfg.pulse_duration = wf.at("pulse_duration").get<double>();
        cfg.code_length = wf.at("code_length").get<int>();
        cfg.bandwidth = wf.at("bandwidth").get<double>();
        cfg.sample_interval = wf.at("sample_interval").get<double>();
        cfg.filter_support = wf.value("filter_support", 0.0);
        cfg.code_seed = wf.at("code_seed").get<std::uint64_t>();
        const auto& grid = j.at("grid");
        cfg.xmin = grid.at("xmin").get<double>();
        cfg.xmax = grid.at("xmax").get<double>();
        cfg.ymin = grid.at("ymin").get<double>();
        cfg.ymax = grid.at("ymax").get<double>();
        cfg.grid_spacing = grid.at("spacing").get<double>();
        cfg.fine_spacing = grid.at("fine_spacing").get<double>();
        cfg.targets.clear();
        for (const auto& t : j.at("targets"))
            cfg.targets.push_back({t.at("x").get<double>(), t.at("y").get<double>(),
                                   t.at("snr_db").get<double>()});
        cfg.noise_variance = j.at("noise").at("variance").get<double>();
        const auto& det = j.at("detector");
        cfg.k_max = det.at("k_max").get<int>();
        cfg.epsilon = det.value("epsilon", 0.0);
        cfg.mitigation = det.value("mitigation", true);
        const auto& cal = j.at("calibration");
        cfg.target_pfa = cal.at("target_pfa").get<double>();
        cfg.calibration_trials = cal.at("trials").get<int>();
        const auto& exp = j.at("experiment");
        cfg.snr_sweep_db = exp.at("snr_sweep_db").get<std::vector<double>>();
        cfg.trials = exp.at("trials").get<int>();
        cfg.association_radius = exp.value("association_radius", 0.0);
        cfg.seed = j.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("bad scenario config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

inline std::string serialize_scenario(const ScenarioConfig& cfg) {
    return scenario_to_json(cfg).dump(2) + "\n";
}

inline ScenarioConfig parse_scenario(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("config is not valid JSON: ") + e.what());
    }
    return scenario_from_json(j);
}

/// Builds the full detection context a scenario describes. The fine lattice
/// extends one resolution cell beyond the coarse box so robustness balls
/// around edge detections stay populated.
inline DetectorContext make_scenario_context(const ScenarioConfig& cfg) {
    cfg.validate();
    RadarLayout layout;
    layout.tx_positions = cfg.tx_positions;
    layout.rx_positions = cfg.rx_positions;
    WaveformConfig wf = make_waveform_config(cfg.pulse_duration, cfg.code_length, cfg.bandwidth,
                                             cfg.sample_interval, cfg.filter_support);
    wf.validate(layout.num_tx());
    PhaseCodeBank bank = generate_codes(layout.num_tx(), wf.code_length, cfg.code_seed);
    SearchGrid grid = make_search_grid(cfg.xmin, cfg.xmax, cfg.ymin, cfg.ymax, cfg.grid_spacing);
    const double margin = layout.propagation_speed / wf.bandwidth;
    FineGrid fine = make_fine_grid(cfg.xmin - margin, cfg.xmax + margin, cfg.ymin - margin,
                                   cfg.ymax + margin, cfg.fine_spacing, cfg.grid_spacing);
    SampleWindow window = make_window(wf, delay_window(layout, grid));
    auto noise = std::make_shared<NoiseModel>(
        make_white_noise(layout.num_rx(), window.m_samples, cfg.noise_variance));
    return make_detector_context(layout, wf, bank, grid, fine, std::move(noise));
}

/// Experiment plan for one detector at the scenario's scene. Per-target SNR
/// offsets are taken relative to the first target, which is the one scored.
inline ExperimentSpec make_experiment(const ScenarioConfig& cfg, DetectorKind kind, double eta,
                                      double mf_threshold) {
    if (cfg.targets.empty()) throw UsageError("scenario lists no targets");
    ExperimentSpec spec;
    spec.detector = kind;
    for (const TargetSpec& t : cfg.targets) {
        spec.targets.emplace_back(t.x, t.y);
        spec.snr_offsets_db.push_back(t.snr_db - cfg.targets[0].snr_db);
    }
    spec.snr_sweep_db = cfg.snr_sweep_db;
    spec.trials = cfg.trials;
    spec.association_radius = cfg.association_radius;
    spec.gic.eta = eta;
    spec.gic.k_max = cfg.k_max;
    spec.gic.epsilon = cfg.epsilon;
    spec.gic.mitigation_enabled = cfg.mitigation;
    spec.baseline.mf_threshold = mf_threshold;
    spec.baseline.sic_max_iterations = cfg.k_max;
    spec.seed = cfg.seed;
    return spec;
}

}  // namespace msdis
