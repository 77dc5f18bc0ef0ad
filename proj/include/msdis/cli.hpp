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
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "msdis/baselines.hpp"
#include "msdis/calibration.hpp"
#include "msdis/common.hpp"
#include "msdis/config.hpp"
#include "msdis/harness.hpp"
#include "msdis/io.hpp"

namespace msdis {

namespace detail {

inline void emit(const std::string& out_path, const std::string& content) {
    if (out_path.empty())
        std::cout << content;
    else
        write_text_file(out_path, content);
}

inline std::uint64_t pick_seed(const ScenarioConfig& cfg, std::int64_t override_seed) {
    return override_seed >= 0 ? static_cast<std::uint64_t>(override_seed) : cfg.seed;
}

}  // namespace detail

/// Entry point behind the binary: parses one subcommand and runs it.
/// Returns 0 on success, 2 on usage or config errors, 3 on numerical
/// failures.
inline int cli_main(int argc, char** argv) {
    CLI::App app{"Distributed MIMO radar detection simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string eta_path;
    std::string out_path;
    std::int64_t seed_override = -1;
    int threads = 1;
    std::string detector_name = "msdis";
    std::vector<std::string> detector_list;

    CLI::App* calibrate = app.add_subcommand("calibrate", "Monte Carlo thresholds for all detectors");
    calibrate->add_option("--config", config_path, "scenario config (JSON)")->required();
    calibrate->add_option("--out", out_path, "output file (default: stdout)");
    calibrate->add_option("--seed", seed_override, "override the scenario master seed");
    calibrate->callback([&]() {
        const ScenarioConfig cfg = parse_scenario(read_text_file(config_path));
        const DetectorContext ctx = make_scenario_context(cfg);
        const std::uint64_t seed = detail::pick_seed(cfg, seed_override);
        CalibrationFile file;
        file.result = calibrate_eta(ctx, cfg.target_pfa, cfg.calibration_trials, seed);
        file.mf_threshold = calibrate_mf_threshold(ctx, cfg.target_pfa, cfg.calibration_trials, seed);
        detail::emit(out_path, serialize_calibration(file));
    });

    CLI::App* detect = app.add_subcommand("detect", "Run one detector on one synthesized trial");
    detect->add_option("--config", config_path, "scenario config (JSON)")->required();
    detect->add_option("--eta", eta_path, "calibration file from 'calibrate'")->required();
    detect->add_option("--detector", detector_name, "msdis, jdl-sic, or glrt-cd");
    detect->add_option("--seed", seed_override, "override the scenario master seed");
    detect->add_option("--out", out_path, "output file (default: stdout)");
    detect->callback([&]() {
        ScenarioConfig cfg = parse_scenario(read_text_file(config_path));
        cfg.seed = detail::pick_seed(cfg, seed_override);
        const DetectorContext ctx = make_scenario_context(cfg);
        const CalibrationFile cal = parse_calibration(read_text_file(eta_path));
        const DetectorKind kind = parse_detector_kind(detector_name);
        const ExperimentSpec spec = make_experiment(cfg, kind, cal.result.eta, cal.mf_threshold);
        const DetectionReport report = run_single(ctx, spec, cfg.targets[0].snr_db, 0);
        detail::emit(out_path, report_to_json(report).dump(2) + "\n");
    });

    CLI::App* sweep = app.add_subcommand("sweep", "Monte Carlo SNR sweep, CSV per detector");
    sweep->add_option("--config", config_path, "scenario config (JSON)")->required();
    sweep->add_option("--eta", eta_path, "calibration file from 'calibrate'")->required();
    sweep->add_option("--detector", detector_list, "detectors to sweep (default: all three)");
    sweep->add_option("--seed", seed_override, "override the scenario master seed");
    sweep->add_option("--out", out_path, "output directory")->required();
    sweep->add_option("--threads", threads, "worker threads (0 = hardware)");
    sweep->callback([&]() {
        ScenarioConfig cfg = parse_scenario(read_text_file(config_path));
        cfg.seed = detail::pick_seed(cfg, seed_override);
        const DetectorContext ctx = make_scenario_context(cfg);
        const CalibrationFile cal = parse_calibration(read_text_file(eta_path));
        if (detector_list.empty()) detector_list = {"msdis", "jdl-sic", "glrt-cd"};
        std::filesystem::create_directories(out_path);
        for (const std::string& name : detector_list) {
            const DetectorKind kind = parse_detector_kind(name);
            const ExperimentSpec spec = make_experiment(cfg, kind, cal.result.eta, cal.mf_threshold);
            const SweepResult result = run_sweep(ctx, spec, threads);
            const std::filesystem::path dir(out_path);
            write_text_file((dir / ("sweep_" + name + ".csv")).string(), metrics_csv(result.rows));
            write_text_file((dir / ("records_" + name + ".jsonl")).string(),
                            records_jsonl(result.records));
        }
    });

    CLI::App* scoremap = app.add_subcommand("scoremap", "Per-iteration score maps for both detectors");
    scoremap->add_option("--config", config_path, "scenario config (JSON)")->required();
    scoremap->add_option("--eta", eta_path, "calibration file from 'calibrate'")->required();
    scoremap->add_option("--seed", seed_override, "override the scenario master seed");
    scoremap->add_option("--out", out_path, "output file (default: stdout)");
    scoremap->callback([&]() {
        ScenarioConfig cfg = parse_scenario(read_text_file(config_path));
        cfg.seed = detail::pick_seed(cfg, seed_override);
        const DetectorContext ctx = make_scenario_context(cfg);
        const CalibrationFile cal = parse_calibration(read_text_file(eta_path));
        const ExperimentSpec spec =
            make_experiment(cfg, DetectorKind::msdis, cal.result.eta, cal.mf_threshold);
        const ScoreMapBundle bundle = capture_score_maps(ctx, spec, cfg.targets[0].snr_db, 0);
        detail::emit(out_path, scoremap_to_json(bundle, ctx.grid).dump(2) + "\n");
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}

}  // namespace msdis
