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

// Shared desk-scale scenario used by the detector, calibration, baseline and
// harness tests: a 2x2 layout on a 6 km circle around the surveillance box.

#include <memory>
#include <vector>

#include "msdis/detector.hpp"

namespace fixtures {

using namespace msdis;

struct Desk {
    RadarLayout layout;
    WaveformConfig cfg;
    PhaseCodeBank bank;
    SearchGrid grid;
    FineGrid fine;
    std::shared_ptr<NoiseModel> noise;
    std::vector<MatC> roots;
    DetectorContext ctx;

    explicit Desk(double grid_spacing = 25.0, double xmin = 3950.0, double xmax = 4050.0,
                  double ymin = 3650.0, double ymax = 3750.0, double noise_variance = 1.0,
                  std::uint64_t code_seed = 1234) {
        layout.tx_positions = {Vec2(-1196.152422706632, 750.0), Vec2(9196.152422706632, 750.0)};
        layout.rx_positions = {Vec2(4000.0, 9750.0), Vec2(4000.0, -2250.0)};
        cfg = make_waveform_config(3.2e-6, 32, 1e7, 2.5e-8);
        bank = generate_codes(layout.num_tx(), cfg.code_length, code_seed);
        grid = make_search_grid(xmin, xmax, ymin, ymax, grid_spacing);
        fine = make_fine_grid(xmin - 50.0, xmax + 50.0, ymin - 50.0, ymax + 50.0, 0.5, grid_spacing);
        SampleWindow window = make_window(cfg, delay_window(layout, grid));
        noise = std::make_shared<NoiseModel>(
            make_white_noise(layout.num_rx(), window.m_samples, noise_variance));
        roots = noise_roots(*noise);
        ctx = make_detector_context(layout, cfg, bank, grid, fine, noise);
    }

    TruthTarget target_at(const Vec2& x, double snr_db, std::uint64_t seed) const {
        return make_truth_target(bank, cfg, layout, ctx.whiteners, ctx.window, x, snr_db, seed);
    }

    MeasurementSet measure(const std::vector<TruthTarget>& targets, std::uint64_t seed) const {
        return synthesize(bank, cfg, layout, targets, noise, roots, ctx.window, seed);
    }

    MeasurementSet measure_clean(const std::vector<TruthTarget>& targets) const {
        return synthesize_clean(bank, cfg, layout, targets, noise, ctx.window);
    }
};

}  // namespace fixtures
