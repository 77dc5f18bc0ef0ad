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

#include <cmath>
#include <limits>
#include <vector>

#include "msdis/calibration.hpp"
#include "msdis/common.hpp"
#include "msdis/detector.hpp"
#include "msdis/geometry.hpp"
#include "msdis/scene.hpp"

namespace msdis {

/// Knobs for the matched-filter successive-cancellation receiver.
struct BaselineParams {
    double mf_threshold = 0.0;  // detection threshold on the MF score map
    int sic_max_iterations = 1;
    bool record_score_maps = false;

    void validate() const {
        if (sic_max_iterations < 1) throw UsageError("sic_max_iterations must be at least 1");
        if (!(mf_threshold >= 0.0)) throw UsageError("mf_threshold must be nonnegative");
    }
};

/// Noncoherent matched-filter statistic at grid point i: whitened inner
/// products with every transmit signature, each normalized by the whitened
/// signature energy.
inline double mf_statistic(const DetectorContext& ctx, const std::vector<VecC>& whitened, int i) {
    double total = 0.0;
    for (int p = 0; p < ctx.num_rx(); ++p) {
        const MatC& modes = ctx.whitened_modes[static_cast<std::size_t>(p)][static_cast<std::size_t>(i)];
        for (int n = 0; n < modes.cols(); ++n) {
            const double energy = modes.col(n).squaredNorm();
            if (energy <= 0.0) continue;
            total += std::norm(modes.col(n).dot(whitened[static_cast<std::size_t>(p)])) / energy;
        }
    }
    return total;
}

/// Largest matched-filter statistic over the active grid.
inline double mf_peak(const DetectorContext& ctx, const std::vector<VecC>& whitened) {
    double best = 0.0;
    for (int i = 0; i < ctx.grid.size(); ++i) {
        if (!ctx.grid.is_active(i)) continue;
        best = std::max(best, mf_statistic(ctx, whitened, i));
    }
    return best;
}

/// Monte Carlo threshold for the matched-filter receiver at the same
/// false-alarm target as the subspace detector. Uses the same seed stream as
/// calibrate_eta so both thresholds see identical noise batches.
inline double calibrate_mf_threshold(const DetectorContext& ctx, double target_pfa, int trials,
                                     std::uint64_t seed) {
    if (!(target_pfa > 0.0 && target_pfa < 1.0)) throw UsageError("target_pfa must lie in (0, 1)");
    if (trials < 100) throw UsageError("calibration needs at least 100 trials");
    const std::vector<MatC> roots = noise_roots(*ctx.noise);
    std::vector<double> peaks(static_cast<std::size_t>(trials));
    for (int j = 0; j < trials; ++j) {
        MeasurementSet ms =
            synthesize(ctx.bank, ctx.cfg, ctx.layout, {}, ctx.noise, roots, ctx.window,
                       derive_seed(seed, stream::calibration, static_cast<std::uint64_t>(j)));
        peaks[static_cast<std::size_t>(j)] = mf_peak(ctx, whiten_measurements(ctx, ms));
    }
    return empirical_quantile(std::move(peaks), 1.0 - target_pfa);
}

/// Matched-filter detection with successive interference cancellation.
/// Each pass scans the active grid, declares the peak if it clears the
/// threshold, re-estimates the gains of every declared target by joint least
/// squares against the original data, subtracts the reconstruction, prunes
/// the neighborhood of the new detection, and repeats.
inline DetectionReport run_jdl_sic(const DetectorContext& ctx, const BaselineParams& params,
                                   const MeasurementSet& ms) {
    params.validate();
    const std::vector<VecC> original = whiten_measurements(ctx, ms);
    std::vector<VecC> residual = original;
    SearchGrid active = ctx.grid;
    const int num_rx = ctx.num_rx();
    const int num_tx = ctx.num_tx();

    DetectionReport report;
    report.termination = Termination::k_max;
    report.tests_run = 0;
    std::vector<Vec2> locations;

    for (int step = 1; step <= params.sic_max_iterations; ++step) {
        if (active.active_count() == 0) {
            report.termination = Termination::empty_grid;
            break;
        }
        ++report.tests_run;

        int best_index = -1;
        double best_value = -std::numeric_limits<double>::infinity();
        ScoreMap map;
        if (params.record_score_maps) {
            map.iteration = step;
            map.scores.assign(static_cast<std::size_t>(active.size()),
                              std::numeric_limits<double>::quiet_NaN());
        }
        for (int i = 0; i < active.size(); ++i) {
            if (!active.is_active(i)) continue;
            const double value = mf_statistic(ctx, residual, i);
            if (params.record_score_maps) map.scores[static_cast<std::size_t>(i)] = value;
            if (value > best_value) {
                best_value = value;
                best_index = i;
            }
        }
        if (params.record_score_maps) report.score_maps.push_back(std::move(map));

        if (!(best_value > params.mf_threshold)) {
            report.termination = Termination::no_detection;
            break;
        }
        const Vec2 location = active.points[static_cast<std::size_t>(best_index)];
        locations.push_back(location);

        TargetEstimate estimate;
        estimate.location = location;
        estimate.score = best_value;
        estimate.iteration = step;
        estimate.gains = MatC::Zero(num_tx, num_rx);
        estimate.gain_rank_deficient = false;
        report.targets.push_back(std::move(estimate));

        // Joint least squares over all declared targets, against the
        // original data, limits error accumulation across passes.
        const int k = static_cast<int>(locations.size());
        bool deficient = false;
        for (int p = 0; p < num_rx; ++p) {
            MatC stacked(ctx.window.m_samples, num_tx * k);
            for (int t = 0; t < k; ++t)
                stacked.middleCols(t * num_tx, num_tx) =
                    ctx.whitened_mode_at(p, locations[static_cast<std::size_t>(t)]);
            Eigen::CompleteOrthogonalDecomposition<MatC> cod(stacked);
            cod.setThreshold(ctx.rank_tol);
            const VecC alpha = cod.solve(original[static_cast<std::size_t>(p)]);
            if (cod.rank() < num_tx * k) deficient = true;
            residual[static_cast<std::size_t>(p)] =
                original[static_cast<std::size_t>(p)] - stacked * alpha;
            for (int t = 0; t < k; ++t)
                report.targets[static_cast<std::size_t>(t)].gains.col(p) =
                    alpha.segment(t * num_tx, num_tx);
        }
        for (auto& target : report.targets) target.gain_rank_deficient = deficient;

        active = prune_grid(active, ctx.layout, {location}, ctx.cfg.bandwidth);
    }

    for (std::size_t a = 0; a < locations.size(); ++a)
        for (std::size_t b = a + 1; b < locations.size(); ++b)
            if (!are_separable(ctx.layout, locations[a], locations[b], ctx.cfg.bandwidth))
                throw NumericalError("detected targets violate the grid pruning rule");
    return report;
}

/// Single-target benchmark: one subspace test on data that, by construction,
/// contains only the target of interest.
inline DetectionReport run_glrt_cd(const DetectorContext& ctx, double eta, const MeasurementSet& ms,
                                   bool record_score_maps = false) {
    GicParams params;
    params.eta = eta;
    params.k_max = 1;
    params.record_score_maps = record_score_maps;
    return run_msdis(ctx, params, ms);
}

}  // namespace msdis
