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

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "msdis/common.hpp"
#include "msdis/detector.hpp"
#include "msdis/rng.hpp"
#include "msdis/scene.hpp"

namespace msdis {

struct CalibrationResult {
    double eta = 0.0;
    double target_pfa = 0.0;
    double achieved_pfa = 0.0;        // estimated on a fresh validation batch
    double achieved_halfwidth = 0.0;  // 95% binomial confidence half-width
    int trials = 0;
    std::uint64_t seed = 0;
    std::string method;  // "quantile" or "bisection"
};

/// Unpenalized first-iteration scan: projected whitened energy per point.
inline double scan_energy(const DetectorContext& ctx, const std::vector<VecC>& whitened, int i) {
    double total = 0.0;
    for (int p = 0; p < ctx.num_rx(); ++p) {
        const RangeBasis& rb = ctx.mode_bases[static_cast<std::size_t>(p)][static_cast<std::size_t>(i)];
        total += (rb.basis.adjoint() * whitened[static_cast<std::size_t>(p)]).squaredNorm();
    }
    return total;
}

/// Largest energy-to-rank ratio over the grid. A first-iteration test at
/// penalty eta accepts the trial if and only if eta is strictly below this.
inline double acceptance_boundary(const DetectorContext& ctx, const std::vector<VecC>& whitened) {
    double best = 0.0;
    for (int i = 0; i < ctx.grid.size(); ++i) {
        const int rank = ctx.point_total_rank[static_cast<std::size_t>(i)];
        if (rank == 0) continue;
        best = std::max(best, scan_energy(ctx, whitened, i) / rank);
    }
    return best;
}

/// Order statistic at the given level: with n sorted values, returns the
/// floor(level * n)-th smallest, so the fraction strictly above it is close
/// to 1 - level.
inline double empirical_quantile(std::vector<double> values, double level) {
    if (values.empty()) throw UsageError("quantile of an empty sample");
    std::sort(values.begin(), values.end());
    const auto n = static_cast<std::size_t>(values.size());
    std::size_t idx = static_cast<std::size_t>(std::floor(level * static_cast<double>(n)));
    idx = std::min(idx, n - 1);
    return values[idx];
}

namespace detail {

inline bool trial_accepts(const DetectorContext& ctx, const std::vector<VecC>& whitened, double eta) {
    GicParams params;
    params.eta = eta;
    params.k_max = 1;
    const DetectionState state = make_initial_state(ctx);
    return detect_iteration(ctx, state, params, whitened).accepted;
}

}  // namespace detail

/// Monte Carlo penalty selection for a target first-iteration false-alarm
/// probability. With a constant total projector rank over the grid (the
/// common case, asserted at runtime), the acceptance condition reduces to a
/// per-trial scalar and eta is an empirical quantile. Otherwise eta comes
/// from bisection over full detection runs on the stored trials. The achieved
/// rate is always measured on a fresh batch; validation_trials sizes that
/// batch (0 reuses the calibration count).
inline CalibrationResult calibrate_eta(const DetectorContext& ctx, double target_pfa, int trials,
                                       std::uint64_t seed, bool force_bisection = false,
                                       int validation_trials = 0) {
    if (!(target_pfa > 0.0 && target_pfa < 1.0)) throw UsageError("target_pfa must lie in (0, 1)");
    if (trials < 100) throw UsageError("calibration needs at least 100 trials");
    if (validation_trials < 0) throw UsageError("validation_trials must be nonnegative");
    if (validation_trials == 0) validation_trials = trials;
    if (static_cast<double>(trials) * target_pfa < 10.0)
        warn("fewer than 10 expected false alarms in the calibration batch; eta will be noisy");

    const std::vector<MatC> roots = noise_roots(*ctx.noise);
    const std::vector<TruthTarget> no_targets;

    std::vector<double> boundaries(static_cast<std::size_t>(trials));
    const bool use_quantile = ctx.constant_total_rank && !force_bisection;
    std::vector<std::vector<VecC>> stored;
    if (!use_quantile) stored.reserve(static_cast<std::size_t>(trials));

    for (int j = 0; j < trials; ++j) {
        MeasurementSet ms =
            synthesize(ctx.bank, ctx.cfg, ctx.layout, no_targets, ctx.noise, roots, ctx.window,
                       derive_seed(seed, stream::calibration, static_cast<std::uint64_t>(j)));
        std::vector<VecC> whitened = whiten_measurements(ctx, ms);
        boundaries[static_cast<std::size_t>(j)] = acceptance_boundary(ctx, whitened);
        if (!use_quantile) stored.push_back(std::move(whitened));
    }

    CalibrationResult result;
    result.target_pfa = target_pfa;
    result.trials = trials;
    result.seed = seed;

    if (use_quantile) {
        result.eta = empirical_quantile(boundaries, 1.0 - target_pfa);
        result.method = "quantile";
    } else {
        const int budget = static_cast<int>(std::floor(target_pfa * trials));
        double lo = 0.0;
        double hi = *std::max_element(boundaries.begin(), boundaries.end()) + 1.0;
        for (int step = 0; step < 200 && hi - lo > 1e-12 * std::max(1.0, hi); ++step) {
            const double mid = 0.5 * (lo + hi);
            int accepted = 0;
            for (const auto& whitened : stored)
                if (detail::trial_accepts(ctx, whitened, mid)) ++accepted;
            if (accepted > budget)
                lo = mid;
            else
                hi = mid;
        }
        result.eta = hi;  // conservative side: empirical pfa <= target
        result.method = "bisection";
    }

    // Fresh validation batch.
    int accepted = 0;
    for (int j = 0; j < validation_trials; ++j) {
        MeasurementSet ms =
            synthesize(ctx.bank, ctx.cfg, ctx.layout, no_targets, ctx.noise, roots, ctx.window,
                       derive_seed(seed, stream::validation, static_cast<std::uint64_t>(j)));
        if (detail::trial_accepts(ctx, whiten_measurements(ctx, ms), result.eta)) ++accepted;
    }
    result.achieved_pfa = static_cast<double>(accepted) / validation_trials;
    result.achieved_halfwidth =
        1.96 * std::sqrt(result.achieved_pfa * (1.0 - result.achieved_pfa) / validation_trials);
    return result;
}

}  // namespace msdis
