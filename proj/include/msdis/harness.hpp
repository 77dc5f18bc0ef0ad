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
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include "msdis/baselines.hpp"
#include "msdis/common.hpp"
#include "msdis/detector.hpp"
#include "msdis/rng.hpp"
#include "msdis/scene.hpp"

namespace msdis {

enum class DetectorKind { msdis, jdl_sic, glrt_cd };

inline DetectorKind parse_detector_kind(const std::string& name) {
    if (name == "msdis") return DetectorKind::msdis;
    if (name == "jdl-sic") return DetectorKind::jdl_sic;
    if (name == "glrt-cd") return DetectorKind::glrt_cd;
    throw UsageError("unknown detector '" + name + "' (expected msdis, jdl-sic, or glrt-cd)");
}

inline std::string to_string(DetectorKind kind) {
    switch (kind) {
        case DetectorKind::msdis: return "msdis";
        case DetectorKind::jdl_sic: return "jdl-sic";
        case DetectorKind::glrt_cd: return "glrt-cd";
    }
    return "?";
}

/// One Monte Carlo experiment: a scene template swept over the SNR of the
/// target of interest (index 0), run through one detector.
struct ExperimentSpec {
    DetectorKind detector = DetectorKind::msdis;
    std::vector<Vec2> targets;           // truth locations; index 0 is scored
    std::vector<double> snr_offsets_db;  // per-target offset added to the swept SNR
    std::vector<double> snr_sweep_db;
    int trials = 100;
    double association_radius = 0.0;  // nonpositive resolves to c/W
    GicParams gic;
    BaselineParams baseline;
    std::uint64_t seed = 0;

    void validate() const {
        if (trials < 1) throw UsageError("trials must be at least 1");
        if (targets.empty()) throw UsageError("experiment needs at least one truth target");
        if (snr_offsets_db.size() != targets.size())
            throw UsageError("need one SNR offset per target");
        if (!snr_offsets_db.empty() && snr_offsets_db[0] != 0.0)
            throw UsageError("the offset of the target of interest must be zero");
    }
};

/// Default association gate: one delay resolution cell in meters.
inline double resolve_association_radius(const ExperimentSpec& spec, const DetectorContext& ctx) {
    if (spec.association_radius > 0.0) return spec.association_radius;
    return ctx.layout.propagation_speed / ctx.cfg.bandwidth;
}

struct TrialRecord {
    double snr_db = 0.0;
    std::uint64_t trial = 0;  // flat trial counter, unique across the sweep
    std::uint64_t seed = 0;
    bool detected = false;  // target of interest associated
    double error_m = std::numeric_limits<double>::quiet_NaN();
    int reported_count = 0;
    Termination termination = Termination::no_detection;
};

struct MetricsRow {
    double snr_db = 0.0;
    double pd = 0.0;
    double pd_halfwidth = 0.0;
    double rmse_m = std::numeric_limits<double>::quiet_NaN();
    int n_associated = 0;
    double mean_count = 0.0;
};

/// Greedy one-to-one assignment of reports to truth targets: reports in
/// decreasing score order each take the nearest unused truth within the
/// radius. Returns one truth index (or -1) per report.
inline std::vector<int> associate_greedy(const std::vector<TargetEstimate>& reports,
                                         const std::vector<Vec2>& truths, double radius) {
    std::vector<std::size_t> order(reports.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return reports[a].score > reports[b].score;
    });
    std::vector<int> assignment(reports.size(), -1);
    std::vector<bool> used(truths.size(), false);
    for (std::size_t r : order) {
        int best = -1;
        double best_dist = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < truths.size(); ++t) {
            if (used[t]) continue;
            const double dist = (reports[r].location - truths[t]).norm();
            if (dist <= radius && dist < best_dist) {
                best = static_cast<int>(t);
                best_dist = dist;
            }
        }
        if (best >= 0) {
            assignment[r] = best;
            used[static_cast<std::size_t>(best)] = true;
        }
    }
    return assignment;
}

namespace detail {

inline DetectionReport dispatch_detector(const DetectorContext& ctx, const ExperimentSpec& spec,
                                         const MeasurementSet& ms) {
    switch (spec.detector) {
        case DetectorKind::msdis: return run_msdis(ctx, spec.gic, ms);
        case DetectorKind::jdl_sic: return run_jdl_sic(ctx, spec.baseline, ms);
        case DetectorKind::glrt_cd: return run_glrt_cd(ctx, spec.gic.eta, ms, spec.gic.record_score_maps);
    }
    throw UsageError("unknown detector kind");
}

inline MeasurementSet synthesize_trial(const DetectorContext& ctx, const ExperimentSpec& spec,
                                       double snr1_db, std::uint64_t trial_seed,
                                       const std::vector<MatC>& roots, bool interest_only) {
    const std::size_t count = interest_only ? 1 : spec.targets.size();
    std::vector<TruthTarget> truths;
    truths.reserve(count);
    for (std::size_t k = 0; k < count; ++k)
        truths.push_back(make_truth_target(ctx.bank, ctx.cfg, ctx.layout, ctx.whiteners, ctx.window,
                                           spec.targets[k], snr1_db + spec.snr_offsets_db[k],
                                           derive_seed(trial_seed, stream::amplitude,
                                                       static_cast<std::uint64_t>(k))));
    return synthesize(ctx.bank, ctx.cfg, ctx.layout, truths, ctx.noise, roots, ctx.window, trial_seed);
}

}  // namespace detail

/// One synthesized scene plus one detector run. The single-target benchmark
/// sees data containing only the target of interest; the per-receiver noise
/// stream is shared with the full scene.
inline DetectionReport run_single(const DetectorContext& ctx, const ExperimentSpec& spec,
                                  double snr1_db, std::uint64_t counter,
                                  const std::vector<MatC>& roots) {
    const std::uint64_t trial_seed = derive_seed(spec.seed, stream::trial, counter);
    const bool interest_only = spec.detector == DetectorKind::glrt_cd;
    MeasurementSet ms = detail::synthesize_trial(ctx, spec, snr1_db, trial_seed, roots, interest_only);
    DetectionReport report = detail::dispatch_detector(ctx, spec, ms);

    // Grid-update soundness: no reported pair may fall inside one another's
    // resolution neighborhood, whatever the detector.
    for (std::size_t a = 0; a < report.targets.size(); ++a)
        for (std::size_t b = a + 1; b < report.targets.size(); ++b)
            if (!are_separable(ctx.layout, report.targets[a].location, report.targets[b].location,
                               ctx.cfg.bandwidth))
                throw NumericalError("detected targets violate the grid pruning rule");
    return report;
}

inline DetectionReport run_single(const DetectorContext& ctx, const ExperimentSpec& spec,
                                  double snr1_db, std::uint64_t counter) {
    return run_single(ctx, spec, snr1_db, counter, noise_roots(*ctx.noise));
}

/// run_single plus truth association, reduced to the scored record.
inline TrialRecord run_trial(const DetectorContext& ctx, const ExperimentSpec& spec, double snr1_db,
                             std::uint64_t counter, const std::vector<MatC>& roots) {
    DetectionReport report = run_single(ctx, spec, snr1_db, counter, roots);
    const double radius = resolve_association_radius(spec, ctx);
    const std::vector<int> assignment = associate_greedy(report.targets, spec.targets, radius);

    TrialRecord record;
    record.snr_db = snr1_db;
    record.trial = counter;
    record.seed = derive_seed(spec.seed, stream::trial, counter);
    record.reported_count = static_cast<int>(report.targets.size());
    record.termination = report.termination;
    for (std::size_t r = 0; r < assignment.size(); ++r) {
        if (assignment[r] != 0) continue;
        record.detected = true;
        record.error_m = (report.targets[r].location - spec.targets[0]).norm();
        break;
    }
    return record;
}

inline TrialRecord run_trial(const DetectorContext& ctx, const ExperimentSpec& spec, double snr1_db,
                             std::uint64_t counter) {
    return run_trial(ctx, spec, snr1_db, counter, noise_roots(*ctx.noise));
}

struct SweepResult {
    std::vector<MetricsRow> rows;       // one per swept SNR, in sweep order
    std::vector<TrialRecord> records;   // all trials, ordered by flat counter
};

/// Full Monte Carlo sweep. Trials run in parallel; every record lands at its
/// flat index, so the output is identical for any worker count.
inline SweepResult run_sweep(const DetectorContext& ctx, const ExperimentSpec& spec, int threads = 1) {
    spec.validate();
    const std::vector<MatC> roots = noise_roots(*ctx.noise);
    const std::size_t points = spec.snr_sweep_db.size();
    const std::size_t total = points * static_cast<std::size_t>(spec.trials);

    SweepResult result;
    result.records.resize(total);
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min<int>(threads, total == 0 ? 1 : static_cast<int>(total)));

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&]() {
        for (;;) {
            const std::size_t flat = next.fetch_add(1);
            if (flat >= total) return;
            try {
                const std::size_t si = flat / static_cast<std::size_t>(spec.trials);
                result.records[flat] = run_trial(ctx, spec, spec.snr_sweep_db[si],
                                                 static_cast<std::uint64_t>(flat), roots);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(total);
                return;
            }
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    result.rows.reserve(points);
    for (std::size_t si = 0; si < points; ++si) {
        MetricsRow row;
        row.snr_db = spec.snr_sweep_db[si];
        double error_sq = 0.0;
        double count_sum = 0.0;
        int detected = 0;
        for (int t = 0; t < spec.trials; ++t) {
            const TrialRecord& rec =
                result.records[si * static_cast<std::size_t>(spec.trials) + static_cast<std::size_t>(t)];
            count_sum += rec.reported_count;
            if (rec.detected) {
                ++detected;
                error_sq += rec.error_m * rec.error_m;
            }
        }
        row.pd = static_cast<double>(detected) / spec.trials;
        row.pd_halfwidth = 1.96 * std::sqrt(row.pd * (1.0 - row.pd) / spec.trials);
        row.n_associated = detected;
        if (detected > 0) row.rmse_m = std::sqrt(error_sq / detected);
        row.mean_count = count_sum / spec.trials;
        result.rows.push_back(row);
    }
    return result;
}

struct ScoreMapBundle {
    DetectionReport msdis;
    DetectionReport jdl;
    std::vector<Vec2> truths;
    double snr_db = 0.0;
    std::uint64_t seed = 0;
};

/// Single-trial run of both mapped detectors with per-iteration score-map
/// recording, for side-by-side output planes.
inline ScoreMapBundle capture_score_maps(const DetectorContext& ctx, const ExperimentSpec& spec,
                                         double snr1_db, std::uint64_t counter) {
    const std::vector<MatC> roots = noise_roots(*ctx.noise);
    const std::uint64_t trial_seed = derive_seed(spec.seed, stream::trial, counter);
    MeasurementSet ms = detail::synthesize_trial(ctx, spec, snr1_db, trial_seed, roots, false);

    ScoreMapBundle bundle;
    bundle.truths = spec.targets;
    bundle.snr_db = snr1_db;
    bundle.seed = trial_seed;

    GicParams gic = spec.gic;
    gic.record_score_maps = true;
    bundle.msdis = run_msdis(ctx, gic, ms);

    BaselineParams mf = spec.baseline;
    mf.record_score_maps = true;
    bundle.jdl = run_jdl_sic(ctx, mf, ms);
    return bundle;
}

}  // namespace msdis
