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
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "msdis/harness.hpp"

#include "fixtures.hpp"

using namespace msdis;
using fixtures::Desk;

namespace {

ExperimentSpec desk_spec(const Desk& desk, DetectorKind kind) {
    ExperimentSpec spec;
    spec.detector = kind;
    spec.targets = {desk.grid.points[12]};
    spec.snr_offsets_db = {0.0};
    spec.snr_sweep_db = {4.0};
    spec.trials = 50;
    spec.gic.eta = 2.6;  // roughly the 10% false-alarm point for this desk scene
    spec.gic.k_max = 3;
    spec.baseline.mf_threshold = 20.0;
    spec.baseline.sic_max_iterations = 3;
    spec.seed = 9001;
    return spec;
}

}  // namespace

TEST_CASE("harness: detector names parse and print", "[harness]") {
    CHECK(parse_detector_kind("msdis") == DetectorKind::msdis);
    CHECK(parse_detector_kind("jdl-sic") == DetectorKind::jdl_sic);
    CHECK(parse_detector_kind("glrt-cd") == DetectorKind::glrt_cd);
    CHECK_THROWS_AS(parse_detector_kind("mf"), UsageError);
    for (DetectorKind kind : {DetectorKind::msdis, DetectorKind::jdl_sic, DetectorKind::glrt_cd})
        CHECK(parse_detector_kind(to_string(kind)) == kind);
}

TEST_CASE("harness: experiment validation", "[harness]") {
    Desk desk;
    ExperimentSpec spec = desk_spec(desk, DetectorKind::msdis);
    CHECK_NOTHROW(spec.validate());
    spec.trials = 0;
    CHECK_THROWS_AS(spec.validate(), UsageError);
    spec.trials = 10;
    spec.snr_offsets_db = {0.0, 6.0};
    CHECK_THROWS_AS(spec.validate(), UsageError);
    spec.targets.push_back(desk.grid.points[22]);
    CHECK_NOTHROW(spec.validate());
    spec.snr_offsets_db = {1.0, 6.0};
    CHECK_THROWS_AS(spec.validate(), UsageError);
    spec.targets.clear();
    spec.snr_offsets_db.clear();
    CHECK_THROWS_AS(spec.validate(), UsageError);
}

TEST_CASE("harness: association radius defaults to one resolution cell", "[harness]") {
    Desk desk;
    ExperimentSpec spec = desk_spec(desk, DetectorKind::msdis);
    CHECK(resolve_association_radius(spec, desk.ctx) ==
          Catch::Approx(29.9792458).epsilon(1e-12));
    spec.association_radius = 12.5;
    CHECK(resolve_association_radius(spec, desk.ctx) == 12.5);
}

TEST_CASE("harness: greedy association is one-to-one by score", "[harness]") {
    std::vector<Vec2> truths = {Vec2(0.0, 0.0), Vec2(100.0, 0.0)};
    TargetEstimate a, b, c;
    a.location = Vec2(2.0, 0.0);
    a.score = 5.0;
    b.location = Vec2(1.0, 0.0);
    b.score = 9.0;
    c.location = Vec2(98.0, 0.0);
    c.score = 1.0;
    std::vector<int> assignment = associate_greedy({a, b, c}, truths, 30.0);
    // b outranks a, takes the shared truth; a is left out; c matches the far one.
    CHECK(assignment == std::vector<int>{-1, 0, 1});

    assignment = associate_greedy({a, b, c}, truths, 1.5);
    CHECK(assignment == std::vector<int>{-1, 0, -1});

    assignment = associate_greedy({}, truths, 30.0);
    CHECK(assignment.empty());
}

TEST_CASE("harness: a silent detector counts as a miss", "[harness]") {
    Desk desk;
    ExperimentSpec spec = desk_spec(desk, DetectorKind::msdis);
    spec.gic.eta = 1e9;
    TrialRecord record = run_trial(desk.ctx, spec, 4.0, 0);
    CHECK_FALSE(record.detected);
    CHECK(std::isnan(record.error_m));
    CHECK(record.reported_count == 0);
    CHECK(record.termination == Termination::no_detection);
}

TEST_CASE("harness: an exact hit scores zero error", "[harness]") {
    Desk desk;
    ExperimentSpec spec = desk_spec(desk, DetectorKind::msdis);
    TrialRecord record = run_trial(desk.ctx, spec, 25.0, 3);
    CHECK(record.detected);
    CHECK(record.error_m == 0.0);
    CHECK(record.reported_count >= 1);
    CHECK(record.seed == derive_seed(spec.seed, stream::trial, 3));
}

TEST_CASE("harness: the benchmark never sees the second target", "[harness]") {
    Desk desk;
    ExperimentSpec with_weak = desk_spec(desk, DetectorKind::glrt_cd);
    with_weak.targets = {desk.grid.points[2], desk.grid.points[22]};
    with_weak.snr_offsets_db = {0.0, 6.0};
    ExperimentSpec with_strong = with_weak;
    with_strong.snr_offsets_db = {0.0, 36.0};
    for (std::uint64_t counter : {0u, 1u, 2u, 3u}) {
        TrialRecord weak = run_trial(desk.ctx, with_weak, 6.0, counter);
        TrialRecord strong = run_trial(desk.ctx, with_strong, 6.0, counter);
        CHECK(weak.detected == strong.detected);
        CHECK((std::isnan(weak.error_m) ? std::isnan(strong.error_m)
                                        : weak.error_m == strong.error_m));
        CHECK(weak.reported_count == strong.reported_count);
    }
}

TEST_CASE("harness: one trial gives a zero-or-one detection rate", "[harness]") {
    Desk desk;
    ExperimentSpec spec = desk_spec(desk, DetectorKind::msdis);
    spec.trials = 1;
    spec.snr_sweep_db = {4.0, 25.0};
    SweepResult result = run_sweep(desk.ctx, spec);
    REQUIRE(result.rows.size() == 2);
    for (const MetricsRow& row : result.rows) {
        CHECK((row.pd == 0.0 || row.pd == 1.0));
        CHECK(row.pd_halfwidth == 0.0);
    }
    CHECK(result.rows[1].pd == 1.0);
    CHECK(result.records.size() == 2);
}

TEST_CASE("harness: sweeps are reproducible and thread-count independent", "[harness]") {
    Desk desk;
    ExperimentSpec spec = desk_spec(desk, DetectorKind::msdis);
    spec.trials = 40;
    spec.snr_sweep_db = {2.0, 6.0};
    SweepResult serial = run_sweep(desk.ctx, spec, 1);
    SweepResult again = run_sweep(desk.ctx, spec, 1);
    SweepResult pooled = run_sweep(desk.ctx, spec, 4);
    REQUIRE(serial.rows.size() == 2);
    for (const SweepResult* other : {&again, &pooled}) {
        REQUIRE(other->records.size() == serial.records.size());
        for (std::size_t i = 0; i < serial.records.size(); ++i) {
            CHECK(serial.records[i].detected == other->records[i].detected);
            CHECK((std::isnan(serial.records[i].error_m)
                       ? std::isnan(other->records[i].error_m)
                       : serial.records[i].error_m == other->records[i].error_m));
            CHECK(serial.records[i].seed == other->records[i].seed);
        }
        for (std::size_t i = 0; i < serial.rows.size(); ++i) {
            CHECK(serial.rows[i].pd == other->rows[i].pd);
            CHECK((std::isnan(serial.rows[i].rmse_m)
                       ? std::isnan(other->rows[i].rmse_m)
                       : serial.rows[i].rmse_m == other->rows[i].rmse_m));
            CHECK(serial.rows[i].mean_count == other->rows[i].mean_count);
        }
    }
}

TEST_CASE("harness: disjoint seed ranges estimate the same detection rate", "[harness]") {
    Desk desk;
    ExperimentSpec first = desk_spec(desk, DetectorKind::msdis);
    first.trials = 150;
    first.seed = 100;
    ExperimentSpec second = first;
    second.seed = 101;
    const MetricsRow row_a = run_sweep(desk.ctx, first).rows[0];
    const MetricsRow row_b = run_sweep(desk.ctx, second).rows[0];
    const double se = std::sqrt(row_a.pd * (1.0 - row_a.pd) / first.trials +
                                row_b.pd * (1.0 - row_b.pd) / second.trials);
    CHECK(std::abs(row_a.pd - row_b.pd) <= 3.0 * se);
    CHECK(row_a.pd > 0.2);
    CHECK(row_a.pd < 1.0);
}

TEST_CASE("harness: extreme SNR pins an on-grid truth exactly", "[harness]") {
    Desk desk;
    ExperimentSpec spec = desk_spec(desk, DetectorKind::msdis);
    spec.trials = 40;
    spec.snr_sweep_db = {30.0};
    const MetricsRow row = run_sweep(desk.ctx, spec).rows[0];
    CHECK(row.pd == 1.0);
    CHECK(row.rmse_m == 0.0);
    CHECK(row.n_associated == 40);
    CHECK(row.mean_count >= 1.0);
}

TEST_CASE("harness: score-map capture covers both detectors", "[harness]") {
    Desk desk;
    ExperimentSpec spec = desk_spec(desk, DetectorKind::msdis);
    spec.targets = {desk.grid.points[2], desk.grid.points[22]};
    spec.snr_offsets_db = {0.0, -6.0};
    spec.gic.k_max = 5;
    ScoreMapBundle bundle = capture_score_maps(desk.ctx, spec, 25.0, 0);
    CHECK(bundle.truths.size() == 2);
    CHECK(bundle.seed == derive_seed(spec.seed, stream::trial, 0));

    REQUIRE(bundle.msdis.score_maps.size() == static_cast<std::size_t>(bundle.msdis.tests_run));
    REQUIRE(bundle.jdl.score_maps.size() == static_cast<std::size_t>(bundle.jdl.tests_run));
    REQUIRE(bundle.msdis.targets.size() == 2);

    // The first map's peak is the first reported detection.
    const auto& first = bundle.msdis.score_maps[0].scores;
    int argmax = 0;
    for (int i = 1; i < static_cast<int>(first.size()); ++i)
        if (first[static_cast<std::size_t>(i)] > first[static_cast<std::size_t>(argmax)]) argmax = i;
    CHECK(desk.grid.points[static_cast<std::size_t>(argmax)] ==
          bundle.msdis.targets[0].location);

    // Once the stronger target is cancelled, scores inside one resolution
    // cell of its location drop.
    const Vec2 hit = bundle.msdis.targets[0].location;
    const double radius = resolve_association_radius(spec, desk.ctx);
    REQUIRE(bundle.msdis.score_maps.size() >= 2);
    const auto& second = bundle.msdis.score_maps[1].scores;
    double before = -1e300, after = -1e300;
    for (std::size_t i = 0; i < first.size(); ++i) {
        if ((desk.grid.points[i] - hit).norm() > radius) continue;
        if (std::isnan(second[i])) continue;  // pruned by the first detection
        before = std::max(before, first[i]);
        after = std::max(after, second[i]);
    }
    REQUIRE(before > -1e300);
    CHECK(after < before);

    // A run that ends in rejection leaves a final map with no positive score.
    if (bundle.msdis.termination == Termination::no_detection) {
        for (double v : bundle.msdis.score_maps.back().scores)
            if (!std::isnan(v)) CHECK(v <= 0.0);
    }
}
