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
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "msdis/common.hpp"
#include "msdis/geometry.hpp"
#include "msdis/scene.hpp"
#include "msdis/subspace.hpp"
#include "msdis/waveform.hpp"

namespace msdis {

// ---------------------------------------------------------------------------
// Parameters and state
// ---------------------------------------------------------------------------

/// Detector tuning. epsilon <= 0 selects the default significance level of
/// 1e-2 times the mean per-sample noise power.
struct GicParams {
    double eta = 0.0;               // penalty per unit of projector rank
    int k_max = 1;                  // maximum number of sequential tests
    double epsilon = 0.0;           // singular-value significance for mitigation
    bool mitigation_enabled = true;
    double rank_tol = kDefaultRankTol;
    int ball_cap = 512;             // mitigation ball size limit
    bool record_score_maps = false;

    void validate() const {
        if (eta < 0.0) throw UsageError("penalty eta must be nonnegative");
        if (k_max < 1) throw UsageError("k_max must be at least 1");
        if (epsilon < 0.0) throw UsageError("epsilon must be positive (or zero for the default)");
        if (ball_cap < 1) throw UsageError("ball_cap must be at least 1");
    }
};

inline double resolve_epsilon(const GicParams& params, const NoiseModel& noise) {
    if (params.epsilon > 0.0) return params.epsilon;
    double mean_power = 0.0;
    for (const auto& c : noise.covariances) mean_power += c.trace().real() / static_cast<double>(c.rows());
    mean_power /= static_cast<double>(noise.covariances.size());
    return 1e-2 * mean_power;
}

struct TargetEstimate {
    Vec2 location = Vec2::Zero();
    double score = 0.0;  // GIC value at acceptance
    int iteration = 0;   // 1-based test index
    MatC gains;          // N x P joint least-squares estimate
    bool gain_rank_deficient = false;
};

/// Per-iteration scores over the coarse grid, NaN where a point was pruned.
struct ScoreMap {
    int iteration = 0;
    std::vector<double> scores;
};

struct DetectionState {
    int iteration = 1;
    std::vector<TargetEstimate> detections;
    std::vector<MatC> retained;           // per receiver: accumulated interference columns
    std::vector<RangeBasis> interference; // per receiver: orthonormal span of the above
    SearchGrid active;
};

enum class Termination { no_detection, empty_grid, k_max };

struct DetectionReport {
    std::vector<TargetEstimate> targets;
    Termination termination = Termination::no_detection;
    int tests_run = 0;
    std::vector<ScoreMap> score_maps;
};

inline const char* to_string(Termination t) {
    switch (t) {
        case Termination::no_detection: return "no-detection";
        case Termination::empty_grid: return "empty-grid";
        default: return "k-max";
    }
}

// ---------------------------------------------------------------------------
// Scan context: everything fixed across trials for one scenario
// ---------------------------------------------------------------------------

/// Precomputed per-(receiver, grid point) whitened mode matrices and their
/// orthonormal range bases. Building this once makes the first-iteration scan
/// a handful of small matrix products per trial.
struct DetectorContext {
    RadarLayout layout;
    WaveformConfig cfg;
    PhaseCodeBank bank;
    SearchGrid grid;
    FineGrid fine;
    SampleWindow window;
    std::shared_ptr<const NoiseModel> noise;
    std::vector<Whitener> whiteners;
    double rank_tol = kDefaultRankTol;

    std::vector<std::vector<MatC>> whitened_modes;    // [p][grid index], M x N
    std::vector<std::vector<RangeBasis>> mode_bases;  // [p][grid index]
    std::vector<int> point_total_rank;                // sum over p of basis rank
    bool constant_total_rank = true;

    // Shared pointer keeps the context movable (the cache owns a mutex).
    std::shared_ptr<SignatureCache> off_grid_cache = std::make_shared<SignatureCache>();

    int num_rx() const { return layout.num_rx(); }
    int num_tx() const { return layout.num_tx(); }

    /// Whitened mode matrix at an arbitrary location (grid points hit the
    /// precomputed table; anything else goes through the cache).
    MatC whitened_mode_at(int p, const Vec2& x) const {
        for (int i = 0; i < grid.size(); ++i)
            if (grid.points[static_cast<std::size_t>(i)] == x)
                return whitened_modes[static_cast<std::size_t>(p)][static_cast<std::size_t>(i)];
        auto cached = off_grid_cache->get_or_compute(p, x, [&]() {
            return whiteners[static_cast<std::size_t>(p)]
                .apply(mode_matrix(bank, cfg, layout, p, x, window.tau_min, window.m_samples).entries);
        });
        return *cached;
    }
};

inline DetectorContext make_detector_context(const RadarLayout& layout, const WaveformConfig& cfg,
                                             const PhaseCodeBank& bank, const SearchGrid& grid,
                                             const FineGrid& fine, std::shared_ptr<const NoiseModel> noise,
                                             double rank_tol = kDefaultRankTol) {
    layout.validate();
    cfg.validate(layout.num_tx());
    noise->validate();
    DetectorContext ctx;
    ctx.layout = layout;
    ctx.cfg = cfg;
    ctx.bank = bank;
    ctx.grid = grid;
    ctx.fine = fine;
    ctx.window = make_window(cfg, delay_window(layout, grid));
    ctx.noise = std::move(noise);
    ctx.whiteners = whiteners_for(*ctx.noise);
    ctx.rank_tol = rank_tol;

    const int num_rx = layout.num_rx();
    ctx.whitened_modes.resize(static_cast<std::size_t>(num_rx));
    ctx.mode_bases.resize(static_cast<std::size_t>(num_rx));
    ctx.point_total_rank.assign(static_cast<std::size_t>(grid.size()), 0);
    for (int p = 0; p < num_rx; ++p) {
        auto& modes = ctx.whitened_modes[static_cast<std::size_t>(p)];
        auto& bases = ctx.mode_bases[static_cast<std::size_t>(p)];
        modes.reserve(static_cast<std::size_t>(grid.size()));
        bases.reserve(static_cast<std::size_t>(grid.size()));
        for (int i = 0; i < grid.size(); ++i) {
            const SignatureMatrix s = mode_matrix(bank, cfg, layout, p, grid.points[static_cast<std::size_t>(i)],
                                                  ctx.window.tau_min, ctx.window.m_samples);
            modes.push_back(ctx.whiteners[static_cast<std::size_t>(p)].apply(s.entries));
            bases.push_back(orthonormal_range(modes.back(), rank_tol));
            ctx.point_total_rank[static_cast<std::size_t>(i)] += bases.back().rank;
        }
    }
    for (int i = 1; i < grid.size(); ++i)
        if (ctx.point_total_rank[static_cast<std::size_t>(i)] != ctx.point_total_rank[0])
            ctx.constant_total_rank = false;
    return ctx;
}

inline std::vector<VecC> whiten_measurements(const DetectorContext& ctx, const MeasurementSet& ms) {
    if (ms.num_rx() != ctx.num_rx()) throw UsageError("measurement and context receiver counts disagree");
    std::vector<VecC> out;
    out.reserve(ms.vectors.size());
    for (int p = 0; p < ctx.num_rx(); ++p)
        out.push_back(ctx.whiteners[static_cast<std::size_t>(p)].apply(ms.vectors[static_cast<std::size_t>(p)]));
    return out;
}

inline DetectionState make_initial_state(const DetectorContext& ctx) {
    DetectionState state;
    state.iteration = 1;
    state.active = ctx.grid;
    state.retained.assign(static_cast<std::size_t>(ctx.num_rx()), MatC(ctx.window.m_samples, 0));
    for (int p = 0; p < ctx.num_rx(); ++p)
        state.interference.push_back(RangeBasis{MatC(ctx.window.m_samples, 0), 0});
    return state;
}

// ---------------------------------------------------------------------------
// Scoring
// ---------------------------------------------------------------------------

/// Residual target basis at one grid point given the current interference:
/// the precomputed basis when no interference exists, otherwise the deflated
/// and re-orthonormalized one.
inline RangeBasis residual_basis_at(const DetectorContext& ctx, const DetectionState& state, int p, int i) {
    const RangeBasis& clean = ctx.mode_bases[static_cast<std::size_t>(p)][static_cast<std::size_t>(i)];
    const RangeBasis& xi = state.interference[static_cast<std::size_t>(p)];
    if (xi.rank == 0) return clean;
    MatC deflated = clean.basis;
    deflated.noalias() -= xi.basis * (xi.basis.adjoint() * clean.basis).eval();
    // Pre-deflation columns are orthonormal, so the reference scale is 1.
    return orthonormal_range(deflated, ctx.rank_tol, 1.0);
}

/// GIC value at one grid point: projected whitened energy minus eta times the
/// residual projector rank, summed over receivers.
inline double gic_score(const DetectorContext& ctx, const DetectionState& state, const GicParams& params,
                        const std::vector<VecC>& whitened, int grid_index) {
    if (grid_index < 0 || grid_index >= ctx.grid.size()) throw UsageError("grid index out of range");
    double total = 0.0;
    for (int p = 0; p < ctx.num_rx(); ++p) {
        const RangeBasis rb = residual_basis_at(ctx, state, p, grid_index);
        const double energy = (rb.basis.adjoint() * whitened[static_cast<std::size_t>(p)]).squaredNorm();
        total += energy - params.eta * rb.rank;
    }
    return total;
}

struct IterationResult {
    bool grid_empty = false;
    bool accepted = false;
    int grid_index = -1;
    Vec2 location = Vec2::Zero();
    double score = -std::numeric_limits<double>::infinity();
};

/// One sequential test: maximize the GIC over the active grid, accept iff the
/// maximum is strictly positive. Ties go to the lowest grid index.
inline IterationResult detect_iteration(const DetectorContext& ctx, const DetectionState& state,
                                        const GicParams& params, const std::vector<VecC>& whitened,
                                        ScoreMap* map_out = nullptr) {
    IterationResult result;
    if (map_out) {
        map_out->iteration = state.iteration;
        map_out->scores.assign(static_cast<std::size_t>(ctx.grid.size()),
                               std::numeric_limits<double>::quiet_NaN());
    }
    if (state.active.active_count() == 0) {
        result.grid_empty = true;
        return result;
    }
    for (int i = 0; i < state.active.size(); ++i) {
        if (!state.active.is_active(i)) continue;
        const double score = gic_score(ctx, state, params, whitened, i);
        if (map_out) map_out->scores[static_cast<std::size_t>(i)] = score;
        if (score > result.score) {
            result.score = score;
            result.grid_index = i;
        }
    }
    result.location = ctx.grid.points[static_cast<std::size_t>(result.grid_index)];
    result.accepted = result.score > 0.0;
    return result;
}

// ---------------------------------------------------------------------------
// Gain estimation
// ---------------------------------------------------------------------------

/// Joint least squares of all detected locations plus the candidate against
/// the whitened measurements; the trailing N coefficients are the candidate's
/// gains. Rank-deficient stacks fall back to the minimum-norm solution and
/// set the flag.
inline MatC estimate_gains(const DetectorContext& ctx, const DetectionState& state,
                           const std::vector<VecC>& whitened, const Vec2& x_hat,
                           bool* rank_deficient = nullptr) {
    const int num_tx = ctx.num_tx();
    const Index m = ctx.window.m_samples;
    const std::size_t k = state.detections.size() + 1;
    MatC gains(num_tx, ctx.num_rx());
    bool deficient = false;
    for (int p = 0; p < ctx.num_rx(); ++p) {
        MatC stacked(m, static_cast<Index>(k) * num_tx);
        for (std::size_t j = 0; j + 1 < k; ++j)
            stacked.middleCols(static_cast<Index>(j) * num_tx, num_tx) =
                ctx.whitened_mode_at(p, state.detections[j].location);
        stacked.rightCols(num_tx) = ctx.whitened_mode_at(p, x_hat);

        Eigen::CompleteOrthogonalDecomposition<MatC> cod(stacked);
        cod.setThreshold(ctx.rank_tol);
        if (cod.rank() < stacked.cols()) deficient = true;
        const VecC alpha = cod.solve(whitened[static_cast<std::size_t>(p)]);
        gains.col(p) = alpha.tail(num_tx);
    }
    if (rank_deficient) *rank_deficient = deficient;
    return gains;
}

// ---------------------------------------------------------------------------
// Interference update (off-grid mitigation)
// ---------------------------------------------------------------------------

/// Left singular vectors and squared singular values, descending.
struct MitigationSpectrum {
    MatC left;
    VecD lambda;
};

/// Evenly spaced column subset, first and last always kept. The mitigation
/// ball can hold tens of thousands of fine-grid points; an even subsample
/// keeps the spectrum estimate stable at bounded cost.
inline std::vector<Index> even_subsample(Index count, Index cap) {
    std::vector<Index> keep;
    if (count <= cap) {
        keep.resize(static_cast<std::size_t>(count));
        for (Index i = 0; i < count; ++i) keep[static_cast<std::size_t>(i)] = i;
        return keep;
    }
    keep.reserve(static_cast<std::size_t>(cap));
    for (Index j = 0; j < cap; ++j)
        keep.push_back((j * (count - 1)) / (cap - 1));
    keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
    return keep;
}

/// True when the chip and filter lengths are integer multiples of the sample
/// interval; then every signature is piecewise linear in the delay with
/// breakpoints on the lattice tau_min + T_s * Z, and ball matrices factor
/// exactly through a handful of lattice signatures.
inline bool delay_lattice_applies(const WaveformConfig& cfg) {
    const double rc = cfg.chip_duration() / cfg.sample_interval;
    const double rf = cfg.filter_support / cfg.sample_interval;
    return std::abs(rc - std::round(rc)) < 1e-9 && std::abs(rf - std::round(rf)) < 1e-9 &&
           std::round(rc) >= 1.0 && std::round(rf) >= 1.0;
}

/// SVD of the whitened, deflated ball matrix for one (receiver, transmitter)
/// pair. The lattice path never materializes the M x |ball| matrix: it QR-
/// factors the few lattice signatures and runs the SVD on a small product.
inline MitigationSpectrum mitigation_spectrum(const DetectorContext& ctx, const RangeBasis& xi, int p, int n,
                                              const std::vector<Vec2>& ball) {
    const Index m = ctx.window.m_samples;
    const Index count = static_cast<Index>(ball.size());
    const Whitener& whitener = ctx.whiteners[static_cast<std::size_t>(p)];

    auto deflate = [&](MatC& cols) {
        if (xi.rank > 0) cols.noalias() -= xi.basis * (xi.basis.adjoint() * cols).eval();
    };

    MitigationSpectrum out;
    if (delay_lattice_applies(ctx.cfg)) {
        double tau_lo = std::numeric_limits<double>::infinity(), tau_hi = -tau_lo;
        std::vector<double> delays(static_cast<std::size_t>(count));
        for (Index j = 0; j < count; ++j) {
            const double tau = bistatic_delay(ctx.layout, p, n, ball[static_cast<std::size_t>(j)]);
            delays[static_cast<std::size_t>(j)] = tau;
            tau_lo = std::min(tau_lo, tau);
            tau_hi = std::max(tau_hi, tau);
        }
        const double ts = ctx.cfg.sample_interval;
        const auto j_lo = static_cast<std::int64_t>(std::floor((tau_lo - ctx.window.tau_min) / ts));
        const auto j_hi = static_cast<std::int64_t>(std::floor((tau_hi - ctx.window.tau_min) / ts)) + 1;
        const Index knots = static_cast<Index>(j_hi - j_lo) + 1;

        MatC lattice(m, knots);
        for (Index j = 0; j < knots; ++j)
            lattice.col(j) = signature_for_delay(ctx.bank, ctx.cfg, n,
                                                 ctx.window.tau_min + static_cast<double>(j_lo + j) * ts,
                                                 ctx.window.tau_min, m);
        MatC whitened = whitener.apply(lattice);
        deflate(whitened);

        // Interpolation weights: each ball delay sits between two knots.
        MatC interp = MatC::Zero(knots, count);
        for (Index j = 0; j < count; ++j) {
            const double pos = (delays[static_cast<std::size_t>(j)] - ctx.window.tau_min) / ts -
                               static_cast<double>(j_lo);
            const auto cell = std::min<Index>(static_cast<Index>(std::floor(pos)), knots - 2);
            const double w = pos - static_cast<double>(cell);
            interp(cell, j) = 1.0 - w;
            interp(cell + 1, j) = w;
        }

        Eigen::HouseholderQR<MatC> qr(whitened);
        const MatC thin_q = qr.householderQ() * MatC::Identity(m, knots);
        const MatC r = qr.matrixQR().topRows(knots).triangularView<Eigen::Upper>();
        Eigen::BDCSVD<MatC> svd(r * interp, Eigen::ComputeThinU);
        out.left = thin_q * svd.matrixU();
        out.lambda = svd.singularValues().array().square();
        return out;
    }

    MatC cols(m, count);
    for (Index j = 0; j < count; ++j)
        cols.col(j) = signature_vector(ctx.bank, ctx.cfg, ctx.layout, p, n, ball[static_cast<std::size_t>(j)],
                                       ctx.window.tau_min, m);
    cols = whitener.apply(cols);
    deflate(cols);
    Eigen::BDCSVD<MatC> svd(cols, Eigen::ComputeThinU);
    out.left = svd.matrixU();
    out.lambda = svd.singularValues().array().square();
    return out;
}

/// Smallest U >= 1 whose discarded tail is insignificant:
/// (|gain|^2 / |ball|) * sum_{m > U} lambda_m < epsilon. Vectors beyond the
/// numerical rank are never retained.
inline int select_retained_count(const VecD& lambda, double gain_sq, Index ball_size, double epsilon,
                                 double rank_tol) {
    const Index r = lambda.size();
    if (r == 0 || !(lambda(0) > 0.0)) return 0;
    Index numerical_rank = 0;
    const double cutoff = rank_tol * rank_tol * lambda(0);
    for (Index i = 0; i < r; ++i)
        if (lambda(i) > cutoff) ++numerical_rank;
    const double scale = gain_sq / static_cast<double>(ball_size);
    double tail = 0.0;
    for (Index i = 1; i < r; ++i) tail += lambda(i);
    Index u = r;
    for (Index candidate = 1; candidate <= r; ++candidate) {
        if (scale * tail < epsilon) {
            u = candidate;
            break;
        }
        if (candidate < r) tail -= lambda(candidate);
    }
    return static_cast<int>(std::max<Index>(1, std::min(u, numerical_rank)));
}

/// Grows the interference subspace after an accepted detection. With
/// mitigation, the span comes from the dominant directions of whitened
/// signatures over a fine-grid ball around the estimate, so small off-grid
/// offsets stay covered; otherwise the estimate's own whitened mode columns
/// are added. The orthonormal interference basis is rebuilt from the full
/// retained set every time.
inline DetectionState update_interference(const DetectorContext& ctx, DetectionState state,
                                          const GicParams& params, const TargetEstimate& target) {
    const double epsilon = resolve_epsilon(params, *ctx.noise);
    const double radius = ctx.layout.propagation_speed / ctx.cfg.bandwidth;
    std::vector<Vec2> ball;
    if (params.mitigation_enabled) {
        ball = ctx.fine.ball_around(target.location, radius);
        if (ball.empty())
            warn("mitigation ball around the detection is empty; falling back to plain augmentation");
        const auto keep = even_subsample(static_cast<Index>(ball.size()), params.ball_cap);
        if (keep.size() < ball.size()) {
            std::vector<Vec2> subset;
            subset.reserve(keep.size());
            for (Index idx : keep) subset.push_back(ball[static_cast<std::size_t>(idx)]);
            ball = std::move(subset);
        }
    }

    for (int p = 0; p < ctx.num_rx(); ++p) {
        MatC& retained = state.retained[static_cast<std::size_t>(p)];
        auto append_columns = [&retained](const MatC& cols) {
            MatC grown(retained.rows(), retained.cols() + cols.cols());
            grown.leftCols(retained.cols()) = retained;
            grown.rightCols(cols.cols()) = cols;
            retained = std::move(grown);
        };
        if (!params.mitigation_enabled || ball.empty()) {
            append_columns(ctx.whitened_mode_at(p, target.location));
        } else {
            for (int n = 0; n < ctx.num_tx(); ++n) {
                const MitigationSpectrum spec =
                    mitigation_spectrum(ctx, state.interference[static_cast<std::size_t>(p)], p, n, ball);
                const int u = select_retained_count(spec.lambda, std::norm(target.gains(n, p)),
                                                    static_cast<Index>(ball.size()), epsilon, ctx.rank_tol);
                if (u == 0) continue;  // ball already inside the interference span
                append_columns(spec.left.leftCols(u));
            }
        }
        state.interference[static_cast<std::size_t>(p)] =
            orthonormal_range(retained, ctx.rank_tol, std::max(1.0, retained.norm()));
    }
    return state;
}

// ---------------------------------------------------------------------------
// Full procedure
// ---------------------------------------------------------------------------

inline DetectionReport run_msdis(const DetectorContext& ctx, const GicParams& params,
                                 const MeasurementSet& ms) {
    params.validate();
    const std::vector<VecC> whitened = whiten_measurements(ctx, ms);
    DetectionState state = make_initial_state(ctx);
    DetectionReport report;
    report.termination = Termination::k_max;

    for (int k = 1; k <= params.k_max; ++k) {
        state.iteration = k;
        ScoreMap map;
        IterationResult result =
            detect_iteration(ctx, state, params, whitened, params.record_score_maps ? &map : nullptr);
        if (result.grid_empty) {
            report.termination = Termination::empty_grid;
            break;
        }
        ++report.tests_run;
        if (params.record_score_maps) report.score_maps.push_back(std::move(map));
        if (!result.accepted) {
            report.termination = Termination::no_detection;
            break;
        }

        TargetEstimate target;
        target.location = result.location;
        target.score = result.score;
        target.iteration = k;
        target.gains = estimate_gains(ctx, state, whitened, result.location, &target.gain_rank_deficient);
        state.detections.push_back(target);

        if (k == params.k_max) break;  // report.termination stays k_max
        state = update_interference(ctx, std::move(state), params, target);
        state.active = prune_grid(state.active, ctx.layout, {target.location}, ctx.cfg.bandwidth);
    }

    report.targets = state.detections;
    // Reported targets must be pairwise separable; pruning guarantees it, and
    // a violation would mean the procedure itself is broken.
    for (std::size_t i = 0; i < report.targets.size(); ++i)
        for (std::size_t j = i + 1; j < report.targets.size(); ++j)
            if (!are_separable(ctx.layout, report.targets[i].location, report.targets[j].location,
                               ctx.cfg.bandwidth))
                throw NumericalError("detected targets violate the grid pruning rule");
    return report;
}

}  // namespace msdis
