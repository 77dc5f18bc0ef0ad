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
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "msdis/common.hpp"
#include "msdis/geometry.hpp"
#include "msdis/rng.hpp"
#include "msdis/subspace.hpp"
#include "msdis/waveform.hpp"

namespace msdis {

// ---------------------------------------------------------------------------
// Noise
// ---------------------------------------------------------------------------

enum class NoiseKind { white, custom };

/// Per-receiver noise covariances. Noise is independent across receivers.
struct NoiseModel {
    std::vector<MatC> covariances;  // P matrices, each M x M
    NoiseKind kind = NoiseKind::white;

    int num_rx() const { return static_cast<int>(covariances.size()); }

    void validate() const {
        if (covariances.empty()) throw UsageError("noise model needs at least one receiver");
        const Index m = covariances.front().rows();
        for (const auto& c : covariances) {
            if (c.rows() != m || c.cols() != m) throw UsageError("noise covariances must share one size");
            if ((c - c.adjoint()).norm() > 1e-12 * std::max(1.0, c.norm()))
                throw UsageError("noise covariance is not Hermitian");
        }
    }
};

inline NoiseModel make_white_noise(int num_rx, Index m_samples, double variance) {
    if (!(variance > 0.0)) throw UsageError("noise variance must be positive");
    NoiseModel noise;
    noise.kind = NoiseKind::white;
    noise.covariances.assign(static_cast<std::size_t>(num_rx),
                             MatC::Identity(m_samples, m_samples) * variance);
    return noise;
}

inline std::vector<Whitener> whiteners_for(const NoiseModel& noise) {
    std::vector<Whitener> out;
    out.reserve(noise.covariances.size());
    for (const auto& c : noise.covariances) out.push_back(whitener_from(c));
    return out;
}

/// Hermitian square roots C_p^{1/2}, used to draw correlated noise.
inline std::vector<MatC> noise_roots(const NoiseModel& noise) {
    std::vector<MatC> roots;
    roots.reserve(noise.covariances.size());
    for (const auto& c : noise.covariances) {
        Eigen::SelfAdjointEigenSolver<MatC> eig((c + c.adjoint()) / 2.0);
        if (eig.info() != Eigen::Success) throw NumericalError("covariance eigendecomposition failed");
        if (eig.eigenvalues()(0) < 0.0) throw SingularCovarianceError("covariance is not positive semidefinite");
        roots.push_back(eig.eigenvectors() * eig.eigenvalues().cwiseSqrt().asDiagonal() *
                        eig.eigenvectors().adjoint());
    }
    return roots;
}

// ---------------------------------------------------------------------------
// Targets and measurements
// ---------------------------------------------------------------------------

/// Ground-truth target: location plus the complex gains seen by every
/// (transmitter, receiver) pair. gains(n, p) multiplies the echo of
/// transmitter n at receiver p.
struct TruthTarget {
    Vec2 location = Vec2::Zero();
    MatC gains;  // N x P
    double snr_db = 0.0;
};

struct MeasurementSet {
    std::vector<VecC> vectors;  // P vectors of length M
    std::shared_ptr<const NoiseModel> noise;
    SampleWindow window;

    int num_rx() const { return static_cast<int>(vectors.size()); }
};

/// Mean whitened echo energy per (transmitter, receiver) pair at a location:
/// (1/NP) * sum over (p, n) of ||C_p^{-1/2} s_{p,n}(x)||^2. The per-target
/// SNR equals this times the squared common gain magnitude.
inline double mean_whitened_energy(const PhaseCodeBank& bank, const WaveformConfig& cfg,
                                   const RadarLayout& layout, const std::vector<Whitener>& whiteners,
                                   const SampleWindow& window, const Vec2& location) {
    double total = 0.0;
    for (int p = 0; p < layout.num_rx(); ++p) {
        for (int n = 0; n < layout.num_tx(); ++n) {
            VecC sig = signature_vector(bank, cfg, layout, p, n, location, window.tau_min, window.m_samples);
            total += whiteners[static_cast<std::size_t>(p)].apply(sig).squaredNorm();
        }
    }
    return total / (layout.num_tx() * layout.num_rx());
}

/// Draws unit-modulus gains with independent uniform phases, then applies one
/// common positive magnitude so the configured SNR is met exactly.
inline MatC amplitude_scale(const PhaseCodeBank& bank, const WaveformConfig& cfg, const RadarLayout& layout,
                            const std::vector<Whitener>& whiteners, const SampleWindow& window,
                            const Vec2& location, double snr_db, std::uint64_t seed) {
    const double mean_energy =
        mean_whitened_energy(bank, cfg, layout, whiteners, window, location);
    if (!(mean_energy > 0.0))
        throw DegenerateSceneError("target produces no echo inside the sampled window");
    const double rho = std::sqrt(std::pow(10.0, snr_db / 10.0) / mean_energy);
    Rng rng(seed);
    MatC gains(layout.num_tx(), layout.num_rx());
    for (int p = 0; p < layout.num_rx(); ++p)
        for (int n = 0; n < layout.num_tx(); ++n) gains(n, p) = rho * rng.random_phase();
    return gains;
}

inline TruthTarget make_truth_target(const PhaseCodeBank& bank, const WaveformConfig& cfg,
                                     const RadarLayout& layout, const std::vector<Whitener>& whiteners,
                                     const SampleWindow& window, const Vec2& location, double snr_db,
                                     std::uint64_t seed) {
    TruthTarget target;
    target.location = location;
    target.snr_db = snr_db;
    target.gains = amplitude_scale(bank, cfg, layout, whiteners, window, location, snr_db, seed);
    return target;
}

/// Recomputes the realized SNR from the stored gains; -inf for zero gains.
inline double realized_snr(const PhaseCodeBank& bank, const WaveformConfig& cfg, const RadarLayout& layout,
                           const std::vector<Whitener>& whiteners, const SampleWindow& window,
                           const TruthTarget& target) {
    double total = 0.0;
    for (int p = 0; p < layout.num_rx(); ++p) {
        for (int n = 0; n < layout.num_tx(); ++n) {
            VecC sig =
                signature_vector(bank, cfg, layout, p, n, target.location, window.tau_min, window.m_samples);
            total += std::norm(target.gains(n, p)) *
                     whiteners[static_cast<std::size_t>(p)].apply(sig).squaredNorm();
        }
    }
    const double mean = total / (layout.num_tx() * layout.num_rx());
    if (!(mean > 0.0)) return -std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(mean);
}

/// r_p = sum_k S_p(x_k) a_{p,k} + w_p with w_p ~ CN(0, C_p). Deterministic
/// given the seed; the noise stream does not depend on the target list, so
/// the same seed yields the same noise with and without targets.
inline MeasurementSet synthesize(const PhaseCodeBank& bank, const WaveformConfig& cfg,
                                 const RadarLayout& layout, const std::vector<TruthTarget>& targets,
                                 std::shared_ptr<const NoiseModel> noise, const std::vector<MatC>& roots,
                                 const SampleWindow& window, std::uint64_t seed) {
    for (std::size_t i = 0; i < targets.size(); ++i)
        for (std::size_t j = i + 1; j < targets.size(); ++j)
            if (!are_separable(layout, targets[i].location, targets[j].location, cfg.bandwidth))
                warn("targets " + std::to_string(i) + " and " + std::to_string(j) +
                     " are not separable at the configured bandwidth");

    MeasurementSet out;
    out.noise = std::move(noise);
    out.window = window;
    out.vectors.resize(static_cast<std::size_t>(layout.num_rx()));
    for (int p = 0; p < layout.num_rx(); ++p) {
        VecC r = VecC::Zero(window.m_samples);
        for (const auto& target : targets) {
            const SignatureMatrix s =
                mode_matrix(bank, cfg, layout, p, target.location, window.tau_min, window.m_samples);
            r.noalias() += s.entries * target.gains.col(p);
        }
        Rng rng(derive_seed(seed, stream::noise, static_cast<std::uint64_t>(p)));
        VecC z(window.m_samples);
        for (Index m = 0; m < window.m_samples; ++m) z(m) = rng.complex_normal();
        r.noalias() += roots[static_cast<std::size_t>(p)] * z;
        out.vectors[static_cast<std::size_t>(p)] = std::move(r);
    }
    return out;
}

/// Noise-free variant, for linearity checks and oracle construction.
inline MeasurementSet synthesize_clean(const PhaseCodeBank& bank, const WaveformConfig& cfg,
                                       const RadarLayout& layout, const std::vector<TruthTarget>& targets,
                                       std::shared_ptr<const NoiseModel> noise, const SampleWindow& window) {
    MeasurementSet out;
    out.noise = std::move(noise);
    out.window = window;
    out.vectors.resize(static_cast<std::size_t>(layout.num_rx()));
    for (int p = 0; p < layout.num_rx(); ++p) {
        VecC r = VecC::Zero(window.m_samples);
        for (const auto& target : targets) {
            const SignatureMatrix s =
                mode_matrix(bank, cfg, layout, p, target.location, window.tau_min, window.m_samples);
            r.noalias() += s.entries * target.gains.col(p);
        }
        out.vectors[static_cast<std::size_t>(p)] = std::move(r);
    }
    return out;
}

}  // namespace msdis
