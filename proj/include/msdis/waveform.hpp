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
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "msdis/common.hpp"
#include "msdis/geometry.hpp"
#include "msdis/rng.hpp"

namespace msdis {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Pulse-train and sampling parameters. The transmitted pulse is a train of L
/// rectangular chips of duration T/L; the receive filter is a rectangular
/// window of length T_phi with amplitude sqrt(L/T).
struct WaveformConfig {
    double pulse_duration = 0.0;    // T, seconds
    int code_length = 0;            // L, chips per pulse
    double bandwidth = 0.0;         // W, Hz (two-sided)
    double sample_interval = 0.0;   // T_s, seconds
    double filter_support = 0.0;    // T_phi, seconds

    double chip_duration() const { return pulse_duration / code_length; }
    double filter_amplitude() const { return std::sqrt(code_length / pulse_duration); }

    /// End of the filtered pulse support [0, T + T_phi].
    double support_end() const { return pulse_duration + filter_support; }

    void validate(int num_tx) const {
        if (!(pulse_duration > 0.0)) throw UsageError("pulse duration must be positive");
        if (code_length < 1) throw UsageError("code length must be at least 1");
        if (!(bandwidth > 0.0)) throw UsageError("bandwidth must be positive");
        if (!(sample_interval > 0.0)) throw UsageError("sample interval must be positive");
        if (!(filter_support > 0.0)) throw UsageError("filter support must be positive");
        if (bandwidth * pulse_duration < 4.0 * num_tx)
            warn("time-bandwidth product W*T = " + std::to_string(bandwidth * pulse_duration) +
                 " is small relative to the transmitter count; code cross-correlations will be poor");
    }
};

/// filter_support <= 0 selects the default matched to one chip.
inline WaveformConfig make_waveform_config(double pulse_duration, int code_length, double bandwidth,
                                           double sample_interval, double filter_support = 0.0) {
    WaveformConfig cfg;
    cfg.pulse_duration = pulse_duration;
    cfg.code_length = code_length;
    cfg.bandwidth = bandwidth;
    cfg.sample_interval = sample_interval;
    cfg.filter_support = filter_support > 0.0 ? filter_support : pulse_duration / code_length;
    return cfg;
}

// ---------------------------------------------------------------------------
// Phase codes
// ---------------------------------------------------------------------------

/// One code per transmitter, chips drawn from {1, i, -1, -i}. Stored as an
/// L x N matrix so column n is the code of transmitter n.
struct PhaseCodeBank {
    MatC codes;
    std::uint64_t seed = 0;

    int num_tx() const { return static_cast<int>(codes.cols()); }
    int length() const { return static_cast<int>(codes.rows()); }
};

inline PhaseCodeBank generate_codes(int num_tx, int code_length, std::uint64_t seed) {
    if (num_tx < 1 || code_length < 1) throw UsageError("code bank needs num_tx >= 1 and code_length >= 1");
    PhaseCodeBank bank;
    bank.seed = seed;
    bank.codes.resize(code_length, num_tx);
    Rng rng(derive_seed(seed, stream::codes));
    for (int n = 0; n < num_tx; ++n)
        for (int l = 0; l < code_length; ++l) bank.codes(l, n) = rng.four_phase_chip();
    return bank;
}

// ---------------------------------------------------------------------------
// Filtered waveform, evaluated in closed form
// ---------------------------------------------------------------------------

/// Value of the filtered pulse of transmitter n at time t. The convolution of
/// the rectangular chip train with the rectangular filter reduces, per chip,
/// to the overlap length of [t - T_phi, t] with the chip interval; the result
/// is continuous and piecewise linear with support [0, T + T_phi].
inline Complex filtered_waveform_value(const PhaseCodeBank& bank, const WaveformConfig& cfg, int n, double t) {
    if (n < 0 || n >= bank.num_tx()) throw UsageError("transmitter index out of range");
    if (t <= 0.0 || t >= cfg.support_end()) return Complex(0.0, 0.0);
    const double tc = cfg.chip_duration();
    // Only chips intersecting the integration window [t - T_phi, t] contribute.
    const int lo = std::max(0, static_cast<int>(std::floor((t - cfg.filter_support) / tc)));
    const int hi = std::min(cfg.code_length - 1, static_cast<int>(std::floor(t / tc)));
    Complex acc(0.0, 0.0);
    for (int l = lo; l <= hi; ++l) {
        const double overlap = std::min(t, (l + 1) * tc) - std::max(t - cfg.filter_support, l * tc);
        if (overlap > 0.0) acc += bank.codes(l, n) * overlap;
    }
    return acc * cfg.filter_amplitude();
}

// ---------------------------------------------------------------------------
// Sampled signatures
// ---------------------------------------------------------------------------

/// Number of samples covering every echo from the grid:
/// M = ceil((T + T_phi + tau_max - tau_min) / T_s).
inline Index sample_count(const WaveformConfig& cfg, const DelaySpan& span) {
    if (!(span.tau_max >= span.tau_min)) throw UsageError("invalid delay span");
    return static_cast<Index>(std::ceil((cfg.support_end() + span.tau_max - span.tau_min) / cfg.sample_interval));
}

/// Sampling window shared by every signature and measurement in a scenario:
/// sample m sits at m * T_s + tau_min.
struct SampleWindow {
    double tau_min = 0.0;
    double tau_max = 0.0;
    Index m_samples = 0;
    double sample_interval = 0.0;
};

inline SampleWindow make_window(const WaveformConfig& cfg, const DelaySpan& span) {
    return SampleWindow{span.tau_min, span.tau_max, sample_count(cfg, span), cfg.sample_interval};
}

/// Sampled echo of transmitter n arriving with the given delay: element m is
/// the filtered pulse at m*T_s + tau_min - delay (m = 0..M-1). Only the
/// difference tau_min - delay enters, so shifting both leaves the vector
/// unchanged.
inline VecC signature_for_delay(const PhaseCodeBank& bank, const WaveformConfig& cfg, int n, double delay,
                                double tau_min, Index m_samples) {
    VecC sig(m_samples);
    const double offset = tau_min - delay;
    for (Index m = 0; m < m_samples; ++m)
        sig(m) = filtered_waveform_value(bank, cfg, n, static_cast<double>(m) * cfg.sample_interval + offset);
    return sig;
}

inline VecC signature_vector(const PhaseCodeBank& bank, const WaveformConfig& cfg, const RadarLayout& layout,
                             int p, int n, const Vec2& x, double tau_min, Index m_samples) {
    return signature_for_delay(bank, cfg, n, bistatic_delay(layout, p, n, x), tau_min, m_samples);
}

/// All transmitter signatures for one receiver and one candidate location,
/// stacked column-wise.
struct SignatureMatrix {
    MatC entries;  // M x N
    Vec2 location = Vec2::Zero();

    Index rows() const { return entries.rows(); }
    int num_tx() const { return static_cast<int>(entries.cols()); }
};

inline SignatureMatrix mode_matrix(const PhaseCodeBank& bank, const WaveformConfig& cfg,
                                   const RadarLayout& layout, int p, const Vec2& x, double tau_min,
                                   Index m_samples) {
    SignatureMatrix out;
    out.location = x;
    out.entries.resize(m_samples, bank.num_tx());
    for (int n = 0; n < bank.num_tx(); ++n)
        out.entries.col(n) = signature_vector(bank, cfg, layout, p, n, x, tau_min, m_samples);
    return out;
}

// ---------------------------------------------------------------------------
// Signature cache
// ---------------------------------------------------------------------------

/// Memoizes per-(receiver, location) matrices. Locations are quantized to a
/// nanometer lattice for the key, far below any grid pitch in use, so the
/// cache never conflates distinct grid points. Purely an accelerator.
class SignatureCache {
  public:
    template <typename Factory>
    std::shared_ptr<const MatC> get_or_compute(int receiver, const Vec2& x, Factory&& factory) {
        const Key key{receiver, quantize(x.x()), quantize(x.y())};
        {
            std::lock_guard<std::mutex> lock(mutex_);
            auto it = map_.find(key);
            if (it != map_.end()) return it->second;
        }
        auto value = std::make_shared<const MatC>(factory());
        std::lock_guard<std::mutex> lock(mutex_);
        return map_.emplace(key, std::move(value)).first->second;
    }

    std::size_t size() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return map_.size();
    }

    void clear() {
        std::lock_guard<std::mutex> lock(mutex_);
        map_.clear();
    }

  private:
    struct Key {
        int receiver;
        std::int64_t qx, qy;
        bool operator==(const Key& o) const { return receiver == o.receiver && qx == o.qx && qy == o.qy; }
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const {
            std::uint64_t h = 0x9e3779b97f4a7c15ull ^ static_cast<std::uint64_t>(k.receiver);
            h += static_cast<std::uint64_t>(k.qx);
            h = splitmix64(h);
            h += static_cast<std::uint64_t>(k.qy);
            h = splitmix64(h);
            return static_cast<std::size_t>(h);
        }
    };
    static std::int64_t quantize(double v) { return static_cast<std::int64_t>(std::llround(v * 1e9)); }

    mutable std::mutex mutex_;
    std::unordered_map<Key, std::shared_ptr<const MatC>, KeyHash> map_;
};

}  // namespace msdis
