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
#include <cstdint>
#include <numbers>

#include "msdis/common.hpp"

// Self-contained xoshiro256++ generator with splitmix64 seeding. The standard
// <random> distributions are implementation-defined, which would make stored
// results differ across standard libraries; everything here is pinned down so
// a (seed, stream, counter) triple always produces the same draw.

namespace msdis {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Derives an independent substream seed from a master seed and up to two
/// labels (stream id, counter). Used for per-trial / per-receiver streams so
/// results do not depend on evaluation order or worker scheduling.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t counter = 0) {
    std::uint64_t s = master;
    (void)splitmix64(s);
    s ^= 0xA0761D6478BD642Full * (stream + 1);
    (void)splitmix64(s);
    s ^= 0xE7037ED1A0B428DBull * (counter + 1);
    std::uint64_t out = splitmix64(s);
    return out ^ splitmix64(s);
}

namespace stream {
inline constexpr std::uint64_t codes = 1;
inline constexpr std::uint64_t amplitude = 2;
inline constexpr std::uint64_t noise = 3;
inline constexpr std::uint64_t trial = 4;
inline constexpr std::uint64_t calibration = 5;
inline constexpr std::uint64_t validation = 6;
inline constexpr std::uint64_t ball_subsample = 7;
}  // namespace stream

class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller (sin partner cached).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * uniform();
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    /// Circularly-symmetric complex normal, unit variance: E|z|^2 = 1.
    Complex complex_normal() {
        const double re = normal();
        const double im = normal();
        return Complex(re, im) * std::numbers::sqrt2 / 2.0;
    }

    /// Unit-modulus value with uniform phase.
    Complex random_phase() {
        const double theta = 2.0 * std::numbers::pi * uniform();
        return Complex(std::cos(theta), std::sin(theta));
    }

    /// One chip from the four-phase alphabet {1, i, -1, -i}.
    Complex four_phase_chip() {
        switch (next_u64() >> 62) {
            case 0: return Complex(1.0, 0.0);
            case 1: return Complex(0.0, 1.0);
            case 2: return Complex(-1.0, 0.0);
            default: return Complex(0.0, -1.0);
        }
    }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // Lemire-style rejection-free enough at 64 bits for our use; bias is
        // ~n/2^64 which is far below Monte Carlo resolution.
        return next_u64() % n;
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t state_[4]{};
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace msdis
