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
#include <limits>
#include <vector>

#include "msdis/common.hpp"

namespace msdis {

/// Transmitter/receiver positions (2-D, meters) and propagation speed.
struct RadarLayout {
    std::vector<Vec2> tx_positions;
    std::vector<Vec2> rx_positions;
    double propagation_speed = kSpeedOfLight;

    int num_tx() const { return static_cast<int>(tx_positions.size()); }
    int num_rx() const { return static_cast<int>(rx_positions.size()); }

    void validate() const {
        if (tx_positions.empty() || rx_positions.empty())
            throw UsageError("layout needs at least one transmitter and one receiver");
        if (!(propagation_speed > 0.0)) throw UsageError("propagation speed must be positive");
        for (const auto& p : tx_positions)
            if (!p.allFinite()) throw UsageError("non-finite transmitter position");
        for (const auto& p : rx_positions)
            if (!p.allFinite()) throw UsageError("non-finite receiver position");
    }
};

/// Two-leg propagation time tx -> x -> rx for pair (p, n), in seconds.
inline double bistatic_delay(const RadarLayout& layout, int p, int n, const Vec2& x) {
    if (p < 0 || p >= layout.num_rx()) throw UsageError("receiver index out of range");
    if (n < 0 || n >= layout.num_tx()) throw UsageError("transmitter index out of range");
    return ((layout.rx_positions[p] - x).norm() + (layout.tx_positions[n] - x).norm()) / layout.propagation_speed;
}

/// Largest |delay(a) - delay(b)| over all (receiver, transmitter) pairs.
inline double max_pair_delay_gap(const RadarLayout& layout, const Vec2& a, const Vec2& b) {
    double gap = 0.0;
    for (int p = 0; p < layout.num_rx(); ++p)
        for (int n = 0; n < layout.num_tx(); ++n)
            gap = std::max(gap, std::abs(bistatic_delay(layout, p, n, a) - bistatic_delay(layout, p, n, b)));
    return gap;
}

/// Two locations are separable when at least one pair sees their delays
/// differ by strictly more than 1/W.
inline bool are_separable(const RadarLayout& layout, const Vec2& a, const Vec2& b, double bandwidth_hz) {
    if (!(bandwidth_hz > 0.0)) throw UsageError("bandwidth must be positive");
    return max_pair_delay_gap(layout, a, b) > 1.0 / bandwidth_hz;
}

/// Uniform rectangular search grid with a per-point active mask. Points are
/// ordered x-fastest then y (index = iy * nx + ix); all deterministic
/// tie-breaking ("lowest grid index") refers to this order.
struct SearchGrid {
    std::vector<Vec2> points;
    double spacing = 0.0;
    std::vector<std::uint8_t> active;  // 1 = member of the current search set

    int size() const { return static_cast<int>(points.size()); }
    bool is_active(int i) const { return active[static_cast<std::size_t>(i)] != 0; }
    int active_count() const {
        return static_cast<int>(std::count(active.begin(), active.end(), std::uint8_t(1)));
    }
};

inline SearchGrid make_search_grid(double xmin, double xmax, double ymin, double ymax, double spacing) {
    if (!(spacing > 0.0)) throw UsageError("grid spacing must be positive");
    if (!(xmax >= xmin) || !(ymax >= ymin)) throw UsageError("grid bounding box is empty");
    SearchGrid grid;
    grid.spacing = spacing;
    const int nx = static_cast<int>(std::floor((xmax - xmin) / spacing + 1e-9)) + 1;
    const int ny = static_cast<int>(std::floor((ymax - ymin) / spacing + 1e-9)) + 1;
    grid.points.reserve(static_cast<std::size_t>(nx) * ny);
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix)
            grid.points.emplace_back(xmin + ix * spacing, ymin + iy * spacing);
    grid.active.assign(grid.points.size(), 1);
    return grid;
}

/// Fine localization lattice. Stored implicitly (anchor + spacing) because at
/// production spacings the materialized point list would not fit in memory;
/// balls around a detection are enumerated on demand.
struct FineGrid {
    double xmin = 0.0, xmax = 0.0, ymin = 0.0, ymax = 0.0;
    double spacing = 0.0;

    /// Lattice points g with ||g - center|| <= radius (inclusive).
    std::vector<Vec2> ball_around(const Vec2& center, double radius) const {
        std::vector<Vec2> out;
        const int ix_lo = static_cast<int>(std::ceil((std::max(center.x() - radius, xmin) - xmin) / spacing - 1e-12));
        const int ix_hi = static_cast<int>(std::floor((std::min(center.x() + radius, xmax) - xmin) / spacing + 1e-12));
        const int iy_lo = static_cast<int>(std::ceil((std::max(center.y() - radius, ymin) - ymin) / spacing - 1e-12));
        const int iy_hi = static_cast<int>(std::floor((std::min(center.y() + radius, ymax) - ymin) / spacing + 1e-12));
        const double r2 = radius * radius;
        for (int iy = iy_lo; iy <= iy_hi; ++iy) {
            for (int ix = ix_lo; ix <= ix_hi; ++ix) {
                Vec2 g(xmin + ix * spacing, ymin + iy * spacing);
                if ((g - center).squaredNorm() <= r2) out.push_back(g);
            }
        }
        return out;
    }

    /// Full lattice, for small test grids only.
    std::vector<Vec2> all_points() const {
        std::vector<Vec2> out;
        const int nx = static_cast<int>(std::floor((xmax - xmin) / spacing + 1e-9)) + 1;
        const int ny = static_cast<int>(std::floor((ymax - ymin) / spacing + 1e-9)) + 1;
        out.reserve(static_cast<std::size_t>(nx) * ny);
        for (int iy = 0; iy < ny; ++iy)
            for (int ix = 0; ix < nx; ++ix)
                out.emplace_back(xmin + ix * spacing, ymin + iy * spacing);
        return out;
    }
};

inline FineGrid make_fine_grid(double xmin, double xmax, double ymin, double ymax, double spacing,
                               double coarse_spacing) {
    if (!(spacing > 0.0)) throw UsageError("fine grid spacing must be positive");
    if (!(spacing < coarse_spacing / 10.0))
        throw UsageError("fine grid spacing must be below a tenth of the coarse spacing");
    return FineGrid{xmin, xmax, ymin, ymax, spacing};
}

struct DelaySpan {
    double tau_min = 0.0;
    double tau_max = 0.0;
};

/// Extreme bistatic delays over every (receiver, transmitter, grid point)
/// triple. Uses all grid points regardless of the active mask: the sampling
/// window is fixed once per scenario.
inline DelaySpan delay_window(const RadarLayout& layout, const SearchGrid& grid) {
    if (grid.points.empty()) throw UsageError("delay_window requires a nonempty grid");
    DelaySpan span{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (int p = 0; p < layout.num_rx(); ++p) {
        for (int n = 0; n < layout.num_tx(); ++n) {
            for (const auto& g : grid.points) {
                const double tau = bistatic_delay(layout, p, n, g);
                span.tau_min = std::min(span.tau_min, tau);
                span.tau_max = std::max(span.tau_max, tau);
            }
        }
    }
    return span;
}

/// Search-set update: a point survives only if every detected target is
/// resolvable from it (some pair sees a delay gap strictly above 1/W).
inline SearchGrid prune_grid(const SearchGrid& grid, const RadarLayout& layout,
                             const std::vector<Vec2>& detections, double bandwidth_hz) {
    SearchGrid out = grid;
    if (detections.empty()) return out;
    const double resolution = 1.0 / bandwidth_hz;
    for (int i = 0; i < grid.size(); ++i) {
        if (!out.is_active(i)) continue;
        for (const auto& det : detections) {
            if (max_pair_delay_gap(layout, grid.points[static_cast<std::size_t>(i)], det) <= resolution) {
                out.active[static_cast<std::size_t>(i)] = 0;
                break;
            }
        }
    }
    return out;
}

}  // namespace msdis
