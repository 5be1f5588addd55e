// SPDX-License-Identifier: Apache-2.0
//
// stnsec: cognitive secure downlink scheduling for satellite-terrestrial networks
// Copyright (C) 2026 The stnsec authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef STNSEC_BASELINES_HPP
#define STNSEC_BASELINES_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "stnsec/error.hpp"
#include "stnsec/grid.hpp"
#include "stnsec/rng.hpp"

namespace stnsec {

/// Chaotic logistic-map slot sequence: x <- r x (1 - x), slot = floor(x q).
class LogisticHopper {
public:
    LogisticHopper(double r, double x0, int q) : r_(r), x_(x0), q_(q) {
        if (!(r > 3.57 && r <= 4.0)) throw DomainError("logistic parameter must lie in (3.57, 4]");
        if (!(x0 > 0.0 && x0 < 1.0)) throw DomainError("logistic state must lie in (0, 1)");
        if (r == 4.0 && x0 == 0.5) throw DomainError("x0 = 0.5 collapses the r = 4 orbit");
        if (q < 1) throw DomainError("need at least one slot");
    }

    double state() const { return x_; }

    int next() {
        x_ = r_ * x_ * (1.0 - x_);
        return std::clamp(static_cast<int>(std::floor(x_ * q_)), 0, q_ - 1);
    }

private:
    double r_, x_;
    int q_;
};

/// Initial states for per-UE hoppers, distinct and away from the map's fixed points.
inline std::vector<LogisticHopper> make_hoppers(int count, double r, int q, std::uint64_t seed) {
    std::vector<LogisticHopper> out;
    Rng rng(seed);
    for (int i = 0; i < count; ++i) out.emplace_back(r, 0.05 + 0.9 * rng.uniform(), q);
    return out;
}

namespace detail {

// Satellites take the first disjoint band layout of the widest equal width.
inline void assign_default_bands(ResourcePlan& p) {
    const auto& d = p.dims;
    if (d.n_sats == 0) return;
    const int w = d.max_band_width();
    const auto cat = band_catalog(d, w);
    if (cat.empty()) throw CapacityError("no disjoint band layout fits the grid");
    for (int n = 0; n < d.n_sats; ++n) p.set_band(n, cat[0][static_cast<std::size_t>(n)], w);
}

inline NodeSlotState fresh_state(const ResourcePlan& p, int z) {
    const auto& d = p.dims;
    std::vector<std::uint8_t> allowed(static_cast<std::size_t>(d.freq_slots), 1);
    if (d.is_satellite(z))
        for (int f = 0; f < d.freq_slots; ++f) allowed[static_cast<std::size_t>(f)] = p.s(z, f);
    return NodeSlotState(d.ues(z), d.freq_slots, d.time_slots, allowed, d.period_reuse);
}

inline void check_schedulable(const GridDims& d) {
    d.check();
    for (int z = 0; z < d.n_nodes(); ++z) {
        const int room = d.is_satellite(z) ? d.max_band_width() : d.freq_slots;
        if (d.ues(z) > room) throw CapacityError("node " + std::to_string(z) + " has more UEs than slots");
    }
}

}  // namespace detail

/// AN-assisted frequency hopping: each UE follows its hopper; a taken or
/// unschedulable slot moves to the next feasible one. A fraction of each UE's
/// power is artificial noise on the data slot itself (no decoy slots).
inline ResourcePlan an_fh_plan(const GridDims& d, std::vector<LogisticHopper> hoppers, double an_fraction,
                               const std::vector<double>& pmax) {
    detail::check_schedulable(d);
    if (static_cast<int>(hoppers.size()) != d.total_ues()) throw ShapeError("one hopper per UE");
    if (!(an_fraction >= 0.0 && an_fraction < 1.0)) throw DomainError("AN fraction must lie in [0, 1)");
    if (static_cast<int>(pmax.size()) != d.n_nodes()) throw ShapeError("one power budget per node");
    ResourcePlan p(d);
    p.pmax = pmax;
    detail::assign_default_bands(p);
    for (int z = 0; z < d.n_nodes(); ++z) {
        const auto zi = static_cast<std::size_t>(z);
        NodeSlotState ns = detail::fresh_state(p, z);
        const double per_ue = pmax[zi] / std::max(1, d.ues(z));
        for (int l = 0; l < d.time_slots; ++l)
            for (int k = 0; k < d.ues(z); ++k) {
                const int want = hoppers[static_cast<std::size_t>(d.ue_offset(z) + k)].next();
                const auto mask = ns.feasible_mask();
                int f = -1;
                for (int s = 0; s < d.freq_slots && f < 0; ++s) {
                    const int c = (want + s) % d.freq_slots;
                    if (mask[static_cast<std::size_t>(c)]) f = c;
                }
                if (f < 0) throw CapacityError("hopping schedule cannot be completed");
                ns.place(f);
                p.x[zi](l, k, f) = 1;
                p.pd[zi](l, k) = (1.0 - an_fraction) * per_ue;
                p.pa[zi](l, k) = an_fraction * per_ue;
            }
    }
    return p;
}

/// Lowest-index feasible slot for every UE at every step, equal power, no decoys.
inline ResourcePlan greedy_plan(const GridDims& d, const std::vector<double>& pmax) {
    detail::check_schedulable(d);
    if (static_cast<int>(pmax.size()) != d.n_nodes()) throw ShapeError("one power budget per node");
    ResourcePlan p(d);
    p.pmax = pmax;
    detail::assign_default_bands(p);
    for (int z = 0; z < d.n_nodes(); ++z) {
        const auto zi = static_cast<std::size_t>(z);
        NodeSlotState ns = detail::fresh_state(p, z);
        const double per_ue = pmax[zi] / std::max(1, d.ues(z));
        for (int l = 0; l < d.time_slots; ++l)
            for (int k = 0; k < d.ues(z); ++k) {
                const auto mask = ns.feasible_mask();
                const auto it = std::find(mask.begin(), mask.end(), 1);
                if (it == mask.end()) throw CapacityError("greedy schedule cannot be completed");
                const int f = static_cast<int>(it - mask.begin());
                ns.place(f);
                p.x[zi](l, k, f) = 1;
                p.pd[zi](l, k) = per_ue;
            }
    }
    return p;
}

}  // namespace stnsec

#endif  // STNSEC_BASELINES_HPP
