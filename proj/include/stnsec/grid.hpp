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

#ifndef STNSEC_GRID_HPP
#define STNSEC_GRID_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "stnsec/error.hpp"

namespace stnsec {

/// Sizes of the time-frequency grid. Nodes are indexed satellites first, then
/// base stations; ue_counts has one entry per node.
struct GridDims {
    int n_sats = 0;
    int n_bs = 1;
    int time_slots = 1;
    int freq_slots = 1;
    std::vector<int> ue_counts{1};
    bool contiguous_bands = true;
    bool period_reuse = true;  // each UE uses each slot at most once per period

    int n_nodes() const { return n_sats + n_bs; }
    bool is_satellite(int z) const { return z < n_sats; }
    int ues(int z) const { return ue_counts.at(static_cast<std::size_t>(z)); }
    int total_ues() const { return std::accumulate(ue_counts.begin(), ue_counts.end(), 0); }
    int max_band_width() const { return n_sats > 0 ? freq_slots / n_sats : freq_slots; }

    int ue_offset(int z) const {
        int off = 0;
        for (int i = 0; i < z; ++i) off += ues(i);
        return off;
    }
    /// Global UE index -> (node, local index).
    std::pair<int, int> attachment(int ue) const {
        for (int z = 0; z < n_nodes(); ++z) {
            if (ue < ues(z)) return {z, ue};
            ue -= ues(z);
        }
        throw ShapeError("UE index out of range");
    }

    void check() const {
        if (n_sats < 0 || n_bs < 0 || n_nodes() == 0) throw ShapeError("grid needs at least one node");
        if (time_slots < 1 || freq_slots < 1) throw ShapeError("grid needs L >= 1 and q >= 1");
        if (static_cast<int>(ue_counts.size()) != n_nodes()) throw ShapeError("ue_counts must have one entry per node");
        for (int k : ue_counts)
            if (k < 0) throw ShapeError("negative UE count");
    }

    bool operator==(const GridDims&) const = default;
};

/// Dense rank-2 array, row-major.
template <class T>
struct Grid2 {
    int rows = 0, cols = 0;
    std::vector<T> v;

    Grid2() = default;
    Grid2(int r, int c, T init = T{}) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, init) {}
    T& operator()(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
    const T& operator()(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
    bool operator==(const Grid2&) const = default;
};

/// Dense rank-3 array indexed (time, ue, slot).
template <class T>
struct Grid3 {
    int n0 = 0, n1 = 0, n2 = 0;
    std::vector<T> v;

    Grid3() = default;
    Grid3(int a, int b, int c, T init = T{})
        : n0(a), n1(b), n2(c), v(static_cast<std::size_t>(a) * b * c, init) {}
    T& operator()(int i, int j, int k) { return v[(static_cast<std::size_t>(i) * n1 + j) * n2 + k]; }
    const T& operator()(int i, int j, int k) const { return v[(static_cast<std::size_t>(i) * n1 + j) * n2 + k]; }
    bool operator==(const Grid3&) const = default;

    /// Slot chosen in row (i, j), or -1 when the row is empty. Assumes at most one 1.
    int slot_of(int i, int j) const {
        for (int k = 0; k < n2; ++k)
            if ((*this)(i, j, k)) return k;
        return -1;
    }
};

using BandPlan = Grid2<std::uint8_t>;
using NodePattern = Grid3<std::uint8_t>;

struct ResourcePlan {
    GridDims dims;
    BandPlan s;                      // N x q
    std::vector<NodePattern> x;      // per node, L x K_z x q
    std::vector<NodePattern> a;      // per node, L x K_z x q
    std::vector<Grid2<double>> pd;   // per node, L x K_z, watts
    std::vector<Grid2<double>> pa;   // per node, L x K_z, watts
    std::vector<double> pmax;        // per node budget, watts

    ResourcePlan() = default;
    explicit ResourcePlan(const GridDims& d, double budget = 1.0) : dims(d) {
        d.check();
        s = BandPlan(d.n_sats, d.freq_slots, 0);
        for (int z = 0; z < d.n_nodes(); ++z) {
            x.emplace_back(d.time_slots, d.ues(z), d.freq_slots, 0);
            a.emplace_back(d.time_slots, d.ues(z), d.freq_slots, 0);
            pd.emplace_back(d.time_slots, d.ues(z), 0.0);
            pa.emplace_back(d.time_slots, d.ues(z), 0.0);
        }
        pmax.assign(static_cast<std::size_t>(d.n_nodes()), budget);
    }

    bool operator==(const ResourcePlan&) const = default;

    /// Slots [begin, begin + width) assigned to satellite n; clears the rest of its row.
    void set_band(int n, int begin, int width) {
        for (int f = 0; f < dims.freq_slots; ++f) s(n, f) = (f >= begin && f < begin + width) ? 1 : 0;
    }

    /// Allowed-slot mask of node z: its band row for a satellite, everything for a BS.
    std::vector<std::uint8_t> allowed_slots(int z) const {
        if (!dims.is_satellite(z)) return std::vector<std::uint8_t>(static_cast<std::size_t>(dims.freq_slots), 1);
        std::vector<std::uint8_t> m(static_cast<std::size_t>(dims.freq_slots));
        for (int f = 0; f < dims.freq_slots; ++f) m[static_cast<std::size_t>(f)] = s(z, f);
        return m;
    }
};

enum class Constraint {
    shape,
    binary,
    band_exclusive,       // at most one satellite per slot
    band_contiguous,      // a satellite band is one run
    band_width,           // run no wider than q / N
    occupancy_one_hot,    // every (z, l, k) transmits on exactly one slot
    occupancy_exclusive,  // at most one UE per (z, l, f)
    period_reuse,         // a UE uses a slot at most once per period
    period_too_long,      // q < L makes period_reuse unsatisfiable
    band_gating,          // satellite data only inside its band
    adversarial_single,   // at most one decoy per (z, l, k)
    adversarial_overlap,  // decoy on the UE's own data slot
    adversarial_collision,  // decoy on another UE's data slot, same node and time
    adversarial_exclusive,  // two decoys on one (z, l, f)
    adversarial_band,     // satellite decoy outside its band
    power_negative,
    power_budget,
};

inline const char* to_string(Constraint c) {
    switch (c) {
        case Constraint::shape: return "shape";
        case Constraint::binary: return "binary";
        case Constraint::band_exclusive: return "band-exclusive";
        case Constraint::band_contiguous: return "band-contiguous";
        case Constraint::band_width: return "band-width";
        case Constraint::occupancy_one_hot: return "occupancy-one-hot";
        case Constraint::occupancy_exclusive: return "occupancy-exclusive";
        case Constraint::period_reuse: return "period-reuse";
        case Constraint::period_too_long: return "period-too-long";
        case Constraint::band_gating: return "band-gating";
        case Constraint::adversarial_single: return "adversarial-single";
        case Constraint::adversarial_overlap: return "A/X overlap";
        case Constraint::adversarial_collision: return "adversarial-collision";
        case Constraint::adversarial_exclusive: return "adversarial-exclusive";
        case Constraint::adversarial_band: return "adversarial-band";
        case Constraint::power_negative: return "power-negative";
        case Constraint::power_budget: return "power-budget";
    }
    return "?";
}

struct Violation {
    Constraint kind;
    std::vector<int> index;  // named in `where`

    std::string where() const {
        static const char* names[] = {"z", "l", "k", "f"};
        std::string s = "(";
        for (std::size_t i = 0; i < index.size(); ++i) {
            if (i) s += ",";
            s += (i < 4 ? std::string(names[i]) : "i" + std::to_string(i)) + "=" + std::to_string(index[i]);
        }
        return s + ")";
    }
    std::string message() const { return std::string(to_string(kind)) + " at " + where(); }
    bool operator==(const Violation&) const = default;
};

struct FeasibilityReport {
    std::vector<Violation> violations;

    bool feasible() const { return violations.empty(); }
    bool has(Constraint c) const {
        return std::any_of(violations.begin(), violations.end(), [c](const Violation& v) { return v.kind == c; });
    }
    std::string summary() const {
        std::string s;
        for (const auto& v : violations) s += v.message() + "\n";
        return s;
    }
};

namespace detail {

inline void check_plan_shapes(const ResourcePlan& p) {
    const auto& d = p.dims;
    d.check();
    const auto nz = static_cast<std::size_t>(d.n_nodes());
    if (p.s.rows != d.n_sats || p.s.cols != d.freq_slots) throw ShapeError("band plan must be N x q");
    if (p.x.size() != nz || p.a.size() != nz || p.pd.size() != nz || p.pa.size() != nz || p.pmax.size() != nz)
        throw ShapeError("plan needs one X, A, p_d, p_a and budget per node");
    for (int z = 0; z < d.n_nodes(); ++z) {
        const auto zi = static_cast<std::size_t>(z);
        for (const auto* t : {&p.x[zi], &p.a[zi]})
            if (t->n0 != d.time_slots || t->n1 != d.ues(z) || t->n2 != d.freq_slots)
                throw ShapeError("pattern of node " + std::to_string(z) + " must be L x K_z x q");
        for (const auto* t : {&p.pd[zi], &p.pa[zi]})
            if (t->rows != d.time_slots || t->cols != d.ues(z))
                throw ShapeError("power table of node " + std::to_string(z) + " must be L x K_z");
    }
}

}  // namespace detail

/// Checks every hard constraint of a plan. Probabilistic security and reliability
/// targets are the metrics module's business.
inline FeasibilityReport validate(const ResourcePlan& p) {
    detail::check_plan_shapes(p);
    const auto& d = p.dims;
    const int L = d.time_slots, q = d.freq_slots;
    FeasibilityReport rep;
    auto add = [&rep](Constraint c, std::vector<int> idx) { rep.violations.push_back({c, std::move(idx)}); };

    for (auto b : p.s.v)
        if (b > 1) { add(Constraint::binary, {-1}); break; }
    for (int z = 0; z < d.n_nodes(); ++z) {
        const auto zi = static_cast<std::size_t>(z);
        if (std::any_of(p.x[zi].v.begin(), p.x[zi].v.end(), [](auto b) { return b > 1; }) ||
            std::any_of(p.a[zi].v.begin(), p.a[zi].v.end(), [](auto b) { return b > 1; }))
            add(Constraint::binary, {z});
    }

    // Band plan.
    for (int f = 0; f < q; ++f) {
        int owners = 0;
        for (int n = 0; n < d.n_sats; ++n) owners += p.s(n, f) != 0;
        if (owners > 1) add(Constraint::band_exclusive, {-1, -1, -1, f});
    }
    if (d.contiguous_bands) {
        for (int n = 0; n < d.n_sats; ++n) {
            int runs = 0, width = 0;
            for (int f = 0; f < q; ++f) {
                if (p.s(n, f)) {
                    ++width;
                    if (f == 0 || !p.s(n, f - 1)) ++runs;
                }
            }
            if (runs > 1) add(Constraint::band_contiguous, {n});
            if (width > d.max_band_width()) add(Constraint::band_width, {n});
        }
    }
    if (d.period_reuse && q < L) add(Constraint::period_too_long, {});

    for (int z = 0; z < d.n_nodes(); ++z) {
        const auto zi = static_cast<std::size_t>(z);
        const auto& X = p.x[zi];
        const auto& A = p.a[zi];
        const int K = d.ues(z);
        const bool sat = d.is_satellite(z);
        for (int l = 0; l < L; ++l) {
            for (int k = 0; k < K; ++k) {
                int nx = 0, na = 0;
                for (int f = 0; f < q; ++f) {
                    nx += X(l, k, f) != 0;
                    na += A(l, k, f) != 0;
                    if (X(l, k, f) && A(l, k, f)) add(Constraint::adversarial_overlap, {z, l, k, f});
                    if (sat && X(l, k, f) && !p.s(z, f)) add(Constraint::band_gating, {z, l, k, f});
                    if (sat && A(l, k, f) && !p.s(z, f)) add(Constraint::adversarial_band, {z, l, k, f});
                }
                if (nx != 1) add(Constraint::occupancy_one_hot, {z, l, k});
                if (na > 1) add(Constraint::adversarial_single, {z, l, k});
            }
            for (int f = 0; f < q; ++f) {
                int cx = 0, ca = 0;
                for (int k = 0; k < K; ++k) {
                    cx += X(l, k, f) != 0;
                    ca += A(l, k, f) != 0;
                }
                if (cx > 1) add(Constraint::occupancy_exclusive, {z, l, -1, f});
                if (ca > 1) add(Constraint::adversarial_exclusive, {z, l, -1, f});
                for (int k = 0; k < K; ++k) {
                    if (!A(l, k, f)) continue;
                    for (int k2 = 0; k2 < K; ++k2)
                        if (k2 != k && X(l, k2, f)) add(Constraint::adversarial_collision, {z, l, k, f});
                }
            }
            double total = 0.0;
            for (int k = 0; k < K; ++k) {
                const double a = p.pd[zi](l, k), b = p.pa[zi](l, k);
                if (!(a >= 0.0) || !(b >= 0.0)) add(Constraint::power_negative, {z, l, k});
                total += a + b;
            }
            if (total > p.pmax[zi] * (1.0 + 1e-12)) add(Constraint::power_budget, {z, l});
        }
        if (d.period_reuse) {
            for (int k = 0; k < K; ++k)
                for (int f = 0; f < q; ++f) {
                    int uses = 0;
                    for (int l = 0; l < L; ++l) uses += X(l, k, f) != 0;
                    if (uses > 1) add(Constraint::period_reuse, {z, -1, k, f});
                }
        }
    }
    return rep;
}

enum class TxKind { data, adversarial };

struct Transmission {
    int node;
    int ue;
    TxKind kind;
    bool operator==(const Transmission&) const = default;
};

struct Conflict {
    int time;
    int slot;
    std::vector<Transmission> transmitters;
};

/// All transmissions occupying (l, f), data and decoys, in node/UE order.
inline std::vector<Transmission> transmissions_at(const ResourcePlan& p, int l, int f) {
    std::vector<Transmission> out;
    for (int z = 0; z < p.dims.n_nodes(); ++z) {
        const auto zi = static_cast<std::size_t>(z);
        for (int k = 0; k < p.dims.ues(z); ++k) {
            if (p.x[zi](l, k, f)) out.push_back({z, k, TxKind::data});
            if (p.a[zi](l, k, f)) out.push_back({z, k, TxKind::adversarial});
        }
    }
    return out;
}

/// Time-frequency cells used by transmitters of two or more distinct nodes.
inline std::vector<Conflict> cochannel_conflicts(const ResourcePlan& p) {
    detail::check_plan_shapes(p);
    std::vector<Conflict> out;
    for (int l = 0; l < p.dims.time_slots; ++l)
        for (int f = 0; f < p.dims.freq_slots; ++f) {
            auto tx = transmissions_at(p, l, f);
            bool multi = false;
            for (std::size_t i = 1; i < tx.size(); ++i) multi |= tx[i].node != tx[0].node;
            if (multi) out.push_back({l, f, std::move(tx)});
        }
    return out;
}

/// Candidate band plans: each satellite gets one contiguous run of the given width,
/// runs pairwise disjoint. Returns (begin per satellite) tuples.
inline std::vector<std::vector<int>> band_catalog(const GridDims& d, int width) {
    std::vector<std::vector<int>> out;
    if (d.n_sats == 0) return {{}};
    if (width < 1 || width > d.freq_slots) return out;
    std::vector<int> cur;
    std::vector<std::uint8_t> used(static_cast<std::size_t>(d.freq_slots), 0);
    std::function<void()> rec = [&] {
        if (static_cast<int>(cur.size()) == d.n_sats) {
            out.push_back(cur);
            return;
        }
        for (int b = 0; b + width <= d.freq_slots; ++b) {
            bool free = true;
            for (int f = b; f < b + width; ++f) free &= !used[static_cast<std::size_t>(f)];
            if (!free) continue;
            for (int f = b; f < b + width; ++f) used[static_cast<std::size_t>(f)] = 1;
            cur.push_back(b);
            rec();
            cur.pop_back();
            for (int f = b; f < b + width; ++f) used[static_cast<std::size_t>(f)] = 0;
        }
    };
    rec();
    return out;
}

struct EnumerationOptions {
    bool adversarial = true;
    std::vector<double> data_power{1.0};
    std::vector<double> adversarial_power{1.0};
    double budget = std::numeric_limits<double>::infinity();
    double guard = 1e7;
};

namespace detail {

// Upper bound on the raw candidate count explored by the enumerator.
inline double enumeration_space(const GridDims& d, const EnumerationOptions& o) {
    const double q = d.freq_slots;
    double bands = 1.0;
    for (int n = 0; n < d.n_sats; ++n) bands *= d.contiguous_bands ? (q * (q + 1) / 2 + 1) : std::pow(2.0, q);
    double per_row = q * static_cast<double>(o.data_power.size());
    if (o.adversarial) per_row *= 1.0 + q * static_cast<double>(o.adversarial_power.size());
    double rows = 0.0;
    for (int z = 0; z < d.n_nodes(); ++z) rows += static_cast<double>(d.ues(z)) * d.time_slots;
    return bands * std::pow(per_row, rows);
}

}  // namespace detail

/// Visits every plan satisfying all hard constraints, using only the supplied
/// power levels. The visitor returns false to stop early. Returns the visit count.
inline std::size_t enumerate_feasible_plans(const GridDims& d, const EnumerationOptions& o,
                                            const std::function<bool(const ResourcePlan&)>& visit) {
    d.check();
    if (detail::enumeration_space(d, o) > o.guard)
        throw CapacityError("enumeration space exceeds the configured guard");
    const int L = d.time_slots, q = d.freq_slots, Z = d.n_nodes();
    ResourcePlan p(d, o.budget);
    std::size_t count = 0;
    bool stop = false;
    if (d.period_reuse && q < L) return 0;

    // Flattened (z, l, k) rows in node-major, time, UE order.
    struct Row { int z, l, k; };
    std::vector<Row> rows;
    for (int z = 0; z < Z; ++z)
        for (int l = 0; l < L; ++l)
            for (int k = 0; k < d.ues(z); ++k) rows.push_back({z, l, k});

    std::function<void(std::size_t, double)> place = [&](std::size_t r, double spent) {
        if (stop) return;
        if (r == rows.size()) {
            ++count;
            if (!visit(p)) stop = true;
            return;
        }
        const auto [z, l, k] = rows[r];
        const auto zi = static_cast<std::size_t>(z);
        auto& X = p.x[zi];
        auto& A = p.a[zi];
        const bool sat = d.is_satellite(z);
        const bool last_in_step = k + 1 == d.ues(z);
        auto busy = [&](int f) {
            for (int k2 = 0; k2 < k; ++k2)
                if (X(l, k2, f) || A(l, k2, f)) return true;
            return false;
        };
        for (int f = 0; f < q; ++f) {
            if (sat && !p.s(z, f)) continue;
            if (busy(f)) continue;
            if (d.period_reuse) {
                bool reused = false;
                for (int l2 = 0; l2 < l; ++l2) reused |= X(l2, k, f) != 0;
                if (reused) continue;
            }
            X(l, k, f) = 1;
            // -1 means no decoy for this row.
            for (int g = -1; g < (o.adversarial ? q : 0); ++g) {
                if (g >= 0) {
                    if (g == f || busy(g) || (sat && !p.s(z, g))) continue;
                    A(l, k, g) = 1;
                }
                const std::size_t n_pa = g >= 0 ? o.adversarial_power.size() : 1;
                for (double pdv : o.data_power) {
                    for (std::size_t ia = 0; ia < n_pa; ++ia) {
                        const double pav = g >= 0 ? o.adversarial_power[ia] : 0.0;
                        const double s = spent + pdv + pav;
                        if (s > o.budget * (1.0 + 1e-12)) continue;
                        p.pd[zi](l, k) = pdv;
                        p.pa[zi](l, k) = pav;
                        place(r + 1, last_in_step ? 0.0 : s);
                        if (stop) break;
                    }
                    if (stop) break;
                }
                p.pd[zi](l, k) = 0.0;
                p.pa[zi](l, k) = 0.0;
                if (g >= 0) A(l, k, g) = 0;
                if (stop) break;
            }
            X(l, k, f) = 0;
            if (stop) return;
        }
    };

    // Band plans: every disjoint assignment of one run (or nothing) per satellite.
    std::function<void(int)> bands = [&](int n) {
        if (stop) return;
        if (n == d.n_sats) {
            place(0, 0.0);
            return;
        }
        if (d.contiguous_bands) {
            for (int b = -1; b < q; ++b) {
                for (int w = (b < 0 ? 0 : 1); b < 0 ? w == 0 : (w <= d.max_band_width() && b + w <= q); ++w) {
                    bool ok = true;
                    for (int f = std::max(b, 0); f < b + w; ++f)
                        for (int m = 0; m < n; ++m) ok &= !p.s(m, f);
                    if (!ok) continue;
                    if (b < 0) p.set_band(n, 0, 0); else p.set_band(n, b, w);
                    bands(n + 1);
                    p.set_band(n, 0, 0);
                    if (stop) return;
                    if (b < 0) break;
                }
            }
        } else {
            for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << q); ++mask) {
                bool ok = true;
                for (int f = 0; f < q; ++f)
                    if (mask >> f & 1)
                        for (int m = 0; m < n; ++m) ok &= !p.s(m, f);
                if (!ok) continue;
                for (int f = 0; f < q; ++f) p.s(n, f) = (mask >> f) & 1;
                bands(n + 1);
                if (stop) return;
            }
            for (int f = 0; f < q; ++f) p.s(n, f) = 0;
        }
    };
    bands(0);
    return count;
}

inline std::size_t count_feasible_plans(const GridDims& d, const EnumerationOptions& o) {
    return enumerate_feasible_plans(d, o, [](const ResourcePlan&) { return true; });
}

namespace detail {

// Dinic max-flow on a small dense-ish graph.
class MaxFlow {
public:
    explicit MaxFlow(int n) : adj_(static_cast<std::size_t>(n)), level_(static_cast<std::size_t>(n)), it_(static_cast<std::size_t>(n)) {}

    void add_edge(int u, int v, int cap) {
        adj_[static_cast<std::size_t>(u)].push_back({v, cap, static_cast<int>(adj_[static_cast<std::size_t>(v)].size())});
        adj_[static_cast<std::size_t>(v)].push_back({u, 0, static_cast<int>(adj_[static_cast<std::size_t>(u)].size()) - 1});
    }

    int run(int s, int t) {
        int flow = 0;
        while (bfs(s, t)) {
            std::fill(it_.begin(), it_.end(), 0);
            while (int f = dfs(s, t, std::numeric_limits<int>::max())) flow += f;
        }
        return flow;
    }

private:
    struct Edge { int to, cap, rev; };
    std::vector<std::vector<Edge>> adj_;
    std::vector<int> level_, it_;

    bool bfs(int s, int t) {
        std::fill(level_.begin(), level_.end(), -1);
        std::vector<int> queue{s};
        level_[static_cast<std::size_t>(s)] = 0;
        for (std::size_t i = 0; i < queue.size(); ++i) {
            const int u = queue[i];
            for (const auto& e : adj_[static_cast<std::size_t>(u)])
                if (e.cap > 0 && level_[static_cast<std::size_t>(e.to)] < 0) {
                    level_[static_cast<std::size_t>(e.to)] = level_[static_cast<std::size_t>(u)] + 1;
                    queue.push_back(e.to);
                }
        }
        return level_[static_cast<std::size_t>(t)] >= 0;
    }

    int dfs(int u, int t, int f) {
        if (u == t) return f;
        const auto ui = static_cast<std::size_t>(u);
        for (int& i = it_[ui]; i < static_cast<int>(adj_[ui].size()); ++i) {
            auto& e = adj_[ui][static_cast<std::size_t>(i)];
            if (e.cap <= 0 || level_[static_cast<std::size_t>(e.to)] != level_[ui] + 1) continue;
            if (int d = dfs(e.to, t, std::min(f, e.cap))) {
                e.cap -= d;
                adj_[static_cast<std::size_t>(e.to)][static_cast<std::size_t>(e.rev)].cap += d;
                return d;
            }
        }
        return 0;
    }
};

}  // namespace detail

/// Scheduling state of one node inside one period, used to mask slot choices so
/// that a sequential scheduler can never paint itself into a corner.
struct NodeSlotState {
    int ues = 0;
    int slots = 0;
    int time_slots = 0;
    bool period_reuse = true;
    std::vector<std::uint8_t> allowed;  // per slot
    Grid2<std::uint8_t> used;           // K x q, slots already used this period
    std::vector<std::uint8_t> taken;    // per slot, taken at the current time
    int time = 0;                       // current time index
    int next_ue = 0;                    // next UE to place at the current time

    NodeSlotState() = default;
    NodeSlotState(int k, int q, int L, std::vector<std::uint8_t> allowed_mask, bool reuse = true)
        : ues(k), slots(q), time_slots(L), period_reuse(reuse), allowed(std::move(allowed_mask)),
          used(k, q, 0), taken(static_cast<std::size_t>(q), 0) {
        if (static_cast<int>(allowed.size()) != q) throw ShapeError("allowed mask must have q entries");
    }

    bool done() const { return time >= time_slots; }

    /// True when the remaining rows of the period can still be filled.
    bool completable() const { return completable_with(-1); }

    /// Slots the next UE may take without making the period unfinishable.
    std::vector<std::uint8_t> feasible_mask() const {
        std::vector<std::uint8_t> m(static_cast<std::size_t>(slots), 0);
        if (done() || ues == 0) return m;
        for (int f = 0; f < slots; ++f) m[static_cast<std::size_t>(f)] = basic_ok(next_ue, f) && completable_with(f);
        return m;
    }

    /// Records the next UE's slot and advances; rolls over to the next time step.
    void place(int f) {
        if (done() || f < 0 || f >= slots || !basic_ok(next_ue, f)) throw ActionError("slot not available");
        used(next_ue, f) = 1;
        taken[static_cast<std::size_t>(f)] = 1;
        if (++next_ue == ues) {
            next_ue = 0;
            ++time;
            std::fill(taken.begin(), taken.end(), 0);
        }
    }

private:
    bool basic_ok(int k, int f) const {
        const auto fi = static_cast<std::size_t>(f);
        return allowed[fi] && !taken[fi] && !(period_reuse && used(k, f));
    }

    // Exact completion test. Once every UE has its slot at the current time, the
    // rest is a flow: UE k needs one unused slot per remaining time step and each
    // slot serves at most one UE per step; a saturating flow splits into per-step
    // matchings by bipartite edge colouring. The current-time assignment of the
    // UEs still unplaced is searched depth-first, pruned by the same flow with the
    // current step relaxed to one UE per free slot.
    bool completable_with(int f_now) const {
        if (done()) return true;
        const int K = ues, q = slots;
        const int T = time_slots - time - 1;
        const int first = f_now >= 0 ? next_ue + 1 : next_ue;
        if (!period_reuse) {
            // Rows are independent; each row needs K free allowed slots.
            int free_now = 0, allowed_n = 0;
            for (int f = 0; f < q; ++f) {
                allowed_n += allowed[static_cast<std::size_t>(f)] != 0;
                free_now += allowed[static_cast<std::size_t>(f)] && !taken[static_cast<std::size_t>(f)] && f != f_now;
            }
            return free_now >= K - first && (T == 0 || allowed_n >= K);
        }
        std::vector<int> now(static_cast<std::size_t>(K), -1);  // current-time slot of UEs >= first
        std::vector<std::uint8_t> busy = taken;
        if (f_now >= 0) busy[static_cast<std::size_t>(f_now)] = 1;
        auto excluded = [&](int k, int f) {
            return !allowed[static_cast<std::size_t>(f)] || used(k, f) || (k == next_ue && f == f_now);
        };
        // Flow bound with UEs in [first, upto) fixed at now[k] and later ones relaxed.
        auto bound = [&](int upto) {
            const int src = 0, sink = 1, ue0 = 2, pair0 = ue0 + K, now0 = pair0 + K * q, fut0 = now0 + q;
            detail::MaxFlow g(fut0 + q);
            int demand = 0;
            for (int k = 0; k < K; ++k) {
                const bool open = k >= upto;  // still needs a current-time slot
                const int need = T + (open ? 1 : 0);
                if (need == 0) continue;
                demand += need;
                g.add_edge(src, ue0 + k, need);
                for (int f = 0; f < q; ++f) {
                    if (excluded(k, f) || f == now[static_cast<std::size_t>(k)]) continue;
                    const int node = pair0 + k * q + f;
                    g.add_edge(ue0 + k, node, 1);
                    if (open && !busy[static_cast<std::size_t>(f)]) g.add_edge(node, now0 + f, 1);
                    if (T > 0) g.add_edge(node, fut0 + f, 1);
                }
            }
            for (int f = 0; f < q; ++f) {
                g.add_edge(now0 + f, sink, 1);
                if (T > 0) g.add_edge(fut0 + f, sink, T);
            }
            return g.run(src, sink) == demand;
        };
        std::function<bool(int)> search = [&](int k) {
            if (!bound(k)) return false;
            if (k == K) return true;
            for (int f = 0; f < q; ++f) {
                if (excluded(k, f) || busy[static_cast<std::size_t>(f)]) continue;
                now[static_cast<std::size_t>(k)] = f;
                busy[static_cast<std::size_t>(f)] = 1;
                const bool ok = search(k + 1);
                busy[static_cast<std::size_t>(f)] = 0;
                now[static_cast<std::size_t>(k)] = -1;
                if (ok) return true;
            }
            return false;
        };
        return search(first);
    }
};

// Plain-text plan format:
//   stnplan v1
//   dims <N> <M> <L> <q>
//   ues <K_0> ... <K_{Z-1}>
//   flags <contiguous 0|1> <period_reuse 0|1>
//   budget <p_0> ... (watts)
//   S            then N rows of q 0/1 entries
//   X <z>        then L*K_z rows of q entries, row (l, k) at position l*K_z + k
//   A <z>        same layout
//   P <z>        then L rows of 2*K_z decimals: p_d of every UE, then p_a of every UE
// Blocks for node z appear in the order X, A, P, nodes ascending.

inline void write_plan(std::ostream& os, const ResourcePlan& p) {
    detail::check_plan_shapes(p);
    const auto& d = p.dims;
    auto bits = [&os](auto&& get, int n) {
        for (int f = 0; f < n; ++f) os << (f ? " " : "") << static_cast<int>(get(f));
        os << '\n';
    };
    os << "stnplan v1\n";
    os << "dims " << d.n_sats << ' ' << d.n_bs << ' ' << d.time_slots << ' ' << d.freq_slots << '\n';
    os << "ues";
    for (int k : d.ue_counts) os << ' ' << k;
    os << "\nflags " << d.contiguous_bands << ' ' << d.period_reuse << "\nbudget";
    os << std::setprecision(17);
    for (double b : p.pmax) os << ' ' << b;
    os << "\nS\n";
    for (int n = 0; n < d.n_sats; ++n) bits([&](int f) { return p.s(n, f); }, d.freq_slots);
    for (int z = 0; z < d.n_nodes(); ++z) {
        const auto zi = static_cast<std::size_t>(z);
        for (const auto* t : {&p.x[zi], &p.a[zi]}) {
            os << (t == &p.x[zi] ? "X " : "A ") << z << '\n';
            for (int l = 0; l < d.time_slots; ++l)
                for (int k = 0; k < d.ues(z); ++k) bits([&](int f) { return (*t)(l, k, f); }, d.freq_slots);
        }
        os << "P " << z << '\n';
        for (int l = 0; l < d.time_slots; ++l) {
            for (int k = 0; k < d.ues(z); ++k) os << (k ? " " : "") << p.pd[zi](l, k);
            for (int k = 0; k < d.ues(z); ++k) os << ' ' << p.pa[zi](l, k);
            os << '\n';
        }
    }
}

inline std::string plan_to_string(const ResourcePlan& p) {
    std::ostringstream os;
    write_plan(os, p);
    return os.str();
}

inline ResourcePlan read_plan(std::istream& is) {
    auto fail = [](const std::string& what) -> ResourcePlan { throw FormatError("plan: " + what); };
    std::string tok;
    auto expect = [&](const std::string& want) {
        if (!(is >> tok) || tok != want) fail("expected '" + want + "'");
    };
    auto num = [&]<class T>(T& v) {
        if (!(is >> v)) fail("expected a number");
    };
    expect("stnplan");
    expect("v1");
    GridDims d;
    expect("dims");
    num(d.n_sats); num(d.n_bs); num(d.time_slots); num(d.freq_slots);
    if (d.n_sats < 0 || d.n_bs < 0 || d.n_sats + d.n_bs > 4096 || d.time_slots < 1 || d.freq_slots < 1 ||
        d.time_slots > 1 << 16 || d.freq_slots > 1 << 16)
        return fail("bad dimensions");
    expect("ues");
    d.ue_counts.assign(static_cast<std::size_t>(d.n_nodes()), 0);
    for (auto& k : d.ue_counts) {
        num(k);
        if (k < 0 || k > 1 << 16) return fail("bad UE count");
    }
    int contiguous = 1, reuse = 1;
    expect("flags");
    num(contiguous); num(reuse);
    d.contiguous_bands = contiguous != 0;
    d.period_reuse = reuse != 0;
    ResourcePlan p(d);
    expect("budget");
    for (auto& b : p.pmax) num(b);
    auto bit = [&]() -> std::uint8_t {
        int v = 0;
        num(v);
        if (v != 0 && v != 1) fail("matrix entries must be 0 or 1");
        return static_cast<std::uint8_t>(v);
    };
    expect("S");
    for (int n = 0; n < d.n_sats; ++n)
        for (int f = 0; f < d.freq_slots; ++f) p.s(n, f) = bit();
    for (int z = 0; z < d.n_nodes(); ++z) {
        const auto zi = static_cast<std::size_t>(z);
        for (auto* t : {&p.x[zi], &p.a[zi]}) {
            expect(t == &p.x[zi] ? "X" : "A");
            int zz = -1;
            num(zz);
            if (zz != z) fail("node blocks out of order");
            for (int l = 0; l < d.time_slots; ++l)
                for (int k = 0; k < d.ues(z); ++k)
                    for (int f = 0; f < d.freq_slots; ++f) (*t)(l, k, f) = bit();
        }
        expect("P");
        int zz = -1;
        num(zz);
        if (zz != z) fail("node blocks out of order");
        for (int l = 0; l < d.time_slots; ++l) {
            for (int k = 0; k < d.ues(z); ++k) num(p.pd[zi](l, k));
            for (int k = 0; k < d.ues(z); ++k) num(p.pa[zi](l, k));
        }
    }
    return p;
}

inline ResourcePlan plan_from_string(const std::string& s) {
    std::istringstream is(s);
    return read_plan(is);
}

}  // namespace stnsec

#endif  // STNSEC_GRID_HPP
