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

#ifndef STNSEC_ENVIRONMENT_HPP
#define STNSEC_ENVIRONMENT_HPP

#include <algorithm>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "stnsec/error.hpp"
#include "stnsec/grid.hpp"
#include "stnsec/marl.hpp"
#include "stnsec/metrics.hpp"
#include "stnsec/rng.hpp"

namespace stnsec {

struct RewardWeights {
    double c3 = 0.1;  // occupied-slot penalty
    double c4 = 0.1;  // intra-node collision penalty
    double c5 = 0.1;  // cross-node (tier) penalty
    double d2 = 0.5;  // adversarial power cost in the power stage
    bool binary_penalties = true;
};

struct RewardParts {
    double pe = 0.0;
    double pu = 0.0;
    bool c1 = false;
    bool c2 = false;
    double occ = 0.0;
    double coll = 0.0;
    double tier = 0.0;
    double reward = 0.0;
};

/// r = c1 Pe + c2 Pu - c3 Rocc - c4 Rcoll - c5 Rtier, with c1, c2 the target gates.
inline RewardParts compose_schedule_reward(double pe, double pu, double occ, double coll, double tier,
                                           const RewardWeights& w, double eps_e, double eps_u) {
    RewardParts r{pe, pu, pe >= 1.0 - eps_e, pu >= 1.0 - eps_u, occ, coll, tier, 0.0};
    r.reward = (r.c1 ? pe : 0.0) + (r.c2 ? pu : 0.0) - w.c3 * occ - w.c4 * coll - w.c5 * tier;
    return r;
}

/// r' = d1 Pe - d2 * mean over nodes of K_z p_a / p_max, d1 the security gate.
inline double compose_power_reward(double pe, double eps_e, double d2, const std::vector<double>& adv_share) {
    double cost = 0.0;
    for (double s : adv_share) cost += s;
    if (!adv_share.empty()) cost /= static_cast<double>(adv_share.size());
    return (pe >= 1.0 - eps_e ? pe : 0.0) - d2 * cost;
}

struct JammerConfig {
    enum class Kind { none, sweep, random };
    Kind kind = Kind::none;
    double duty = 0.0;  // random jammer: probability of jamming one slot in a step
};

/// Jammer slots for time index t (one slot at most).
inline std::vector<std::uint8_t> jammer_slots(const JammerConfig& cfg, int q, int t, Rng& rng) {
    std::vector<std::uint8_t> j(static_cast<std::size_t>(q), 0);
    switch (cfg.kind) {
        case JammerConfig::Kind::none: break;
        case JammerConfig::Kind::sweep: j[static_cast<std::size_t>(t % q)] = 1; break;
        case JammerConfig::Kind::random:
            if (rng.uniform() < cfg.duty) j[rng.below(static_cast<std::uint64_t>(q))] = 1;
            break;
    }
    return j;
}

struct ScheduleConfig {
    GridDims dims;
    LinkSet links;
    std::vector<double> pmax;     // per node, watts
    double eps_e = 0.2;
    double eps_u = 0.1;
    RewardWeights weights;
    JammerConfig jammer;
    std::vector<double> footprint;  // N x N satellite footprint overlap, row-major; empty = all overlapping
    bool cn_every_slot = false;
    double provisional_split = 0.5;  // share of the per-UE budget treated as data power before Stage III
    int band_width = 0;              // 0 = q / N

    void check() const {
        dims.check();
        if (static_cast<int>(pmax.size()) != dims.n_nodes()) throw ShapeError("one power budget per node");
        for (double p : pmax)
            if (!(p > 0.0)) throw DomainError("power budgets must be positive");
        if (!(provisional_split > 0.0 && provisional_split <= 1.0)) throw DomainError("provisional split in (0,1]");
        if (!footprint.empty() && static_cast<int>(footprint.size()) != dims.n_sats * dims.n_sats)
            throw ShapeError("footprint must be N x N");
    }
};

struct ScheduleState {
    int t = 0;
    int band = -1;                         // index into the band catalog, -1 before the first choice
    std::vector<NodeSlotState> nodes;
    std::vector<std::uint8_t> occupancy;   // s_f: slots busy in the previous step plus sensed jamming
    std::vector<std::uint8_t> jammed;      // jammer slots of the current step
    std::vector<std::uint8_t> prev_band;   // vec(S) of the previous step
};

/// Stage-I environment: the central node picks satellite bands once per period,
/// then every node places each of its UEs on a slot, one decision per UE.
class ScheduleEnv {
public:
    using State = ScheduleState;

    explicit ScheduleEnv(ScheduleConfig cfg) : cfg_(std::move(cfg)) {
        cfg_.check();
        const auto& d = cfg_.dims;
        width_ = d.n_sats > 0 ? (cfg_.band_width > 0 ? cfg_.band_width : d.max_band_width()) : 0;
        if (d.n_sats > 0) {
            catalog_ = band_catalog(d, width_);
            if (catalog_.empty()) throw ShapeError("no band plan fits the grid");
        }
        if (cfg_.footprint.empty()) {
            cfg_.footprint.assign(static_cast<std::size_t>(d.n_sats * d.n_sats), 1.0);
        }
        for (int n = 0; n < d.n_sats; ++n) cfg_.footprint[static_cast<std::size_t>(n * d.n_sats + n)] = 0.0;
        for (int z = 0; z < d.n_nodes(); ++z)
            for (int k = 0; k < d.ues(z); ++k) slots_.push_back({z, k});
        // Provisional per-UE closed forms; they do not depend on the slot choice.
        for (int z = 0; z < d.n_nodes(); ++z) {
            const bool sat = d.is_satellite(z);
            const double per_ue = cfg_.pmax[static_cast<std::size_t>(z)] / std::max(1, d.ues(z));
            const double pd = cfg_.provisional_split * per_ue;
            const double pa = (1.0 - cfg_.provisional_split) * per_ue;
            sp_.push_back(secrecy_probability(cfg_.links.secrecy(sat, pd, pa, d.freq_slots)));
            rtp_.push_back(reliability_probability(cfg_.links.reliability(sat, pd)));
        }
    }

    const ScheduleConfig& config() const { return cfg_; }
    const GridDims& dims() const { return cfg_.dims; }
    const std::vector<std::vector<int>>& catalog() const { return catalog_; }
    int band_width() const { return width_; }
    bool has_cn() const { return cfg_.dims.n_sats > 0; }

    int agent_types() const { return (has_cn() ? 1 : 0) + cfg_.dims.n_nodes(); }
    int decision_count() const { return (has_cn() ? 1 : 0) + static_cast<int>(slots_.size()); }

    int obs_width(int type) const {
        const auto& d = cfg_.dims;
        if (has_cn() && type == 0) return d.n_sats * d.freq_slots + d.freq_slots * d.n_sats * d.n_sats;
        const int z = type - (has_cn() ? 1 : 0);
        const int K = d.ues(z);
        if (d.is_satellite(z)) return 1 + width_ + K + K + 2 * width_ + d.time_slots;
        return d.freq_slots + K + K + 2 * d.freq_slots + d.time_slots;
    }
    int action_count(int type) const {
        if (has_cn() && type == 0) return static_cast<int>(catalog_.size());
        const int z = type - (has_cn() ? 1 : 0);
        return cfg_.dims.is_satellite(z) ? width_ : cfg_.dims.freq_slots;
    }
    int state_width() const {
        const auto& d = cfg_.dims;
        return d.n_sats * d.freq_slots + d.freq_slots + d.time_slots + d.total_ues();
    }

    /// Slot-level coupling matrix C^(j): footprint overlap of two satellites when slot
    /// j lies in both of their candidate bands.
    std::vector<double> coupling(int j) const {
        const int N = cfg_.dims.n_sats;
        std::vector<double> c(static_cast<std::size_t>(N * N), 0.0);
        for (int n = 0; n < N; ++n)
            for (int m = 0; m < N; ++m) {
                if (n == m) continue;
                bool both = in_candidate(n, j) && in_candidate(m, j);
                c[static_cast<std::size_t>(n * N + m)] = both ? cfg_.footprint[static_cast<std::size_t>(n * N + m)] : 0.0;
            }
        return c;
    }

    State reset(Rng& rng) const {
        const auto& d = cfg_.dims;
        State s;
        s.t = 0;
        s.band = -1;
        for (int z = 0; z < d.n_nodes(); ++z) {
            std::vector<std::uint8_t> allowed(static_cast<std::size_t>(d.freq_slots), d.is_satellite(z) ? 0 : 1);
            s.nodes.emplace_back(d.ues(z), d.freq_slots, d.time_slots, allowed, d.period_reuse);
        }
        s.prev_band.assign(static_cast<std::size_t>(d.n_sats * d.freq_slots), 0);
        s.jammed = jammer_slots(cfg_.jammer, d.freq_slots, 0, rng);
        s.occupancy = s.jammed;
        return s;
    }

    /// Adds the jammer's slots for the state's time index to the sensed occupancy.
    State inject_jammer(State s, Rng& rng) const {
        s.jammed = jammer_slots(cfg_.jammer, cfg_.dims.freq_slots, s.t, rng);
        for (std::size_t f = 0; f < s.occupancy.size(); ++f) s.occupancy[f] |= s.jammed[f];
        return s;
    }

    Decision decision(const State& s, std::span<const int> prior, int i) const {
        const auto& d = cfg_.dims;
        if (i < 0 || i >= decision_count()) throw ShapeError("unknown agent index " + std::to_string(i));
        if (static_cast<int>(prior.size()) < i) throw ShapeError("decision needs all earlier actions of the step");
        Decision out;
        if (has_cn() && i == 0) {
            out.type = 0;
            out.obs.assign(s.prev_band.begin(), s.prev_band.end());
            for (int j = 0; j < d.freq_slots; ++j) {
                const auto c = coupling(j);
                out.obs.insert(out.obs.end(), c.begin(), c.end());
            }
            out.mask.assign(catalog_.size(), 0);
            if (cn_acts(s)) {
                for (std::size_t e = 0; e < catalog_.size(); ++e) out.mask[e] = band_feasible(s, static_cast<int>(e));
            } else {
                out.mask[static_cast<std::size_t>(s.band)] = 1;
            }
            return out;
        }
        const auto [z, k] = slots_[static_cast<std::size_t>(i - (has_cn() ? 1 : 0))];
        out.type = (has_cn() ? 1 : 0) + z;
        const int band = has_cn() ? prior[0] : -1;
        NodeSlotState ns = node_state(s, z, band);
        const int first = first_decision(z);
        for (int j = first; j < i; ++j) ns.place(to_global(z, band, prior[static_cast<std::size_t>(j)]));
        const auto fmask = ns.feasible_mask();
        const int K = d.ues(z);
        auto push_range = [&](const std::vector<std::uint8_t>& v, int begin, int n) {
            for (int f = begin; f < begin + n; ++f) out.obs.push_back(v[static_cast<std::size_t>(f)]);
        };
        std::vector<std::uint8_t> used_k(static_cast<std::size_t>(d.freq_slots));
        for (int f = 0; f < d.freq_slots; ++f) used_k[static_cast<std::size_t>(f)] = ns.used(k, f);
        if (d.is_satellite(z)) {
            const int begin = catalog_[static_cast<std::size_t>(band)][static_cast<std::size_t>(z)];
            out.obs.push_back(static_cast<double>(begin) / d.freq_slots);
            push_range(s.occupancy, begin, width_);
            for (int j = 0; j < K; ++j) out.obs.push_back(1.0);
            for (int j = 0; j < K; ++j) out.obs.push_back(j == k);
            push_range(ns.taken, begin, width_);
            push_range(used_k, begin, width_);
            out.mask.assign(fmask.begin() + begin, fmask.begin() + begin + width_);
        } else {
            push_range(s.occupancy, 0, d.freq_slots);
            for (int j = 0; j < K; ++j) out.obs.push_back(1.0);
            for (int j = 0; j < K; ++j) out.obs.push_back(j == k);
            push_range(ns.taken, 0, d.freq_slots);
            push_range(used_k, 0, d.freq_slots);
            out.mask = fmask;
        }
        for (int l = 0; l < d.time_slots; ++l) out.obs.push_back(l == s.t);
        return out;
    }

    std::vector<double> global_features(const State& s) const {
        const auto& d = cfg_.dims;
        std::vector<double> g;
        g.reserve(static_cast<std::size_t>(state_width()));
        std::vector<double> band(static_cast<std::size_t>(d.n_sats * d.freq_slots), 0.0);
        if (s.band >= 0)
            for (int n = 0; n < d.n_sats; ++n) {
                const int b = catalog_[static_cast<std::size_t>(s.band)][static_cast<std::size_t>(n)];
                for (int f = b; f < b + width_; ++f) band[static_cast<std::size_t>(n * d.freq_slots + f)] = 1.0;
            }
        g.insert(g.end(), band.begin(), band.end());
        for (auto o : s.occupancy) g.push_back(o);
        for (int l = 0; l < d.time_slots; ++l) g.push_back(l == s.t);
        for (int u = 0; u < d.total_ues(); ++u) g.push_back(1.0);  // attachment: every UE present
        return g;
    }

    struct Outcome {
        StepResult<State> step;
        RewardParts parts;
        std::vector<int> band_begin;             // per satellite
        std::vector<std::vector<int>> slots;     // per node, per UE: global slot
    };

    /// Executes one joint action. Every action must be allowed by its mask.
    Outcome execute(const State& s, const std::vector<int>& joint, Rng& rng) const {
        const auto& d = cfg_.dims;
        if (static_cast<int>(joint.size()) != decision_count()) throw ActionError("joint action has wrong length");
        if (s.t >= d.time_slots) throw ActionError("episode already finished");
        for (int i = 0; i < decision_count(); ++i) {
            const auto dec = decision(s, std::span<const int>(joint.data(), static_cast<std::size_t>(i)), i);
            const int a = joint[static_cast<std::size_t>(i)];
            if (a < 0 || a >= static_cast<int>(dec.mask.size()) || !dec.mask[static_cast<std::size_t>(a)])
                throw ActionError("action " + std::to_string(a) + " of decision " + std::to_string(i) + " is masked");
        }
        Outcome out;
        State n = s;
        const int band = has_cn() ? joint[0] : -1;
        n.band = band;
        if (has_cn())
            for (int z = 0; z < d.n_sats; ++z) {
                const int b = catalog_[static_cast<std::size_t>(band)][static_cast<std::size_t>(z)];
                out.band_begin.push_back(b);
                n.nodes[static_cast<std::size_t>(z)] = node_state(s, z, band);
            }
        std::vector<int> users(static_cast<std::size_t>(d.freq_slots), 0);  // nodes per slot, bitmask
        double occ = 0.0, coll = 0.0, tier = 0.0;
        std::vector<std::vector<int>> per_slot(static_cast<std::size_t>(d.freq_slots));
        out.slots.resize(static_cast<std::size_t>(d.n_nodes()));
        for (std::size_t i = 0; i < slots_.size(); ++i) {
            const auto [z, k] = slots_[i];
            const int f = to_global(z, band, joint[i + (has_cn() ? 1 : 0)]);
            out.slots[static_cast<std::size_t>(z)].push_back(f);
            n.nodes[static_cast<std::size_t>(z)].place(f);
            occ += s.occupancy[static_cast<std::size_t>(f)];
            for (int other : per_slot[static_cast<std::size_t>(f)]) coll += other == z;
            per_slot[static_cast<std::size_t>(f)].push_back(z);
        }
        for (int f = 0; f < d.freq_slots; ++f) {
            auto nodes = per_slot[static_cast<std::size_t>(f)];
            std::sort(nodes.begin(), nodes.end());
            nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
            for (std::size_t a = 0; a < nodes.size(); ++a)
                for (std::size_t b = a + 1; b < nodes.size(); ++b) {
                    const int za = nodes[a], zb = nodes[b];
                    if (d.is_satellite(za) && d.is_satellite(zb)) tier += coupling(f)[static_cast<std::size_t>(za * d.n_sats + zb)];
                    else tier += 1.0;
                }
        }
        const double active = static_cast<double>(std::max<std::size_t>(1, slots_.size()));
        if (cfg_.weights.binary_penalties) {
            occ = occ > 0.0;
            coll = coll > 0.0;
            tier = tier > 0.0;
        } else {
            occ /= active;
            coll /= active;
            tier /= active;
        }
        double pe = 0.0, pu = 0.0;
        for (const auto& [z, k] : slots_) {
            pe += sp_[static_cast<std::size_t>(z)];
            pu += rtp_[static_cast<std::size_t>(z)];
        }
        pe /= active;
        pu /= active;
        out.parts = compose_schedule_reward(pe, pu, occ, coll, tier, cfg_.weights, cfg_.eps_e, cfg_.eps_u);

        // Next state: this step's transmissions become the sensed occupancy.
        n.prev_band.assign(static_cast<std::size_t>(d.n_sats * d.freq_slots), 0);
        for (std::size_t z = 0; z < out.band_begin.size(); ++z)
            for (int f = out.band_begin[z]; f < out.band_begin[z] + width_; ++f)
                n.prev_band[z * static_cast<std::size_t>(d.freq_slots) + static_cast<std::size_t>(f)] = 1;
        n.t = s.t + 1;
        n.occupancy.assign(static_cast<std::size_t>(d.freq_slots), 0);
        for (int f = 0; f < d.freq_slots; ++f) n.occupancy[static_cast<std::size_t>(f)] = !per_slot[static_cast<std::size_t>(f)].empty();
        n = inject_jammer(std::move(n), rng);
        out.step.next = std::move(n);
        out.step.reward = out.parts.reward;
        out.step.terminal = out.step.next.t >= d.time_slots;
        out.step.sp = pe;
        out.step.rtp = pu;
        return out;
    }

    StepResult<State> step(const State& s, const std::vector<int>& joint, Rng& rng) const {
        return execute(s, joint, rng).step;
    }

    /// Provisional data power of one UE of node z before power control.
    double provisional_data_power(int z) const {
        return cfg_.provisional_split * cfg_.pmax[static_cast<std::size_t>(z)] / std::max(1, cfg_.dims.ues(z));
    }

private:
    ScheduleConfig cfg_;
    int width_ = 0;
    std::vector<std::vector<int>> catalog_;
    std::vector<std::pair<int, int>> slots_;  // decision -> (node, UE)
    std::vector<double> sp_, rtp_;           // per node

    bool cn_acts(const State& s) const { return s.band < 0 || cfg_.cn_every_slot; }

    bool in_candidate(int n, int j) const {
        for (const auto& e : catalog_) {
            const int b = e[static_cast<std::size_t>(n)];
            if (j >= b && j < b + width_) return true;
        }
        return false;
    }

    int first_decision(int z) const {
        int i = has_cn() ? 1 : 0;
        for (int w = 0; w < z; ++w) i += cfg_.dims.ues(w);
        return i;
    }

    int to_global(int z, int band, int action) const {
        if (!cfg_.dims.is_satellite(z)) return action;
        return catalog_[static_cast<std::size_t>(band)][static_cast<std::size_t>(z)] + action;
    }

    // Node state at the start of the step with satellite bands taken from `band`.
    NodeSlotState node_state(const State& s, int z, int band) const {
        NodeSlotState ns = s.nodes[static_cast<std::size_t>(z)];
        if (cfg_.dims.is_satellite(z) && band >= 0) {
            std::fill(ns.allowed.begin(), ns.allowed.end(), 0);
            const int b = catalog_[static_cast<std::size_t>(band)][static_cast<std::size_t>(z)];
            for (int f = b; f < b + width_; ++f) ns.allowed[static_cast<std::size_t>(f)] = 1;
        }
        return ns;
    }

    bool band_feasible(const State& s, int e) const {
        for (int z = 0; z < cfg_.dims.n_sats; ++z)
            if (!node_state(s, z, e).completable()) return false;
        return true;
    }
};

/// Greedy or exploring rollout of one period, assembled into a plan. Data power is
/// the provisional split; no decoys yet.
template <class Policy>
ResourcePlan decode_schedule(const ScheduleEnv& env, Policy&& policy, Rng& rng, std::vector<RewardParts>* parts = nullptr) {
    const auto& d = env.dims();
    ResourcePlan plan(d);
    for (int z = 0; z < d.n_nodes(); ++z) plan.pmax[static_cast<std::size_t>(z)] = env.config().pmax[static_cast<std::size_t>(z)];
    auto s = env.reset(rng);
    for (int t = 0; t < d.time_slots; ++t) {
        const std::vector<int> joint = policy(s);
        auto out = env.execute(s, joint, rng);
        for (std::size_t n = 0; n < out.band_begin.size(); ++n) plan.set_band(static_cast<int>(n), out.band_begin[n], env.band_width());
        for (int z = 0; z < d.n_nodes(); ++z)
            for (int k = 0; k < d.ues(z); ++k) {
                const auto zi = static_cast<std::size_t>(z);
                plan.x[zi](t, k, out.slots[zi][static_cast<std::size_t>(k)]) = 1;
                plan.pd[zi](t, k) = env.provisional_data_power(z);
            }
        if (parts) parts->push_back(out.parts);
        s = std::move(out.step.next);
    }
    return plan;
}

struct PowerConfig {
    ResourcePlan plan;  // S, X, A fixed; powers are overwritten
    LinkSet links;
    double eps_e = 0.2;
    double eps_u = 0.1;
    double d2 = 0.5;
    int levels = 8;
    bool require_decoy_power = true;  // p_a = 0 is masked whenever the node has decoys
};

struct PowerState {
    int t = 0;
};

/// Stage-III environment: each node picks its (data, decoy) power fractions per time
/// step for the fixed schedule.
class PowerEnv {
public:
    using State = PowerState;

    explicit PowerEnv(PowerConfig cfg) : cfg_(std::move(cfg)) {
        const auto rep = validate(cfg_.plan);
        if (!rep.feasible()) throw PlanRejected(rep);
        if (cfg_.levels < 1) throw DomainError("need at least one power level");
        for (int i = 1; i <= cfg_.levels; ++i)
            for (int j = 0; i + j <= cfg_.levels; ++j) lattice_.push_back({i, j});
    }

    const PowerConfig& config() const { return cfg_; }
    const std::vector<std::pair<int, int>>& lattice() const { return lattice_; }

    int agent_types() const { return cfg_.plan.dims.n_nodes(); }
    int decision_count() const { return cfg_.plan.dims.n_nodes(); }
    int obs_width(int) const { return cfg_.plan.dims.time_slots + 3; }
    int action_count(int) const { return static_cast<int>(lattice_.size()); }
    int state_width() const { return cfg_.plan.dims.time_slots + cfg_.plan.dims.n_nodes(); }

    State reset(Rng&) const { return {}; }

    double decoy_share(int z, int t) const {
        const int K = cfg_.plan.dims.ues(z);
        if (K == 0) return 0.0;
        int n = 0;
        for (int k = 0; k < K; ++k) n += cfg_.plan.a[static_cast<std::size_t>(z)].slot_of(t, k) >= 0;
        return static_cast<double>(n) / K;
    }

    double data_power(int z, int level) const {
        const auto& d = cfg_.plan.dims;
        return static_cast<double>(level) / cfg_.levels * cfg_.plan.pmax[static_cast<std::size_t>(z)] / std::max(1, d.ues(z));
    }

    std::vector<std::uint8_t> mask(int z, int t) const {
        const auto& d = cfg_.plan.dims;
        const bool sat = d.is_satellite(z);
        const bool decoys = decoy_share(z, t) > 0.0;
        std::vector<std::uint8_t> m(lattice_.size(), 0);
        auto decoy_ok = [&](int j) { return decoys ? (!cfg_.require_decoy_power || j > 0) : j == 0; };
        for (std::size_t a = 0; a < lattice_.size(); ++a) {
            const auto [i, j] = lattice_[a];
            const double rtp = reliability_probability(cfg_.links.reliability(sat, data_power(z, i)));
            m[a] = decoy_ok(j) && rtp >= 1.0 - cfg_.eps_u;
        }
        if (std::none_of(m.begin(), m.end(), [](auto v) { return v; })) {
            // Reliability unreachable: fall back to the largest data share allowed.
            int best = 0;
            for (const auto& [i, j] : lattice_)
                if (decoy_ok(j)) best = std::max(best, i);
            for (std::size_t a = 0; a < lattice_.size(); ++a)
                m[a] = lattice_[a].first == best && decoy_ok(lattice_[a].second);
        }
        return m;
    }

    Decision decision(const State& s, std::span<const int>, int z) const {
        const auto& d = cfg_.plan.dims;
        Decision out;
        out.type = z;
        for (int l = 0; l < d.time_slots; ++l) out.obs.push_back(l == s.t);
        out.obs.push_back(decoy_share(z, s.t));
        out.obs.push_back(d.is_satellite(z) ? 1.0 : 0.0);
        out.obs.push_back(static_cast<double>(d.ues(z)) / d.freq_slots);
        out.mask = mask(z, s.t);
        return out;
    }

    std::vector<double> global_features(const State& s) const {
        const auto& d = cfg_.plan.dims;
        std::vector<double> g;
        for (int l = 0; l < d.time_slots; ++l) g.push_back(l == s.t);
        for (int z = 0; z < d.n_nodes(); ++z) g.push_back(decoy_share(z, std::min(s.t, d.time_slots - 1)));
        return g;
    }

    /// Reward and metrics of one step's joint action without validation.
    StepResult<State> evaluate(const State& s, const std::vector<int>& joint) const {
        const auto& d = cfg_.plan.dims;
        double pe = 0.0, pu = 0.0;
        int n = 0;
        std::vector<double> share;
        for (int z = 0; z < d.n_nodes(); ++z) {
            const auto [i, j] = lattice_[static_cast<std::size_t>(joint[static_cast<std::size_t>(z)])];
            const bool sat = d.is_satellite(z);
            const double pd = data_power(z, i);
            const double pa = data_power(z, j);
            share.push_back(decoy_share(z, s.t) > 0.0 ? static_cast<double>(j) / cfg_.levels : 0.0);
            for (int k = 0; k < d.ues(z); ++k) {
                const bool decoy = cfg_.plan.a[static_cast<std::size_t>(z)].slot_of(s.t, k) >= 0;
                pe += secrecy_probability(cfg_.links.secrecy(sat, pd, decoy ? pa : 0.0, d.freq_slots));
                pu += reliability_probability(cfg_.links.reliability(sat, pd));
                ++n;
            }
        }
        pe /= std::max(1, n);
        pu /= std::max(1, n);
        StepResult<State> r;
        r.next.t = s.t + 1;
        r.terminal = r.next.t >= d.time_slots;
        r.reward = compose_power_reward(pe, cfg_.eps_e, cfg_.d2, share);
        r.sp = pe;
        r.rtp = pu;
        return r;
    }

    StepResult<State> step(const State& s, const std::vector<int>& joint, Rng&) const {
        if (static_cast<int>(joint.size()) != decision_count()) throw ActionError("joint action has wrong length");
        for (int z = 0; z < decision_count(); ++z) {
            const auto m = mask(z, s.t);
            const int a = joint[static_cast<std::size_t>(z)];
            if (a < 0 || a >= static_cast<int>(m.size()) || !m[static_cast<std::size_t>(a)])
                throw ActionError("power action outside the budget/reliability mask");
        }
        return evaluate(s, joint);
    }

    /// Writes the chosen per-step powers into a copy of the plan.
    ResourcePlan apply(const std::vector<std::vector<int>>& actions) const {
        ResourcePlan p = cfg_.plan;
        const auto& d = p.dims;
        for (int t = 0; t < d.time_slots; ++t)
            for (int z = 0; z < d.n_nodes(); ++z) {
                const auto zi = static_cast<std::size_t>(z);
                const auto [i, j] = lattice_[static_cast<std::size_t>(actions[static_cast<std::size_t>(t)][zi])];
                for (int k = 0; k < d.ues(z); ++k) {
                    p.pd[zi](t, k) = data_power(z, i);
                    p.pa[zi](t, k) = p.a[zi].slot_of(t, k) >= 0 ? data_power(z, j) : 0.0;
                }
            }
        return p;
    }

private:
    PowerConfig cfg_;
    std::vector<std::pair<int, int>> lattice_;  // (data level, decoy level)
};

}  // namespace stnsec

#endif  // STNSEC_ENVIRONMENT_HPP
