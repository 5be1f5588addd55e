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

#ifndef STNSEC_METRICS_HPP
#define STNSEC_METRICS_HPP

#include <cmath>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "stnsec/channel.hpp"
#include "stnsec/error.hpp"
#include "stnsec/grid.hpp"
#include "stnsec/numerics.hpp"
#include "stnsec/rng.hpp"

namespace stnsec {

/// Eavesdropper-side inputs of the secrecy probability. Powers are received
/// powers before small-scale fading (path loss already applied).
struct SecrecyParams {
    double p_data = 1.0;
    double p_adv = 1.0;  // 0 means no decoy: the idle-slot branch never fools the eve
    double noise = 1.0;
    double tau_e = 1.0;
    int q = 1;
    FadingDist fading = ExpPowerDist{1.0};

    void check() const {
        if (!(p_data > 0.0) || !std::isfinite(p_data)) throw DomainError("p_data must be positive");
        if (!(p_adv >= 0.0) || !std::isfinite(p_adv)) throw DomainError("p_adv must be non-negative");
        if (!(noise > 0.0) || !std::isfinite(noise)) throw DomainError("noise must be positive");
        if (!(tau_e > 0.0) || !std::isfinite(tau_e)) throw DomainError("tau_e must be positive");
        if (q < 1) throw DomainError("q must be at least 1");
        std::visit([](const auto& d) { d.check(); }, fading);
    }
};

struct ReliabilityParams {
    double p_data = 1.0;
    double noise = 1.0;
    double tau_u = 1.0;
    FadingDist fading = ExpPowerDist{1.0};

    void check() const {
        if (!(p_data > 0.0) || !std::isfinite(p_data)) throw DomainError("p_data must be positive");
        if (!(noise > 0.0) || !std::isfinite(noise)) throw DomainError("noise must be positive");
        if (!(tau_u > 0.0) || !std::isfinite(tau_u)) throw DomainError("tau_u must be positive");
        std::visit([](const auto& d) { d.check(); }, fading);
    }
};

namespace detail {

inline double exceed(const FadingDist& fading, double g) {
    return std::visit([g](const auto& d) { return d.ccdf(g); }, fading);
}

// (1/q)(1 - P(g > N0 tau / p_d)) + (1 - 1/q) P(g > N0 tau / p_a)
inline double secrecy(const SecrecyParams& s) {
    s.check();
    const double hit = 1.0 / s.q;
    const double intercepted = exceed(s.fading, s.noise * s.tau_e / s.p_data);
    const double fooled = s.p_adv > 0.0 ? exceed(s.fading, s.noise * s.tau_e / s.p_adv) : 0.0;
    const double sp = hit * (1.0 - intercepted) + (1.0 - hit) * fooled;
    return std::clamp(sp, 0.0, 1.0);
}

}  // namespace detail

inline double sp_satellite(const SecrecyParams& s) {
    if (!std::holds_alternative<RicianPowerDist>(s.fading)) throw KindError("sp_satellite needs Rician fading");
    return detail::secrecy(s);
}

inline double sp_terrestrial(const SecrecyParams& s) {
    if (!std::holds_alternative<ExpPowerDist>(s.fading)) throw KindError("sp_terrestrial needs exponential fading");
    return detail::secrecy(s);
}

/// Dispatches on the fading family.
inline double secrecy_probability(const SecrecyParams& s) { return detail::secrecy(s); }

inline double rtp_satellite(const ReliabilityParams& r) {
    if (!std::holds_alternative<RicianPowerDist>(r.fading)) throw KindError("rtp_satellite needs Rician fading");
    r.check();
    return detail::exceed(r.fading, r.noise * r.tau_u / r.p_data);
}

inline double rtp_terrestrial(const ReliabilityParams& r) {
    if (!std::holds_alternative<ExpPowerDist>(r.fading)) throw KindError("rtp_terrestrial needs exponential fading");
    r.check();
    return detail::exceed(r.fading, r.noise * r.tau_u / r.p_data);
}

inline double reliability_probability(const ReliabilityParams& r) {
    r.check();
    return detail::exceed(r.fading, r.noise * r.tau_u / r.p_data);
}

/// Secrecy when artificial noise is superposed on the data slot: a fraction phi of
/// the power is noise, so the eve's SINR is (1-phi) p g / (phi p g + N0). There is
/// no decoy, hence the idle-slot branch contributes nothing.
inline double sp_artificial_noise(const SecrecyParams& s, double phi) {
    s.check();
    if (!(phi >= 0.0 && phi <= 1.0)) throw DomainError("AN fraction must be in [0,1]");
    const double margin = (1.0 - phi) - s.tau_e * phi;
    const double intercepted = margin > 0.0 ? detail::exceed(s.fading, s.tau_e * s.noise / (s.p_data * margin)) : 0.0;
    return (1.0 - intercepted) / s.q;
}

struct McEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
    long trials = 0;
};

namespace detail {

inline double draw_gain(const FadingDist& fading, Rng& rng) {
    return std::visit(
        [&rng](const auto& d) -> double {
            using D = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<D, RicianPowerDist>)
                return sample_rician_power(d, rng);
            else
                return sample_exp_power(d, rng);
        },
        fading);
}

// Runs `trial` in fixed-size chunks, each on its own derived stream, so results do
// not depend on how chunks are later spread over workers.
template <class Trial>
McEstimate bernoulli_mc(long trials, Rng& rng, Trial&& trial) {
    constexpr long chunk = 1 << 16;
    const std::uint64_t base = rng();
    long hits = 0;
    for (long start = 0, c = 0; start < trials; start += chunk, ++c) {
        Rng sub = Rng(base).split(static_cast<std::uint64_t>(c));
        const long n = std::min(chunk, trials - start);
        for (long i = 0; i < n; ++i) hits += trial(sub) ? 1 : 0;
    }
    const double p = static_cast<double>(hits) / static_cast<double>(trials);
    return {p, std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(trials)), trials};
}

}  // namespace detail

/// Simulates the two-hypothesis secrecy event: the eve hits the data slot with
/// probability 1/q; a hit is secret when the data SINR stays below tau_e, a miss is
/// secret when the decoy it examines clears tau_e.
inline McEstimate mc_secrecy(const SecrecyParams& s, long trials, Rng& rng) {
    s.check();
    if (trials < 1000) throw DomainError("mc_secrecy needs at least 1000 trials");
    const double hit_p = 1.0 / s.q;
    return detail::bernoulli_mc(trials, rng, [&](Rng& r) {
        const bool hit = r.uniform() < hit_p;
        const double g = detail::draw_gain(s.fading, r);
        if (hit) return s.p_data * g / s.noise < s.tau_e;
        return s.p_adv * g / s.noise >= s.tau_e;
    });
}

inline McEstimate mc_reliability(const ReliabilityParams& p, long trials, Rng& rng) {
    p.check();
    if (trials < 1000) throw DomainError("mc_reliability needs at least 1000 trials");
    return detail::bernoulli_mc(trials, rng, [&](Rng& r) {
        return p.p_data * detail::draw_gain(p.fading, r) / p.noise >= p.tau_u;
    });
}

/// The four link classes plus thresholds (linear scale).
struct LinkSet {
    LinkModel sat_user = LinkModel::satellite(LinkKind::satellite_to_user, 5.0, 0.0, 1.0);
    LinkModel sat_eve = LinkModel::satellite(LinkKind::satellite_to_eve, 3.0, 0.0, 1.0);
    LinkModel terr_user = LinkModel::terrestrial(LinkKind::terrestrial_to_user, 1.0, 0.0, 1.0);
    LinkModel terr_eve = LinkModel::terrestrial(LinkKind::terrestrial_to_eve, 0.75, 0.0, 1.0);
    double tau_e = 1.0;
    double tau_u = 1.0;

    const LinkModel& user_link(bool satellite) const { return satellite ? sat_user : terr_user; }
    const LinkModel& eve_link(bool satellite) const { return satellite ? sat_eve : terr_eve; }

    SecrecyParams secrecy(bool satellite, double pd, double pa, int q) const {
        const auto& m = eve_link(satellite);
        return {pd * m.path_gain(), pa * m.path_gain(), m.noise_watt, tau_e, q, m.fading};
    }
    ReliabilityParams reliability(bool satellite, double pd) const {
        const auto& m = user_link(satellite);
        return {pd * m.path_gain(), m.noise_watt, tau_u, m.fading};
    }
};

class PlanRejected : public std::invalid_argument {
public:
    explicit PlanRejected(FeasibilityReport r)
        : std::invalid_argument("plan violates hard constraints:\n" + r.summary()), report_(std::move(r)) {}
    const FeasibilityReport& report() const { return report_; }

private:
    FeasibilityReport report_;
};

struct UeMetrics {
    int node = 0;
    int ue = 0;
    double sp = 0.0;
    double rtp = 0.0;
    bool sp_ok = false;
    bool rtp_ok = false;
};

struct ObjectiveReport {
    std::vector<UeMetrics> ues;
    double objective = 0.0;  // sum of per-UE SP
    bool all_sp_ok = true;
    bool all_rtp_ok = true;
    bool used_interference = false;
    int cross_node_conflicts = 0;  // cells shared across nodes; the closed forms ignore them

    double mean_sp() const { return ues.empty() ? 0.0 : objective / static_cast<double>(ues.size()); }
    double mean_rtp() const {
        double s = 0.0;
        for (const auto& u : ues) s += u.rtp;
        return ues.empty() ? 0.0 : s / static_cast<double>(ues.size());
    }
    double min_rtp() const {
        double m = 1.0;
        for (const auto& u : ues) m = std::min(m, u.rtp);
        return m;
    }
};

/// Closed-form SP and RTP of every UE, averaged over the period. Interference terms
/// never enter; cells shared across nodes are only counted in the report.
/// Adversarial power on a step without a decoy slot is artificial noise superposed
/// on the data slot (data keeps p_d, the eavesdropper also sees p_a as self-noise).
/// UEs with zero data power at a step count as unreliable and fully secret there.
inline ObjectiveReport plan_objective(const ResourcePlan& plan, const LinkSet& links, double eps_e, double eps_u) {
    auto rep = validate(plan);
    if (!rep.feasible()) throw PlanRejected(std::move(rep));
    const auto& d = plan.dims;
    ObjectiveReport out;
    out.cross_node_conflicts = static_cast<int>(cochannel_conflicts(plan).size());
    for (int z = 0; z < d.n_nodes(); ++z) {
        const auto zi = static_cast<std::size_t>(z);
        const bool sat = d.is_satellite(z);
        for (int k = 0; k < d.ues(z); ++k) {
            double sp = 0.0, rtp = 0.0;
            for (int l = 0; l < d.time_slots; ++l) {
                const double pd = plan.pd[zi](l, k);
                const bool decoy = plan.a[zi].slot_of(l, k) >= 0;
                const double pa = plan.pa[zi](l, k);
                if (pd <= 0.0) {
                    sp += 1.0;
                    continue;
                }
                rtp += reliability_probability(links.reliability(sat, pd));
                if (!decoy && pa > 0.0)
                    sp += sp_artificial_noise(links.secrecy(sat, pd + pa, 0.0, d.freq_slots), pa / (pd + pa));
                else
                    sp += secrecy_probability(links.secrecy(sat, pd, decoy ? pa : 0.0, d.freq_slots));
            }
            UeMetrics u{z, k, sp / d.time_slots, rtp / d.time_slots, false, false};
            u.sp_ok = u.sp >= 1.0 - eps_e;
            u.rtp_ok = u.rtp >= 1.0 - eps_u;
            out.all_sp_ok &= u.sp_ok;
            out.all_rtp_ok &= u.rtp_ok;
            out.objective += u.sp;
            out.ues.push_back(u);
        }
    }
    return out;
}

struct Receiver {
    int node = 0;
    int ue = 0;
    bool eavesdropper = false;
};

/// Power gain from the transmitter of `tx` to the receiver.
using GainFn = std::function<double(const Transmission& tx, LinkKind kind)>;

/// SINR of the receiver's own transmission at (t, f) against every other co-channel
/// transmission, decoys included. Without an own transmission the signal is zero.
inline SinrSample sinr_with_interference(const ResourcePlan& plan, const LinkSet& links, const Receiver& rx, int t,
                                         int f, const GainFn& gain) {
    const auto& d = plan.dims;
    if (t < 0 || t >= d.time_slots || f < 0 || f >= d.freq_slots) throw ShapeError("time/slot index out of range");
    double signal = 0.0, interference = 0.0;
    const double noise = links.user_link(d.is_satellite(rx.node)).noise_watt;
    for (const auto& tx : transmissions_at(plan, t, f)) {
        const auto zi = static_cast<std::size_t>(tx.node);
        const bool sat = d.is_satellite(tx.node);
        const LinkKind kind = rx.eavesdropper ? (sat ? LinkKind::satellite_to_eve : LinkKind::terrestrial_to_eve)
                                              : (sat ? LinkKind::satellite_to_user : LinkKind::terrestrial_to_user);
        const double p = tx.kind == TxKind::data ? plan.pd[zi](t, tx.ue) : plan.pa[zi](t, tx.ue);
        const double rx_power = p * gain(tx, kind);
        if (tx.node == rx.node && tx.ue == rx.ue && tx.kind == TxKind::data) signal += rx_power;
        else interference += rx_power;
    }
    return {signal, interference, noise, signal / (interference + noise)};
}

inline SinrSample sinr_with_interference(const ResourcePlan& plan, const LinkSet& links, const Receiver& rx, int t,
                                         int f, Rng& rng) {
    auto draw = [&](const Transmission&, LinkKind kind) {
        switch (kind) {
            case LinkKind::satellite_to_user: return draw_power_gain(links.sat_user, rng);
            case LinkKind::satellite_to_eve: return draw_power_gain(links.sat_eve, rng);
            case LinkKind::terrestrial_to_user: return draw_power_gain(links.terr_user, rng);
            case LinkKind::terrestrial_to_eve: return draw_power_gain(links.terr_eve, rng);
        }
        return 0.0;
    };
    return sinr_with_interference(plan, links, rx, t, f, GainFn(draw));
}

struct CurveRow {
    std::string family;  // e.g. "satellite-sp"
    double parameter = 0.0;
    double theory = 0.0;
    double mc = 0.0;
    double std_error = 0.0;
};

/// CSV: family,parameter,theory,mc_estimate,std_error. Lines starting with '#' carry
/// provenance supplied by the caller.
inline void write_curve_csv(std::ostream& os, const std::vector<CurveRow>& rows,
                            const std::vector<std::string>& comments = {}) {
    for (const auto& c : comments) os << "# " << c << '\n';
    os << "family,parameter,theory,mc_estimate,std_error\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%s,%.10g,%.10g,%.10g,%.10g\n", r.family.c_str(), r.parameter, r.theory, r.mc,
                      r.std_error);
        os << buf;
    }
}

}  // namespace stnsec

#endif  // STNSEC_METRICS_HPP
