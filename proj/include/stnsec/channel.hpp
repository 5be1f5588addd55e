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

#ifndef STNSEC_CHANNEL_HPP
#define STNSEC_CHANNEL_HPP

#include <complex>
#include <numbers>
#include <string_view>
#include <variant>

#include "stnsec/error.hpp"
#include "stnsec/numerics.hpp"
#include "stnsec/rng.hpp"

namespace stnsec {

enum class LinkKind { satellite_to_user, satellite_to_eve, terrestrial_to_user, terrestrial_to_eve };

inline constexpr bool is_satellite(LinkKind k) noexcept {
    return k == LinkKind::satellite_to_user || k == LinkKind::satellite_to_eve;
}

inline constexpr std::string_view to_string(LinkKind k) noexcept {
    switch (k) {
        case LinkKind::satellite_to_user: return "satellite-to-user";
        case LinkKind::satellite_to_eve: return "satellite-to-eve";
        case LinkKind::terrestrial_to_user: return "terrestrial-to-user";
        case LinkKind::terrestrial_to_eve: return "terrestrial-to-eve";
    }
    return "?";
}

using FadingDist = std::variant<RicianPowerDist, ExpPowerDist>;

/// Statistics of one link class. Satellite kinds carry a Rician factor, terrestrial
/// kinds an exponential mean; the constructors below keep that pairing.
struct LinkModel {
    LinkKind kind = LinkKind::terrestrial_to_user;
    FadingDist fading = ExpPowerDist{1.0};
    double path_loss_db = 0.0;
    double noise_watt = 1.0;
    double doppler_hz = 0.0;
    double phase0 = 0.0;

    static LinkModel satellite(LinkKind kind, double rician_factor, double path_loss_db, double noise_watt,
                               double doppler_hz = 0.0, double phase0 = 0.0) {
        if (!is_satellite(kind)) throw KindError("satellite link constructor given a terrestrial kind");
        LinkModel m{kind, RicianPowerDist{rician_factor}, path_loss_db, noise_watt, doppler_hz, phase0};
        m.check();
        return m;
    }

    static LinkModel terrestrial(LinkKind kind, double mean_gain, double path_loss_db, double noise_watt) {
        if (is_satellite(kind)) throw KindError("terrestrial link constructor given a satellite kind");
        LinkModel m{kind, ExpPowerDist{mean_gain}, path_loss_db, noise_watt, 0.0, 0.0};
        m.check();
        return m;
    }

    void check() const {
        if (is_satellite(kind) != std::holds_alternative<RicianPowerDist>(fading))
            throw KindError("link kind and fading family disagree");
        std::visit([](const auto& d) { d.check(); }, fading);
        if (!(path_loss_db >= 0.0) || !std::isfinite(path_loss_db)) throw DomainError("path loss must be >= 0 dB");
        if (!(noise_watt > 0.0) || !std::isfinite(noise_watt)) throw DomainError("noise power must be positive");
    }

    double path_gain() const { return db_to_linear(-path_loss_db); }

    /// Mean of the fading law before path loss (1 for Rician, omega for exponential).
    double fading_mean() const {
        return std::visit([](const auto& d) { return d.mean(); }, fading);
    }

    /// P(fading gain > g), path loss excluded.
    double fading_ccdf(double g) const {
        return std::visit([g](const auto& d) { return d.ccdf(g); }, fading);
    }
};

/// Deterministic LoS phasor e^{j(2 pi f_D t + phi0)}.
inline std::complex<double> los_phase(const LinkModel& model, double t) {
    if (!is_satellite(model.kind)) throw KindError("LoS phase is defined for satellite links only");
    return std::polar(1.0, 2.0 * std::numbers::pi * model.doppler_hz * t + model.phase0);
}

/// One fading draw scaled by the linear path gain.
inline double draw_power_gain(const LinkModel& model, Rng& rng) {
    const double g = std::visit(
        [&rng](const auto& d) -> double {
            using D = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<D, RicianPowerDist>)
                return sample_rician_power(d, rng);
            else
                return sample_exp_power(d, rng);
        },
        model.fading);
    return g * model.path_gain();
}

struct SinrSample {
    double signal_watt = 0.0;
    double interference_watt = 0.0;
    double noise_watt = 0.0;
    double sinr = 0.0;
};

inline SinrSample sinr(double signal_power, double gain, double interference_watt, double noise_watt) {
    if (signal_power < 0.0 || gain < 0.0 || interference_watt < 0.0)
        throw DomainError("sinr inputs must be non-negative");
    if (!(noise_watt > 0.0)) throw DomainError("noise power must be positive");
    const double s = signal_power * gain;
    return {s, interference_watt, noise_watt, s / (interference_watt + noise_watt)};
}

}  // namespace stnsec

#endif  // STNSEC_CHANNEL_HPP
