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

#ifndef STNSEC_NUMERICS_HPP
#define STNSEC_NUMERICS_HPP

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>

#include "stnsec/error.hpp"
#include "stnsec/rng.hpp"

namespace stnsec {

namespace detail {

inline void require_finite_nonneg(double x, const char* what) {
    if (!std::isfinite(x) || x < 0.0)
        throw DomainError(std::string(what) + " must be finite and non-negative, got " + std::to_string(x));
}

// I0(x) * exp(-x), the form used by every caller that would otherwise overflow.
inline double bessel_i0_scaled(double x) {
    if (x < 15.0) {
        const double y = 0.25 * x * x;
        double term = 1.0;
        double sum = 1.0;
        for (int k = 1; k < 500; ++k) {
            term *= y / (static_cast<double>(k) * k);
            sum += term;
            if (term < sum * 1e-17) break;
        }
        return sum * std::exp(-x);
    }
    // Hankel asymptotic series, truncated at its smallest term.
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 200; ++k) {
        const double next = term * (2.0 * k - 1.0) * (2.0 * k - 1.0) / (8.0 * k * x);
        if (next > term || next < sum * 1e-17) break;
        term = next;
        sum += term;
    }
    return sum / std::sqrt(2.0 * std::numbers::pi * x);
}

}  // namespace detail

/// Zero-order modified Bessel function of the first kind.
inline double bessel_i0(double x) {
    detail::require_finite_nonneg(x, "bessel_i0 argument");
    return detail::bessel_i0_scaled(x) * std::exp(x);
}

namespace detail {

// sum_k Pois(k; mix) * P(Pois(rate) <= k - shift), accumulated in log space.
inline double poisson_mixture_tail(double mix, double rate, int shift) {
    const double log_mix = std::log(mix);
    const double log_rate = std::log(rate);
    double cdf = 0.0;  // P(Pois(rate) <= k - shift)
    double sum = 0.0;
    double mass = 0.0;
    // Running log k! and log j!; std::lgamma writes the global signgam and races.
    double log_k_fact = 0.0, log_j_fact = 0.0;
    for (long k = 0;; ++k) {
        const long j = k - shift;
        if (k > 0) log_k_fact += std::log(static_cast<double>(k));
        if (j > 0) log_j_fact += std::log(static_cast<double>(j));
        if (j >= 0) {
            cdf += std::exp(-rate + static_cast<double>(j) * log_rate - log_j_fact);
            if (cdf > 1.0) cdf = 1.0;
        }
        const double w = std::exp(-mix + static_cast<double>(k) * log_mix - log_k_fact);
        sum += w * cdf;
        mass += w;
        if (static_cast<double>(k) > mix) {
            // Geometric bound on the remaining Poisson weight; cdf <= 1.
            const double ratio = mix / (static_cast<double>(k) + 1.0);
            const double tail = w * ratio / (1.0 - ratio);
            if (tail <= 1e-12 * sum || tail < 1e-300 || 1.0 - mass < 1e-17) break;
        }
        if (k > 100000) break;
    }
    return std::min(sum, 1.0);
}

}  // namespace detail

/// First-order Marcum Q function Q1(a, b).
///
/// With K ~ Pois(a^2/2) and J ~ Pois(b^2/2) independent, Q1(a,b) = P(J <= K). The
/// smaller of P(J <= K) and P(J > K) is summed directly so that values near 1 keep
/// their relative accuracy in the complement.
inline double marcum_q1(double a, double b) {
    detail::require_finite_nonneg(a, "marcum_q1 a");
    detail::require_finite_nonneg(b, "marcum_q1 b");
    if (b == 0.0) return 1.0;
    const double lambda = 0.5 * a * a;
    const double x = 0.5 * b * b;
    if (lambda == 0.0) return std::exp(-x);
    if (x >= lambda) return detail::poisson_mixture_tail(lambda, x, 0);
    return 1.0 - detail::poisson_mixture_tail(x, lambda, 1);
}

/// Power gain |h|^2 of a unit-mean Rician channel with factor omega (LoS to scatter power).
struct RicianPowerDist {
    double omega = 0.0;

    void check() const { detail::require_finite_nonneg(omega, "Rician factor"); }

    double pdf(double g) const {
        check();
        if (g < 0.0) return 0.0;
        const double z = 2.0 * std::sqrt(omega * (omega + 1.0) * g);
        return (omega + 1.0) * std::exp(-omega - (omega + 1.0) * g + z) * detail::bessel_i0_scaled(z);
    }

    /// P(G > g), a Marcum-Q evaluation.
    double ccdf(double g) const {
        check();
        if (g <= 0.0) return 1.0;
        return marcum_q1(std::sqrt(2.0 * omega), std::sqrt(2.0 * (omega + 1.0) * g));
    }

    double cdf(double g) const { return 1.0 - ccdf(g); }
    double mean() const { return 1.0; }
};

/// Power gain of a Rayleigh channel: exponential with mean omega_mean.
struct ExpPowerDist {
    double omega_mean = 1.0;

    void check() const {
        if (!std::isfinite(omega_mean) || omega_mean <= 0.0)
            throw DomainError("exponential mean gain must be positive");
    }

    double pdf(double g) const {
        check();
        return g < 0.0 ? 0.0 : std::exp(-g / omega_mean) / omega_mean;
    }
    double ccdf(double g) const {
        check();
        return g <= 0.0 ? 1.0 : std::exp(-g / omega_mean);
    }
    double cdf(double g) const { return 1.0 - ccdf(g); }
    double mean() const { return omega_mean; }
};

/// Draws |h|^2 for h = sqrt(K/(K+1)) e^{j phase} + sqrt(1/(K+1)) (x + jy), x, y ~ N(0, 1/2).
inline double sample_rician_power(const RicianPowerDist& dist, Rng& rng, double los_phase = 0.0) {
    const double los = std::sqrt(dist.omega / (dist.omega + 1.0));
    const double sc = std::sqrt(1.0 / (dist.omega + 1.0)) * std::sqrt(0.5);
    const std::complex<double> h =
        los * std::polar(1.0, los_phase) + sc * std::complex<double>(rng.normal(), rng.normal());
    return std::norm(h);
}

inline double sample_exp_power(const ExpPowerDist& dist, Rng& rng) { return rng.exponential(dist.omega_mean); }

inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watt_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

}  // namespace stnsec

#endif  // STNSEC_NUMERICS_HPP
