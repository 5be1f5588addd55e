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

#ifndef STNSEC_HARNESS_HPP
#define STNSEC_HARNESS_HPP

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "stnsec/advgen.hpp"
#include "stnsec/baselines.hpp"
#include "stnsec/eavesdroppers.hpp"
#include "stnsec/environment.hpp"
#include "stnsec/error.hpp"
#include "stnsec/grid.hpp"
#include "stnsec/marl.hpp"
#include "stnsec/metrics.hpp"
#include "stnsec/numerics.hpp"
#include "stnsec/rng.hpp"

namespace stnsec {

inline constexpr const char* kArtifactVersion = "stnsec-0.1.0";

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct LinkClassConfig {
    double fading = 1.0;  // Rician factor for satellite links, mean gain for terrestrial ones
    double path_loss_db = 0.0;
};

struct Fig3Config {
    int q = 16;
    std::vector<double> satellite_dbm;
    std::vector<double> terrestrial_dbm;
    double adv_offset_db = 0.0;  // decoy power relative to data power
    long trials = 1000000;
};

struct ExperimentConfig {
    std::string scenario = "toy";
    GridDims dims{1, 1, 16, 16, {2, 2}, true, true};
    int band_width = 0;

    double noise_dbm = -103.0;
    double tau_e_db = 2.0;
    double tau_u_db = 2.0;
    LinkClassConfig sat_user{5.0, 137.5}, sat_eve{3.0, 137.5};
    LinkClassConfig terr_user{1.0, 95.0}, terr_eve{0.75, 112.5};

    double sat_pmax_dbm = 53.0;
    double bs_pmax_dbm = 37.0;
    int power_levels = 8;
    double provisional_split = 0.5;
    bool require_decoy_power = true;

    double security = 0.8;  // 1 - eps_e
    double reliability = 0.95;  // 1 - eps_u
    std::vector<double> reliability_sweep{0.90, 0.95, 0.99};
    std::vector<int> ue_sweep{2, 4, 8};

    RewardWeights weights;
    JammerConfig jammer;
    TrainConfig stage1;
    TrainConfig stage3;
    GanConfig stage2;
    int corpus_size = 64;
    double corpus_epsilon = 0.3;

    EveConfig eve;
    long eval_periods = 200;
    double an_fraction = 0.3;
    double logistic_r = 3.99;

    Fig3Config fig3;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    std::string output_dir = "out";

    double eps_e() const { return 1.0 - security; }
    double eps_u() const { return 1.0 - reliability; }

    LinkSet links() const {
        const double n0 = dbm_to_watt(noise_dbm);
        LinkSet l;
        l.sat_user = LinkModel::satellite(LinkKind::satellite_to_user, sat_user.fading, sat_user.path_loss_db, n0);
        l.sat_eve = LinkModel::satellite(LinkKind::satellite_to_eve, sat_eve.fading, sat_eve.path_loss_db, n0);
        l.terr_user = LinkModel::terrestrial(LinkKind::terrestrial_to_user, terr_user.fading, terr_user.path_loss_db, n0);
        l.terr_eve = LinkModel::terrestrial(LinkKind::terrestrial_to_eve, terr_eve.fading, terr_eve.path_loss_db, n0);
        l.tau_e = db_to_linear(tau_e_db);
        l.tau_u = db_to_linear(tau_u_db);
        return l;
    }

    std::vector<double> pmax() const {
        std::vector<double> p;
        for (int z = 0; z < dims.n_nodes(); ++z) p.push_back(dbm_to_watt(dims.is_satellite(z) ? sat_pmax_dbm : bs_pmax_dbm));
        return p;
    }

    ScheduleConfig schedule() const {
        ScheduleConfig c;
        c.dims = dims;
        c.links = links();
        c.pmax = pmax();
        c.eps_e = eps_e();
        c.eps_u = eps_u();
        c.weights = weights;
        c.jammer = jammer;
        c.provisional_split = provisional_split;
        c.band_width = band_width;
        return c;
    }

    /// Copy with `total` UEs spread over the nodes as evenly as possible, satellites first.
    ExperimentConfig with_ues(int total) const {
        ExperimentConfig c = *this;
        const int n = dims.n_nodes();
        c.dims.ue_counts.assign(static_cast<std::size_t>(n), total / n);
        for (int z = 0; z < total % n; ++z) ++c.dims.ue_counts[static_cast<std::size_t>(z)];
        return c;
    }

    void check() const {
        try {
            dims.check();
            links();
            stage1.check();
            stage3.check();
            stage2.check();
            eve.check(dims.freq_slots);
        } catch (const std::exception& e) {
            throw ConfigError(e.what());
        }
        auto prob = [](double p, const char* what) {
            if (!(p > 0.0 && p < 1.0)) throw ConfigError(std::string(what) + " must lie in (0,1)");
        };
        prob(security, "security target");
        prob(reliability, "reliability target");
        for (double r : reliability_sweep) prob(r, "reliability sweep entry");
        for (int k : ue_sweep)
            if (k < 1) throw ConfigError("UE sweep entries must be positive");
        if (power_levels < 1) throw ConfigError("power levels must be positive");
        if (!(provisional_split > 0.0 && provisional_split <= 1.0)) throw ConfigError("provisional split must lie in (0,1]");
        if (corpus_size < 1) throw ConfigError("corpus size must be positive");
        if (!(corpus_epsilon >= 0.0 && corpus_epsilon <= 1.0)) throw ConfigError("corpus epsilon must lie in [0,1]");
        if (eval_periods < 1) throw ConfigError("evaluation needs at least one period");
        if (!(an_fraction >= 0.0 && an_fraction < 1.0)) throw ConfigError("AN fraction must lie in [0,1)");
        if (!(logistic_r > 3.57 && logistic_r <= 4.0)) throw ConfigError("logistic r must lie in (3.57, 4]");
        if (fig3.q < 1 || fig3.trials < 1000) throw ConfigError("fig3 needs q >= 1 and at least 1000 trials");
        if (seeds.empty()) throw ConfigError("at least one seed is required");
        if (dims.period_reuse && dims.n_sats > 0) {
            const int w = band_width > 0 ? band_width : dims.max_band_width();
            if (w < dims.time_slots) throw ConfigError("satellite band narrower than the period while period_reuse is on");
        }
        if (dims.period_reuse && dims.freq_slots < dims.time_slots) throw ConfigError("period_reuse needs q >= L");
    }
};

/// Desk-scale profile: one satellite and one BS sharing 16 slots.
inline ExperimentConfig toy_profile() {
    ExperimentConfig c;
    c.scenario = "toy";
    c.stage1.episodes = 100;
    c.stage1.optimizer = OptimizerKind::adam;
    c.stage1.learning_rate = 1e-3;
    c.stage1.discount = 0.98;
    c.stage3.episodes = 300;
    c.stage3.optimizer = OptimizerKind::adam;
    c.stage3.learning_rate = 3e-3;
    c.stage3.discount = 0.98;
    c.stage3.hidden = {32, 32};
    c.stage2.iterations = 300;
    c.eve.monitored = 1;
    c.eval_periods = 200;
    c.fig3.q = 16;
    c.fig3.satellite_dbm = {34, 37, 40, 43, 46, 49, 52, 55};
    c.fig3.terrestrial_dbm = {8, 11, 14, 17, 20, 23, 26, 29};
    return c;
}

/// Section-VI scale: two satellites, four BSs, 64 slots and 64 time slots.
inline ExperimentConfig paper_profile() {
    ExperimentConfig c = toy_profile();
    c.scenario = "paper";
    c.dims = GridDims{2, 4, 64, 64, {4, 4, 2, 2, 2, 2}, true, false};
    c.band_width = 32;
    c.sat_user = {5.0, 145.0};
    c.sat_eve = {3.0, 145.0};
    c.terr_user = {1.0, 120.0};
    c.terr_eve = {0.75, 120.0};
    c.stage1 = TrainConfig{};
    c.stage1.learning_rate = 0.05;
    c.stage1.discount = 0.98;
    c.stage3 = c.stage1;
    c.ue_sweep = {4, 8, 16, 32, 64};
    c.eve.monitored = 4;
    c.fig3.q = 64;
    c.fig3.satellite_dbm = {42, 45, 48, 51, 54, 57, 60, 63};
    c.fig3.terrestrial_dbm = {17, 20, 23, 26, 29, 32, 35, 38};
    return c;
}

inline ExperimentConfig profile(const std::string& name) {
    if (name == "toy") return toy_profile();
    if (name == "paper") return paper_profile();
    throw ConfigError("unknown profile '" + name + "' (expected toy or paper)");
}

// ---- JSON mapping --------------------------------------------------------------

namespace detail {

using nlohmann::json;

template <class T>
void take(const json& j, const char* key, T& v) {
    if (!j.contains(key)) return;
    try {
        v = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
}

inline const char* optimizer_name(OptimizerKind k) { return k == OptimizerKind::adam ? "adam" : "sgd"; }
inline const char* mixer_name(MixerKind k) { return k == MixerKind::sum ? "sum" : "qmix"; }
inline const char* jammer_name(JammerConfig::Kind k) {
    switch (k) {
        case JammerConfig::Kind::sweep: return "sweep";
        case JammerConfig::Kind::random: return "random";
        default: return "none";
    }
}

inline json train_to_json(const TrainConfig& c) {
    return {{"discount", c.discount},       {"learning_rate", c.learning_rate},
            {"optimizer", optimizer_name(c.optimizer)},
            {"eps_start", c.eps_start},     {"eps_end", c.eps_end},
            {"eps_fraction", c.eps_fraction}, {"episodes", c.episodes},
            {"batch", c.batch},             {"capacity", c.capacity},
            {"target_sync", c.target_sync}, {"warmup", c.warmup},
            {"hidden", c.hidden},           {"mixer_embed", c.mixer_embed},
            {"mixer", mixer_name(c.mixer)}, {"grad_clip", c.grad_clip},
            {"divergence_limit", c.divergence_limit}};
}

inline void train_from_json(const json& j, TrainConfig& c) {
    take(j, "discount", c.discount);
    take(j, "learning_rate", c.learning_rate);
    if (j.contains("optimizer")) {
        const auto s = j.at("optimizer").get<std::string>();
        if (s != "sgd" && s != "adam") throw ConfigError("optimizer must be sgd or adam");
        c.optimizer = s == "adam" ? OptimizerKind::adam : OptimizerKind::sgd;
    }
    take(j, "eps_start", c.eps_start);
    take(j, "eps_end", c.eps_end);
    take(j, "eps_fraction", c.eps_fraction);
    take(j, "episodes", c.episodes);
    take(j, "batch", c.batch);
    take(j, "capacity", c.capacity);
    take(j, "target_sync", c.target_sync);
    take(j, "warmup", c.warmup);
    take(j, "hidden", c.hidden);
    take(j, "mixer_embed", c.mixer_embed);
    if (j.contains("mixer")) {
        const auto s = j.at("mixer").get<std::string>();
        if (s != "qmix" && s != "sum") throw ConfigError("mixer must be qmix or sum");
        c.mixer = s == "sum" ? MixerKind::sum : MixerKind::qmix;
    }
    take(j, "grad_clip", c.grad_clip);
    take(j, "divergence_limit", c.divergence_limit);
}

inline json link_to_json(const LinkClassConfig& l, const char* fading_key) {
    return {{fading_key, l.fading}, {"path_loss_db", l.path_loss_db}};
}

inline void link_from_json(const json& j, const char* key, const char* fading_key, LinkClassConfig& l) {
    if (!j.contains(key)) return;
    take(j.at(key), fading_key, l.fading);
    take(j.at(key), "path_loss_db", l.path_loss_db);
}

}  // namespace detail

inline nlohmann::json to_json(const ExperimentConfig& c) {
    using detail::json;
    const auto& d = c.dims;
    json j;
    j["scenario"] = c.scenario;
    j["grid"] = {{"satellites", d.n_sats},       {"base_stations", d.n_bs},
                 {"time_slots", d.time_slots},   {"freq_slots", d.freq_slots},
                 {"ues", d.ue_counts},           {"contiguous_bands", d.contiguous_bands},
                 {"period_reuse", d.period_reuse}, {"band_width", c.band_width}};
    j["links"] = {{"noise_dbm", c.noise_dbm},
                  {"tau_e_db", c.tau_e_db},
                  {"tau_u_db", c.tau_u_db},
                  {"satellite_user", detail::link_to_json(c.sat_user, "rician_factor")},
                  {"satellite_eve", detail::link_to_json(c.sat_eve, "rician_factor")},
                  {"terrestrial_user", detail::link_to_json(c.terr_user, "mean_gain")},
                  {"terrestrial_eve", detail::link_to_json(c.terr_eve, "mean_gain")}};
    j["power"] = {{"satellite_dbm", c.sat_pmax_dbm},     {"bs_dbm", c.bs_pmax_dbm},
                  {"levels", c.power_levels},            {"provisional_split", c.provisional_split},
                  {"require_decoy_power", c.require_decoy_power}};
    j["targets"] = {{"security", c.security},
                    {"reliability", c.reliability},
                    {"reliability_sweep", c.reliability_sweep},
                    {"ue_sweep", c.ue_sweep}};
    j["reward"] = {{"c3", c.weights.c3}, {"c4", c.weights.c4}, {"c5", c.weights.c5},
                   {"d2", c.weights.d2}, {"binary_penalties", c.weights.binary_penalties}};
    j["jammer"] = {{"kind", detail::jammer_name(c.jammer.kind)}, {"duty", c.jammer.duty}};
    j["stage1"] = detail::train_to_json(c.stage1);
    j["stage3"] = detail::train_to_json(c.stage3);
    const auto& g = c.stage2;
    j["stage2"] = {{"lambda_gp", g.lambda_gp},   {"alpha", g.alpha},
                   {"beta", g.beta},             {"n_critic", g.n_critic},
                   {"noise_dim", g.noise_dim},   {"iterations", g.iterations},
                   {"batch", g.batch},           {"hidden", g.hidden},
                   {"lr", g.lr},                 {"smoothing", g.smoothing},
                   {"collapse_variance", g.collapse_variance},
                   {"collapse_rounds", g.collapse_rounds},
                   {"corpus_size", c.corpus_size}, {"corpus_epsilon", c.corpus_epsilon}};
    const auto& e = c.eve;
    j["eves"] = {{"monitored", e.monitored},
                 {"window", e.window},
                 {"warmup_periods", e.warmup_periods},
                 {"svm_lambda", e.svm_lambda},
                 {"svm_epochs", e.svm_epochs},
                 {"episode_periods", e.episode_periods},
                 {"dqn", detail::train_to_json(e.dqn)},
                 {"eval_periods", c.eval_periods}};
    j["baselines"] = {{"an_fraction", c.an_fraction}, {"logistic_r", c.logistic_r}};
    j["fig3"] = {{"q", c.fig3.q},
                 {"satellite_dbm", c.fig3.satellite_dbm},
                 {"terrestrial_dbm", c.fig3.terrestrial_dbm},
                 {"adv_offset_db", c.fig3.adv_offset_db},
                 {"trials", c.fig3.trials}};
    j["seeds"] = c.seeds;
    j["output_dir"] = c.output_dir;
    return j;
}

/// Overlays `j` on `c`; keys absent from `j` keep their current values. Unknown
/// top-level sections are rejected so typos do not pass silently.
inline void apply_json(const nlohmann::json& j, ExperimentConfig& c) {
    using detail::take;
    using nlohmann::json;
    static const char* known[] = {"profile", "scenario", "grid",  "links", "power",     "targets", "reward",
                                  "jammer",  "stage1",   "stage2", "stage3", "eves",    "baselines", "fig3",
                                  "seeds",   "output_dir"};
    if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
    for (const auto& [key, _] : j.items())
        if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; }) == std::end(known))
            throw ConfigError("unknown configuration section '" + key + "'");
    // Keys inside sections must exist in the serialized form, so typos fail loudly.
    const std::function<void(const json&, const json&, const std::string&)> keys = [&](const json& got, const json& ref,
                                                                                     const std::string& at) {
        if (!got.is_object() || !ref.is_object()) return;
        for (const auto& [key, v] : got.items()) {
            if (!ref.contains(key)) throw ConfigError("unknown configuration key '" + at + key + "'");
            keys(v, ref.at(key), at + key + ".");
        }
    };
    const json ref = to_json(c);
    for (const auto& [key, v] : j.items())
        if (ref.contains(key)) keys(v, ref.at(key), key + ".");
    take(j, "scenario", c.scenario);
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        take(g, "satellites", c.dims.n_sats);
        take(g, "base_stations", c.dims.n_bs);
        take(g, "time_slots", c.dims.time_slots);
        take(g, "freq_slots", c.dims.freq_slots);
        take(g, "ues", c.dims.ue_counts);
        take(g, "contiguous_bands", c.dims.contiguous_bands);
        take(g, "period_reuse", c.dims.period_reuse);
        take(g, "band_width", c.band_width);
    }
    if (j.contains("links")) {
        const auto& l = j.at("links");
        take(l, "noise_dbm", c.noise_dbm);
        take(l, "tau_e_db", c.tau_e_db);
        take(l, "tau_u_db", c.tau_u_db);
        detail::link_from_json(l, "satellite_user", "rician_factor", c.sat_user);
        detail::link_from_json(l, "satellite_eve", "rician_factor", c.sat_eve);
        detail::link_from_json(l, "terrestrial_user", "mean_gain", c.terr_user);
        detail::link_from_json(l, "terrestrial_eve", "mean_gain", c.terr_eve);
    }
    if (j.contains("power")) {
        const auto& p = j.at("power");
        take(p, "satellite_dbm", c.sat_pmax_dbm);
        take(p, "bs_dbm", c.bs_pmax_dbm);
        take(p, "levels", c.power_levels);
        take(p, "provisional_split", c.provisional_split);
        take(p, "require_decoy_power", c.require_decoy_power);
    }
    if (j.contains("targets")) {
        const auto& t = j.at("targets");
        take(t, "security", c.security);
        take(t, "reliability", c.reliability);
        take(t, "reliability_sweep", c.reliability_sweep);
        take(t, "ue_sweep", c.ue_sweep);
    }
    if (j.contains("reward")) {
        const auto& r = j.at("reward");
        take(r, "c3", c.weights.c3);
        take(r, "c4", c.weights.c4);
        take(r, "c5", c.weights.c5);
        take(r, "d2", c.weights.d2);
        take(r, "binary_penalties", c.weights.binary_penalties);
    }
    if (j.contains("jammer")) {
        const auto& m = j.at("jammer");
        if (m.contains("kind")) {
            const auto k = m.at("kind").get<std::string>();
            if (k == "none") c.jammer.kind = JammerConfig::Kind::none;
            else if (k == "sweep") c.jammer.kind = JammerConfig::Kind::sweep;
            else if (k == "random") c.jammer.kind = JammerConfig::Kind::random;
            else throw ConfigError("jammer kind must be none, sweep or random");
        }
        take(m, "duty", c.jammer.duty);
    }
    if (j.contains("stage1")) detail::train_from_json(j.at("stage1"), c.stage1);
    if (j.contains("stage3")) detail::train_from_json(j.at("stage3"), c.stage3);
    if (j.contains("stage2")) {
        const auto& g = j.at("stage2");
        take(g, "lambda_gp", c.stage2.lambda_gp);
        take(g, "alpha", c.stage2.alpha);
        take(g, "beta", c.stage2.beta);
        take(g, "n_critic", c.stage2.n_critic);
        take(g, "noise_dim", c.stage2.noise_dim);
        take(g, "iterations", c.stage2.iterations);
        take(g, "batch", c.stage2.batch);
        take(g, "hidden", c.stage2.hidden);
        take(g, "lr", c.stage2.lr);
        take(g, "smoothing", c.stage2.smoothing);
        take(g, "collapse_variance", c.stage2.collapse_variance);
        take(g, "collapse_rounds", c.stage2.collapse_rounds);
        take(g, "corpus_size", c.corpus_size);
        take(g, "corpus_epsilon", c.corpus_epsilon);
    }
    if (j.contains("eves")) {
        const auto& e = j.at("eves");
        take(e, "monitored", c.eve.monitored);
        take(e, "window", c.eve.window);
        take(e, "warmup_periods", c.eve.warmup_periods);
        take(e, "svm_lambda", c.eve.svm_lambda);
        take(e, "svm_epochs", c.eve.svm_epochs);
        take(e, "episode_periods", c.eve.episode_periods);
        if (e.contains("dqn")) detail::train_from_json(e.at("dqn"), c.eve.dqn);
        take(e, "eval_periods", c.eval_periods);
    }
    if (j.contains("baselines")) {
        take(j.at("baselines"), "an_fraction", c.an_fraction);
        take(j.at("baselines"), "logistic_r", c.logistic_r);
    }
    if (j.contains("fig3")) {
        const auto& f = j.at("fig3");
        take(f, "q", c.fig3.q);
        take(f, "satellite_dbm", c.fig3.satellite_dbm);
        take(f, "terrestrial_dbm", c.fig3.terrestrial_dbm);
        take(f, "adv_offset_db", c.fig3.adv_offset_db);
        take(f, "trials", c.fig3.trials);
    }
    take(j, "seeds", c.seeds);
    take(j, "output_dir", c.output_dir);
}

/// Profile defaults overlaid with the file. A "profile" key in the file selects the
/// base profile when none is given explicitly.
inline ExperimentConfig parse_config(const nlohmann::json& j, std::optional<std::string> profile_name = {}) {
    std::string base = profile_name.value_or("toy");
    if (!profile_name && j.is_object() && j.contains("profile")) base = j.at("profile").get<std::string>();
    ExperimentConfig c = profile(base);
    apply_json(j, c);
    c.check();
    return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path, std::optional<std::string> profile_name = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open configuration file " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in, nullptr, true, true);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("configuration is not valid JSON: ") + e.what());
    }
    return parse_config(j, std::move(profile_name));
}

/// 64-bit FNV-1a of the canonical JSON form, output directory excluded, as 16 hex digits.
inline std::string config_hash(const ExperimentConfig& c) {
    auto j = to_json(c);
    j.erase("output_dir");
    const std::string s = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---- outputs ---------------------------------------------------------------------

/// Output directory: STNSEC_OUT overrides the configured one.
inline std::filesystem::path output_root(const ExperimentConfig& c) {
    if (const char* env = std::getenv("STNSEC_OUT"); env && *env) return env;
    return c.output_dir;
}

/// Provenance lines embedded at the top of every CSV.
inline std::vector<std::string> provenance(const ExperimentConfig& c, std::uint64_t seed) {
    return {std::string("artifact ") + kArtifactVersion, "config " + config_hash(c), "seed " + std::to_string(seed),
            "scenario " + c.scenario};
}

inline void write_comments(std::ostream& os, const std::vector<std::string>& lines) {
    for (const auto& l : lines) os << "# " << l << '\n';
}

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << text;
}

inline std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// ---- Fig. 3 --------------------------------------------------------------------

/// Closed form against Monte Carlo for SP and RTP over the configured power sweep of
/// both link families. Row order: satellite SP, satellite RTP, terrestrial SP,
/// terrestrial RTP, each over increasing power.
inline std::vector<CurveRow> run_fig3(const ExperimentConfig& c, std::uint64_t seed) {
    const LinkSet links = c.links();
    std::vector<CurveRow> rows;
    Rng root(seed);
    std::uint64_t stream = 0;
    for (const bool sat : {true, false}) {
        const auto& sweep = sat ? c.fig3.satellite_dbm : c.fig3.terrestrial_dbm;
        const std::string fam = sat ? "satellite" : "terrestrial";
        for (double dbm : sweep) {
            const double pd = dbm_to_watt(dbm);
            const double pa = pd * db_to_linear(c.fig3.adv_offset_db);
            const auto s = links.secrecy(sat, pd, pa, c.fig3.q);
            Rng r = root.split(stream++);
            const auto mc = mc_secrecy(s, c.fig3.trials, r);
            rows.push_back({fam + "-sp", dbm, secrecy_probability(s), mc.estimate, mc.std_error});
        }
        for (double dbm : sweep) {
            const auto p = links.reliability(sat, dbm_to_watt(dbm));
            Rng r = root.split(stream++);
            const auto mc = mc_reliability(p, c.fig3.trials, r);
            rows.push_back({fam + "-rtp", dbm, reliability_probability(p), mc.estimate, mc.std_error});
        }
    }
    return rows;
}

/// |theory - mc| <= max(3 sigma, floor).
inline bool fig3_row_ok(const CurveRow& r, double floor = 0.005) {
    return std::abs(r.theory - r.mc) <= std::max(3.0 * r.std_error, floor);
}

inline std::string fig3_csv(const ExperimentConfig& c, std::uint64_t seed, const std::vector<CurveRow>& rows) {
    std::ostringstream os;
    auto lines = provenance(c, seed);
    lines.push_back("parameter is the data transmit power in dBm; decoy power offset " + fmt(c.fig3.adv_offset_db) +
                    " dB; q " + std::to_string(c.fig3.q));
    write_curve_csv(os, rows, lines);
    return os.str();
}

// ---- pipeline ------------------------------------------------------------------

/// Derived seed for one component of one run; keeps stages independent of each other.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t component, std::uint64_t index = 0) {
    return splitmix64(splitmix64(seed ^ splitmix64(component)) + index);
}

enum SeedStream : std::uint64_t { kStage1 = 1, kCorpus, kStage2, kDecoys, kStage3, kDecode, kHopper, kEves, kEval };

/// Greedy joint actions for a whole episode from frozen value nets (forward passes
/// only; the environment is never asked to learn).
template <class Env>
std::vector<std::vector<int>> greedy_episode(const Env& env, const std::vector<Mlp>& nets, Rng& rng) {
    std::vector<std::vector<int>> out;
    auto s = env.reset(rng);
    for (;;) {
        std::vector<int> joint;
        for (int i = 0; i < env.decision_count(); ++i) {
            const Decision d = env.decision(s, std::span<const int>(joint), i);
            joint.push_back(masked_argmax(nets[static_cast<std::size_t>(d.type)].forward(d.obs), d.mask));
        }
        auto r = env.step(s, joint, rng);
        out.push_back(std::move(joint));
        if (r.terminal) break;
        s = std::move(r.next);
    }
    return out;
}

/// Stage I and Stage II artifacts. The reliability target only shifts the Stage-I
/// reward by a constant (the provisional RTP does not depend on the schedule), so a
/// reliability sweep reuses one front end per seed.
struct FrontEnd {
    ExperimentConfig cfg;
    std::uint64_t seed = 0;
    std::unique_ptr<ScheduleEnv> env;
    std::unique_ptr<QmixLearner<ScheduleEnv>> stage1;
    std::vector<CurvePoint> stage1_curve;
    std::vector<RewardParts> trace;                 // reward components of the greedy decode
    ResourcePlan schedule;                          // S and X, provisional powers, no decoys
    std::vector<std::vector<NodePattern>> corpus;   // per node
    std::vector<std::optional<GanModel>> gans;      // per node; empty for nodes without UEs
};

inline ResourcePlan decode_greedy(const FrontEnd& f, Rng& rng, std::vector<RewardParts>* parts = nullptr) {
    return decode_schedule(*f.env, [&](const ScheduleState& s) { return f.stage1->greedy(s); }, rng, parts);
}

/// `last_stage` 1 stops after the Stage-I decode and leaves `corpus` and `gans` empty.
inline std::shared_ptr<FrontEnd> train_front_end(const ExperimentConfig& cfg, std::uint64_t seed, int last_stage = 2) {
    auto f = std::make_shared<FrontEnd>();
    f->cfg = cfg;
    f->seed = seed;
    f->env = std::make_unique<ScheduleEnv>(cfg.schedule());
    TrainConfig t1 = cfg.stage1;
    t1.seed = derive_seed(seed, kStage1);
    f->stage1 = std::make_unique<QmixLearner<ScheduleEnv>>(*f->env, t1, "stage1");
    f->stage1_curve = f->stage1->train();

    Rng decode(derive_seed(seed, kDecode));
    f->schedule = decode_greedy(*f, decode, &f->trace);
    if (last_stage < 2) return f;

    // Exploring decodes of the trained policy form the Stage-II corpus.
    const auto& d = cfg.dims;
    f->corpus.resize(static_cast<std::size_t>(d.n_nodes()));
    Rng crng(derive_seed(seed, kCorpus));
    for (int i = 0; i < cfg.corpus_size; ++i) {
        const auto plan = decode_schedule(
            *f->env, [&](const ScheduleState& s) { return f->stage1->act(s, cfg.corpus_epsilon, crng); }, crng);
        for (int z = 0; z < d.n_nodes(); ++z) f->corpus[static_cast<std::size_t>(z)].push_back(plan.x[static_cast<std::size_t>(z)]);
    }
    f->gans.resize(static_cast<std::size_t>(d.n_nodes()));
    for (int z = 0; z < d.n_nodes(); ++z) {
        if (d.ues(z) == 0) continue;
        GanConfig g = cfg.stage2;
        g.seed = derive_seed(seed, kStage2, static_cast<std::uint64_t>(z));
        f->gans[static_cast<std::size_t>(z)] = train_stage2(f->corpus[static_cast<std::size_t>(z)], g);
    }
    return f;
}

struct Pipeline {
    std::shared_ptr<const FrontEnd> front;
    ExperimentConfig cfg;  // may differ from front->cfg in Stage-III settings
    std::uint64_t seed = 0;
    std::unique_ptr<PowerEnv> power_env;
    std::unique_ptr<QmixLearner<PowerEnv>> stage3;
    std::vector<CurvePoint> stage3_curve;

    std::vector<const GanModel*> generators() const {
        std::vector<const GanModel*> g;
        for (const auto& m : front->gans) g.push_back(m ? &*m : nullptr);
        return g;
    }

    PowerConfig power_config(ResourcePlan plan) const {
        PowerConfig p;
        p.plan = std::move(plan);
        p.links = cfg.links();
        p.eps_e = cfg.eps_e();
        p.eps_u = cfg.eps_u();
        p.d2 = cfg.weights.d2;
        p.levels = cfg.power_levels;
        p.require_decoy_power = cfg.require_decoy_power;
        return p;
    }

    /// S and X of a period: the cached decode, or a fresh one when a jammer makes
    /// sensing (and hence the schedule) period-dependent.
    ResourcePlan schedule_for(long period) const {
        if (cfg.jammer.kind == JammerConfig::Kind::none) return front->schedule;
        Rng r(derive_seed(seed, kDecode, static_cast<std::uint64_t>(period)));
        return decode_greedy(*front, r);
    }

    /// Online inference for one period: Stage-I forward passes, one generator call
    /// per node, Stage-III forward passes. No parameter is written.
    ResourcePlan plan_for(long period) const {
        Rng r(derive_seed(seed, kDecoys, static_cast<std::uint64_t>(period)));
        ResourcePlan p = sample_adversarial_plan(generators(), schedule_for(period), cfg.stage2.noise_dim, r);
        PowerEnv env(power_config(std::move(p)));
        Rng unused(0);
        return env.apply(greedy_episode(env, stage3->agents(), unused));
    }

    /// Stage-I output with provisional powers and no decoys.
    ResourcePlan stage1_plan(long period) const { return schedule_for(period); }

    std::uint64_t checksum() const {
        std::uint64_t h = splitmix64(front->stage1->checksum());
        h = splitmix64(h ^ stage3->checksum());
        for (const auto& g : front->gans)
            if (g) h = splitmix64(h ^ g->generator.checksum() ^ splitmix64(g->critic.checksum()));
        return h;
    }
};

/// Stage III on top of a trained front end, with `cfg` supplying targets and
/// power-stage settings.
inline std::unique_ptr<Pipeline> train_back_end(std::shared_ptr<const FrontEnd> front, const ExperimentConfig& cfg,
                                                std::uint64_t seed) {
    auto p = std::make_unique<Pipeline>();
    p->front = std::move(front);
    p->cfg = cfg;
    p->seed = seed;
    Rng r(derive_seed(seed, kDecoys, 0));
    ResourcePlan plan = sample_adversarial_plan(p->generators(), p->front->schedule, cfg.stage2.noise_dim, r);
    p->power_env = std::make_unique<PowerEnv>(p->power_config(std::move(plan)));
    TrainConfig t3 = cfg.stage3;
    t3.seed = derive_seed(seed, kStage3);
    p->stage3 = std::make_unique<QmixLearner<PowerEnv>>(*p->power_env, t3, "stage3");
    p->stage3_curve = p->stage3->train();
    return p;
}

/// Stage I, then Stage II, then Stage III.
inline std::unique_ptr<Pipeline> train_pipeline(const ExperimentConfig& cfg, std::uint64_t seed) {
    return train_back_end(train_front_end(cfg, seed), cfg, seed);
}

// ---- evaluation ----------------------------------------------------------------

enum class Method { pipeline, stage1_only, an_fh, greedy };

inline const char* to_string(Method m) {
    switch (m) {
        case Method::pipeline: return "pipeline";
        case Method::stage1_only: return "stage1-only";
        case Method::an_fh: return "an-fh";
        case Method::greedy: return "greedy";
    }
    return "?";
}

/// Sum of decoy/AN power over sum of all power in the plan.
inline double power_ratio(const ResourcePlan& p) {
    double a = 0.0, total = 0.0;
    for (std::size_t z = 0; z < p.pd.size(); ++z)
        for (std::size_t i = 0; i < p.pd[z].v.size(); ++i) {
            a += p.pa[z].v[i];
            total += p.pd[z].v[i] + p.pa[z].v[i];
        }
    return total > 0.0 ? a / total : 0.0;
}

/// Plans of one method for periods [0, n), computed once; later periods on demand.
inline PlanSource method_source(const Pipeline& p, Method m, long n) {
    const auto& c = p.cfg;
    std::function<ResourcePlan(long)> make;
    switch (m) {
        case Method::pipeline: make = [&p](long per) { return p.plan_for(per); }; break;
        case Method::stage1_only: make = [&p](long per) { return p.stage1_plan(per); }; break;
        case Method::an_fh: {
            const std::uint64_t seed = p.seed;
            make = [c, seed](long per) {
                auto h = make_hoppers(c.dims.total_ues(), c.logistic_r, c.dims.freq_slots,
                                      derive_seed(seed, kHopper, static_cast<std::uint64_t>(per)));
                return an_fh_plan(c.dims, std::move(h), c.an_fraction, c.pmax());
            };
            break;
        }
        case Method::greedy: {
            auto plan = std::make_shared<ResourcePlan>(greedy_plan(c.dims, c.pmax()));
            return [plan](long) { return *plan; };
        }
    }
    auto cache = std::make_shared<std::vector<ResourcePlan>>();
    for (long i = 0; i < n; ++i) cache->push_back(make(i));
    return [cache, make](long per) {
        if (per >= 0 && per < static_cast<long>(cache->size())) return (*cache)[static_cast<std::size_t>(per)];
        return make(per);
    };
}

struct MethodMetrics {
    Method method = Method::pipeline;
    double sp = 0.0;           // closed form, mean over UEs and evaluation periods
    double rtp = 0.0;
    double power_ratio = 0.0;
    bool sp_ok = true;         // every UE meets the security target in every period
    bool rtp_ok = true;
};

struct EveMetrics {
    Method method = Method::pipeline;
    EveKind eve = EveKind::energy;
    EmpiricalSp result;
    double closed_sp = 0.0;    // closed form over the same periods
};

struct EvaluationReport {
    std::vector<MethodMetrics> closed;
    std::vector<EveMetrics> empirical;
    std::uint64_t checksum_before = 0;
    std::uint64_t checksum_after = 0;
    bool parameters_unchanged() const { return checksum_before == checksum_after; }

    const MethodMetrics& closed_for(Method m) const {
        for (const auto& c : closed)
            if (c.method == m) return c;
        throw std::out_of_range("method not evaluated");
    }
    const EveMetrics& empirical_for(Method m, EveKind e) const {
        for (const auto& r : empirical)
            if (r.method == m && r.eve == e) return r;
        throw std::out_of_range("method/eve pair not evaluated");
    }
};

inline MethodMetrics closed_metrics(const PlanSource& src, Method m, long periods, const ExperimentConfig& c) {
    MethodMetrics out;
    out.method = m;
    const LinkSet links = c.links();
    double total = 0.0, a = 0.0;
    for (long per = 0; per < periods; ++per) {
        const auto plan = src(per);
        const auto rep = plan_objective(plan, links, c.eps_e(), c.eps_u());
        out.sp += rep.mean_sp() / static_cast<double>(periods);
        out.rtp += rep.mean_rtp() / static_cast<double>(periods);
        out.sp_ok = out.sp_ok && rep.all_sp_ok;
        out.rtp_ok = out.rtp_ok && rep.all_rtp_ok;
        for (std::size_t z = 0; z < plan.pd.size(); ++z)
            for (std::size_t i = 0; i < plan.pd[z].v.size(); ++i) {
                a += plan.pa[z].v[i];
                total += plan.pd[z].v[i] + plan.pa[z].v[i];
            }
    }
    out.power_ratio = total > 0.0 ? a / total : 0.0;
    return out;
}

struct EvaluationOptions {
    std::vector<Method> methods{Method::pipeline, Method::stage1_only, Method::an_fh, Method::greedy};
    std::vector<EveKind> eves{EveKind::energy, EveKind::classifier, EveKind::predictive};
    std::vector<Method> eve_methods{Method::pipeline, Method::an_fh, Method::greedy};  // methods attacked by eves
    long closed_periods = 0;  // 0 = the configured evaluation periods
};

/// Frozen-policy evaluation: closed forms per method, then each eve trained
/// against and run on each attacked method's plans.
inline EvaluationReport evaluate(const Pipeline& p, const EvaluationOptions& o = {}) {
    EvaluationReport r;
    r.checksum_before = p.checksum();
    const auto& c = p.cfg;
    const long periods = c.eval_periods;
    const long closed_n = o.closed_periods > 0 ? o.closed_periods : periods;
    const LinkSet links = c.links();
    std::map<Method, PlanSource> sources;
    for (Method m : o.methods) sources[m] = method_source(p, m, std::max(periods, closed_n));
    for (Method m : o.eve_methods)
        if (!sources.count(m)) sources[m] = method_source(p, m, periods);
    for (Method m : o.methods) r.closed.push_back(closed_metrics(sources[m], m, closed_n, c));
    for (Method m : o.eve_methods) {
        const auto& src = sources[m];
        const double closed_sp = closed_metrics(src, m, periods, c).sp;
        for (EveKind e : o.eves) {
            EveConfig ec = c.eve;
            ec.kind = e;
            const auto idx = static_cast<std::uint64_t>(m) * 8 + static_cast<std::uint64_t>(e);
            Rng train(derive_seed(p.seed, kEves, idx));
            Eavesdropper eve = make_eve(ec, src, links, c.dims.time_slots, c.dims.freq_slots, train);
            Rng run(derive_seed(p.seed, kEval, idx));
            r.empirical.push_back({m, e, empirical_sp(src, 0, periods, eve, links, run), closed_sp});
        }
    }
    r.checksum_after = p.checksum();
    return r;
}

/// CSV: method,eve,sp,sp_std_error,rtp,power_ratio,hit_rate,transmissions. Closed-form
/// rows carry eve "closed-form" and zero standard error.
inline std::string report_csv(const Pipeline& p, const EvaluationReport& r) {
    std::ostringstream os;
    auto lines = provenance(p.cfg, p.seed);
    lines.push_back(std::string("parameters unchanged during evaluation: ") + (r.parameters_unchanged() ? "yes" : "no"));
    write_comments(os, lines);
    os << "method,eve,sp,sp_std_error,rtp,power_ratio,hit_rate,transmissions\n";
    for (const auto& m : r.closed)
        os << to_string(m.method) << ",closed-form," << fmt(m.sp) << ",0," << fmt(m.rtp) << ',' << fmt(m.power_ratio)
           << ",,\n";
    for (const auto& e : r.empirical) {
        MethodMetrics cm;
        for (const auto& m : r.closed)
            if (m.method == e.method) cm = m;
        os << to_string(e.method) << ',' << to_string(e.eve) << ',' << fmt(e.result.sp.estimate) << ','
           << fmt(e.result.sp.std_error) << ',' << fmt(cm.rtp) << ',' << fmt(cm.power_ratio) << ','
           << fmt(e.result.hit_rate()) << ',' << e.result.transmissions << '\n';
    }
    return os.str();
}

// ---- persistence ---------------------------------------------------------------

inline std::string curve_csv(const ExperimentConfig& c, std::uint64_t seed, const std::vector<CurvePoint>& curve) {
    std::ostringstream os;
    write_comments(os, provenance(c, seed));
    os << "episode,loss,mean_reward,sp,rtp,epsilon\n";
    for (const auto& p : curve)
        os << p.episode << ',' << fmt(p.loss) << ',' << fmt(p.reward) << ',' << fmt(p.sp) << ',' << fmt(p.rtp) << ','
           << fmt(p.epsilon) << '\n';
    return os.str();
}

inline std::string gan_curve_csv(const ExperimentConfig& c, std::uint64_t seed, const std::vector<GanPoint>& curve) {
    std::ostringstream os;
    write_comments(os, provenance(c, seed));
    os << "iteration,critic_loss,generator_loss,wasserstein_gap,occupancy_loss\n";
    for (const auto& p : curve)
        os << p.iteration << ',' << fmt(p.critic_loss) << ',' << fmt(p.generator_loss) << ',' << fmt(p.wgap) << ','
           << fmt(p.occupancy) << '\n';
    return os.str();
}

/// Reward components of each step of an episode.
inline std::string trace_csv(const ExperimentConfig& c, std::uint64_t seed, const std::vector<RewardParts>& parts) {
    std::ostringstream os;
    write_comments(os, provenance(c, seed));
    os << "t,pe,pu,c1,c2,occ,coll,tier,reward\n";
    for (std::size_t t = 0; t < parts.size(); ++t) {
        const auto& p = parts[t];
        os << t << ',' << fmt(p.pe) << ',' << fmt(p.pu) << ',' << p.c1 << ',' << p.c2 << ',' << fmt(p.occ) << ','
           << fmt(p.coll) << ',' << fmt(p.tier) << ',' << fmt(p.reward) << '\n';
    }
    return os.str();
}

template <class Saver>
std::string to_bytes(Saver&& save) {
    std::ostringstream os(std::ios::binary);
    save(os);
    return os.str();
}

namespace detail {

inline void add_front_end(std::map<std::string, std::string>& files, const FrontEnd& f, const ExperimentConfig& c,
                          std::uint64_t seed) {
    files["config.json"] = to_json(c).dump(2) + "\n";
    files["stage1.ckpt"] = to_bytes([&](std::ostream& os) { f.stage1->save(os); });
    files["stage1_curve.csv"] = curve_csv(c, seed, f.stage1_curve);
    files["stage1_trace.csv"] = trace_csv(c, seed, f.trace);
    files["schedule.txt"] = plan_to_string(f.schedule);
    for (std::size_t z = 0; z < f.gans.size(); ++z) {
        if (!f.gans[z]) continue;
        const std::string n = "stage2_node" + std::to_string(z);
        files[n + "_generator.ckpt"] = to_bytes([&](std::ostream& os) { f.gans[z]->generator.save(os); });
        files[n + "_critic.ckpt"] = to_bytes([&](std::ostream& os) { f.gans[z]->critic.save(os); });
        files[n + "_curve.csv"] = gan_curve_csv(c, seed, f.gans[z]->curve);
    }
}

inline std::string hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::vector<std::string> write_with_manifest(std::map<std::string, std::string> files,
                                                    const std::filesystem::path& dir, const ExperimentConfig& c,
                                                    std::uint64_t seed, int last_stage, std::uint64_t checksum) {
    nlohmann::json m;
    m["artifact"] = kArtifactVersion;
    m["config_hash"] = config_hash(c);
    m["seed"] = seed;
    m["last_stage"] = last_stage;
    m["episodes"] = {{"stage1", c.stage1.episodes}, {"stage2", c.stage2.iterations}, {"stage3", c.stage3.episodes}};
    m["parameter_checksum"] = hex(checksum);
    for (const auto& [name, bytes] : files) m["files"][name] = hex(fnv1a(bytes));
    files["manifest.json"] = m.dump(2) + "\n";
    std::vector<std::string> names;
    for (const auto& [name, bytes] : files) {
        write_text(dir / name, bytes);
        names.push_back(name);
    }
    return names;
}

}  // namespace detail

/// Artifacts of Stage I (and Stage II when trained) without the power stage.
inline std::vector<std::string> save_front_end(const FrontEnd& f, const std::filesystem::path& dir) {
    std::map<std::string, std::string> files;
    detail::add_front_end(files, f, f.cfg, f.seed);
    std::uint64_t h = splitmix64(f.stage1->checksum());
    bool gans = false;
    for (const auto& g : f.gans)
        if (g) {
            gans = true;
            h = splitmix64(h ^ g->generator.checksum() ^ splitmix64(g->critic.checksum()));
        }
    return detail::write_with_manifest(std::move(files), dir, f.cfg, f.seed, gans ? 2 : 1, h);
}

/// Writes every artifact of a pipeline run under `dir` plus manifest.json listing
/// each file with its FNV-1a digest. Returns the written file names.
inline std::vector<std::string> save_pipeline(const Pipeline& p, const std::filesystem::path& dir,
                                              const EvaluationReport* report = nullptr) {
    std::map<std::string, std::string> files;
    const auto& c = p.cfg;
    detail::add_front_end(files, *p.front, c, p.seed);
    files["stage3.ckpt"] = to_bytes([&](std::ostream& os) { p.stage3->save(os); });
    files["stage3_curve.csv"] = curve_csv(c, p.seed, p.stage3_curve);
    files["plan_period0.txt"] = plan_to_string(p.plan_for(0));
    if (report) files["report.csv"] = report_csv(p, *report);
    return detail::write_with_manifest(std::move(files), dir, c, p.seed, 3, p.checksum());
}

/// Restores trained parameters from a directory written by save_pipeline. The
/// configuration and seed are checked against the manifest.
inline std::unique_ptr<Pipeline> load_pipeline(const std::filesystem::path& dir) {
    std::ifstream mf(dir / "manifest.json");
    if (!mf) throw FormatError("no manifest.json in " + dir.string());
    const auto m = nlohmann::json::parse(mf);
    std::ifstream cf(dir / "config.json");
    if (!cf) throw FormatError("no config.json in " + dir.string());
    ExperimentConfig c = parse_config(nlohmann::json::parse(cf));
    if (config_hash(c) != m.at("config_hash").get<std::string>()) throw FormatError("config hash does not match the manifest");
    const std::uint64_t seed = m.at("seed").get<std::uint64_t>();
    if (m.value("last_stage", 3) != 3) throw FormatError(dir.string() + " holds a partial run (train with --stage all)");
    auto open = [&](const std::string& name) {
        std::ifstream is(dir / name, std::ios::binary);
        if (!is) throw FormatError("missing checkpoint " + name);
        return is;
    };
    auto f = std::make_shared<FrontEnd>();
    f->cfg = c;
    f->seed = seed;
    f->env = std::make_unique<ScheduleEnv>(c.schedule());
    TrainConfig t1 = c.stage1;
    t1.seed = derive_seed(seed, kStage1);
    f->stage1 = std::make_unique<QmixLearner<ScheduleEnv>>(*f->env, t1, "stage1");
    {
        auto is = open("stage1.ckpt");
        f->stage1->load(is);
    }
    Rng decode(derive_seed(seed, kDecode));
    f->schedule = decode_greedy(*f, decode, &f->trace);
    f->gans.resize(static_cast<std::size_t>(c.dims.n_nodes()));
    for (int z = 0; z < c.dims.n_nodes(); ++z) {
        if (c.dims.ues(z) == 0) continue;
        const std::string n = "stage2_node" + std::to_string(z);
        GanModel g;
        g.shape = {c.dims.time_slots, c.dims.ues(z), c.dims.freq_slots};
        auto gi = open(n + "_generator.ckpt");
        g.generator = Mlp::load(gi);
        auto ci = open(n + "_critic.ckpt");
        g.critic = Mlp::load(ci);
        f->gans[static_cast<std::size_t>(z)] = std::move(g);
    }
    auto p = std::make_unique<Pipeline>();
    p->front = f;
    p->cfg = c;
    p->seed = seed;
    Rng r(derive_seed(seed, kDecoys, 0));
    p->power_env = std::make_unique<PowerEnv>(
        p->power_config(sample_adversarial_plan(p->generators(), f->schedule, c.stage2.noise_dim, r)));
    TrainConfig t3 = c.stage3;
    t3.seed = derive_seed(seed, kStage3);
    p->stage3 = std::make_unique<QmixLearner<PowerEnv>>(*p->power_env, t3, "stage3");
    auto is = open("stage3.ckpt");
    p->stage3->load(is);
    return p;
}

/// Human-readable summary of a checkpoint file (value-net bundle or single network).
inline std::string describe_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open " + path.string());
    char magic[8];
    if (!is.read(magic, 8)) throw FormatError("file too short for a checkpoint");
    std::ostringstream os;
    auto describe_net = [&os](const Mlp& m, const std::string& label) {
        os << label << ": " << m.param_count() << " parameters, layers";
        for (const auto& l : m.layers()) os << ' ' << l.in << "->" << l.out;
        char buf[40];
        std::snprintf(buf, sizeof buf, ", checksum %016llx\n", static_cast<unsigned long long>(m.checksum()));
        os << buf;
    };
    const std::string mg(magic, 8);
    if (mg == "STNMLP01") {
        is.seekg(0);
        describe_net(Mlp::load(is), "network");
    } else if (mg == "STNQMIX1") {
        std::uint32_t counts[2] = {0, 0};
        for (auto& cnt : counts)
            for (int i = 0; i < 4; ++i) {
                const int b = is.get();
                if (b == EOF) throw FormatError("truncated checkpoint");
                cnt |= static_cast<std::uint32_t>(b) << (8 * i);
            }
        os << "value-net bundle: " << counts[0] << " agent nets, " << counts[1] << " mixer nets\n";
        for (std::uint32_t i = 0; i < counts[0]; ++i) describe_net(Mlp::load(is), "agent " + std::to_string(i));
        for (std::uint32_t i = 0; i < counts[1]; ++i) describe_net(Mlp::load(is), "mixer " + std::to_string(i));
    } else {
        throw FormatError("unrecognised checkpoint magic");
    }
    return os.str();
}

// ---- trends --------------------------------------------------------------------

enum class TrendAxis { reliability, ue_count, eve_kind };

inline const char* to_string(TrendAxis a) {
    switch (a) {
        case TrendAxis::reliability: return "reliability";
        case TrendAxis::ue_count: return "ue_count";
        case TrendAxis::eve_kind: return "eve_kind";
    }
    return "?";
}

inline TrendAxis parse_axis(const std::string& s) {
    if (s == "reliability") return TrendAxis::reliability;
    if (s == "ue_count") return TrendAxis::ue_count;
    if (s == "eve_kind") return TrendAxis::eve_kind;
    throw ConfigError("unknown trend axis '" + s + "' (reliability, ue_count, eve_kind)");
}

/// Trained front ends keyed by (config hash, seed), shared between trend runs.
/// Front ends keyed by (config hash, seed). Safe to share between worker threads;
/// concurrent requests for the same key train it once.
class FrontEndCache {
public:
    std::shared_ptr<const FrontEnd> get(const ExperimentConfig& c, std::uint64_t seed) {
        const auto key = config_hash(c) + "/" + std::to_string(seed);
        std::promise<std::shared_ptr<const FrontEnd>> mine;
        std::shared_future<std::shared_ptr<const FrontEnd>> f;
        bool owner = false;
        {
            std::lock_guard<std::mutex> lock(mu_);
            auto it = cache_.find(key);
            if (it != cache_.end()) {
                f = it->second;
            } else {
                f = mine.get_future().share();
                cache_.emplace(key, f);
                owner = true;
            }
        }
        if (owner) {
            try {
                mine.set_value(train_front_end(c, seed));
            } catch (...) {
                mine.set_exception(std::current_exception());
            }
        }
        return f.get();
    }
    std::size_t size() const {
        std::lock_guard<std::mutex> lock(mu_);
        return cache_.size();
    }

private:
    mutable std::mutex mu_;
    std::map<std::string, std::shared_future<std::shared_ptr<const FrontEnd>>> cache_;
};

/// Runs job(i) for i in [0, n) on up to `workers` threads (0 = one per core). Jobs
/// write to their own slots, so results never depend on scheduling. The first
/// exception is rethrown after all threads finish.
template <class Job>
void parallel_for(std::size_t n, unsigned workers, Job&& job) {
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i; (i = next++) < n;) {
                try {
                    job(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(mu);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

struct TrendRow {
    double value = 0.0;  // axis value; eve kinds are indexed 0, 1, 2
    std::string method;
    std::string eve;     // "closed-form" or an eve kind
    std::uint64_t seed = 0;
    double sp = 0.0;
    double sp_std_error = 0.0;
    double rtp = 0.0;
    double power_ratio = 0.0;
};

struct TrendCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct TrendResult {
    TrendAxis axis = TrendAxis::reliability;
    std::vector<TrendRow> rows;
    std::vector<TrendCheck> checks;

    std::vector<double> values() const {
        std::vector<double> v;
        for (const auto& r : rows)
            if (std::find(v.begin(), v.end(), r.value) == v.end()) v.push_back(r.value);
        return v;
    }
    std::vector<const TrendRow*> select(double value, const std::string& method, const std::string& eve) const {
        std::vector<const TrendRow*> out;
        for (const auto& r : rows)
            if (r.value == value && r.method == method && r.eve == eve) out.push_back(&r);
        return out;
    }
    const TrendCheck* check(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }
};

inline double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

namespace detail {

inline void push_closed(TrendResult& t, double value, std::uint64_t seed, const EvaluationReport& r) {
    for (const auto& m : r.closed) t.rows.push_back({value, to_string(m.method), "closed-form", seed, m.sp, 0.0, m.rtp, m.power_ratio});
}

inline std::vector<double> field(const std::vector<const TrendRow*>& rows, double TrendRow::*f) {
    std::vector<double> v;
    for (const auto* r : rows) v.push_back(r->*f);
    return v;
}

// Median of a field along the axis for one method/eve.
inline std::vector<double> medians(const TrendResult& t, const std::string& method, const std::string& eve,
                                   double TrendRow::*f) {
    std::vector<double> m;
    for (double v : t.values()) m.push_back(median(field(t.select(v, method, eve), f)));
    return m;
}

inline std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt(v[i]);
    return s;
}

// Monotone check with a small absolute slack for ties between lattice optima.
inline TrendCheck monotone(const std::string& name, const std::vector<double>& v, bool increasing, double slack = 1e-9) {
    bool ok = true;
    for (std::size_t i = 1; i < v.size(); ++i) ok = ok && (increasing ? v[i] >= v[i - 1] - slack : v[i] <= v[i - 1] + slack);
    return {name, ok, join(v)};
}

// Per axis point, seeds where pipeline >= an-fh >= greedy on closed-form SP.
inline TrendCheck ordering(const TrendResult& t, const std::vector<std::string>& methods, double min_share,
                           const std::string& name) {
    bool ok = true;
    std::string detail;
    for (double v : t.values()) {
        std::map<std::uint64_t, std::vector<double>> by_seed;
        for (const auto& m : methods)
            for (const auto* r : t.select(v, m, "closed-form")) by_seed[r->seed].push_back(r->sp);
        int good = 0, n = 0;
        for (const auto& [seed, sps] : by_seed) {
            if (sps.size() != methods.size()) continue;
            ++n;
            bool o = true;
            for (std::size_t i = 1; i < sps.size(); ++i) o = o && sps[i - 1] >= sps[i];
            good += o;
        }
        const bool pass = n > 0 && good >= min_share * n - 1e-9;
        ok = ok && pass;
        detail += (detail.empty() ? "" : "; ") + fmt(v) + ": " + std::to_string(good) + "/" + std::to_string(n);
    }
    return {name, ok, detail};
}

}  // namespace detail

/// Sweeps one axis over every configured seed and evaluates the directional checks.
///  reliability: front end once per seed, Stage III per target; closed-form SP.
///  ue_count:    full pipeline per UE count; closed-form SP and power ratio.
///  eve_kind:    one pipeline per seed against each eve; empirical SP.
/// `seen` is called on every trained pipeline before it is discarded (serialized
/// across workers). Seeds and sweep points run on `workers` threads (0 = one per core);
/// rows are merged in sweep-then-seed order regardless.
inline TrendResult run_trend(const ExperimentConfig& cfg, TrendAxis axis, FrontEndCache* cache = nullptr,
                             const std::function<void(const Pipeline&)>& seen = {}, unsigned workers = 0) {
    FrontEndCache local;
    FrontEndCache& fc = cache ? *cache : local;
    std::mutex seen_mu;
    auto observe = [&](const Pipeline& p) {
        if (!seen) return;
        std::lock_guard<std::mutex> lock(seen_mu);
        seen(p);
    };
    TrendResult t;
    t.axis = axis;
    const std::vector<std::string> order{"pipeline", "an-fh", "greedy"};
    EvaluationOptions closed_only;
    closed_only.methods = {Method::pipeline, Method::stage1_only, Method::an_fh, Method::greedy};
    closed_only.eve_methods.clear();
    closed_only.eves.clear();
    const auto& seeds = cfg.seeds;
    auto merge = [&](const std::vector<TrendResult>& parts) {
        for (const auto& part : parts) t.rows.insert(t.rows.end(), part.rows.begin(), part.rows.end());
    };
    switch (axis) {
        case TrendAxis::reliability: {
            // One front end per seed serves every target; the rows stay in target-major order.
            const auto& sweep = cfg.reliability_sweep;
            std::vector<TrendResult> parts(sweep.size() * seeds.size());
            parallel_for(seeds.size(), workers, [&](std::size_t s) {
                auto front = fc.get(cfg, seeds[s]);
                for (std::size_t r = 0; r < sweep.size(); ++r) {
                    ExperimentConfig c = cfg;
                    c.reliability = sweep[r];
                    auto p = train_back_end(front, c, seeds[s]);
                    observe(*p);
                    detail::push_closed(parts[r * seeds.size() + s], sweep[r], seeds[s], evaluate(*p, closed_only));
                }
            });
            merge(parts);
            t.checks.push_back(detail::monotone("pipeline-sp-nonincreasing",
                                                detail::medians(t, "pipeline", "closed-form", &TrendRow::sp), false));
            t.checks.push_back(detail::ordering(t, order, 0.8, "pipeline>=an-fh>=greedy"));
            break;
        }
        case TrendAxis::ue_count: {
            const auto& sweep = cfg.ue_sweep;
            std::vector<TrendResult> parts(sweep.size() * seeds.size());
            parallel_for(parts.size(), workers, [&](std::size_t i) {
                const int k = sweep[i / seeds.size()];
                const auto seed = seeds[i % seeds.size()];
                const ExperimentConfig c = cfg.with_ues(k);
                auto p = train_back_end(fc.get(c, seed), c, seed);
                observe(*p);
                detail::push_closed(parts[i], k, seed, evaluate(*p, closed_only));
            });
            merge(parts);
            t.checks.push_back(detail::monotone("pipeline-sp-nonincreasing",
                                                detail::medians(t, "pipeline", "closed-form", &TrendRow::sp), false));
            t.checks.push_back(detail::monotone("pipeline-power-ratio-nondecreasing",
                                                detail::medians(t, "pipeline", "closed-form", &TrendRow::power_ratio), true));
            break;
        }
        case TrendAxis::eve_kind: {
            EvaluationOptions o;
            o.eve_methods = {Method::pipeline};
            std::vector<TrendResult> parts(seeds.size());
            std::vector<std::array<double, 3>> energy(seeds.size());  // empirical, closed, variance
            parallel_for(seeds.size(), workers, [&](std::size_t s) {
                auto p = train_back_end(fc.get(cfg, seeds[s]), cfg, seeds[s]);
                observe(*p);
                const auto r = evaluate(*p, o);
                auto& part = parts[s];
                detail::push_closed(part, -1.0, seeds[s], r);
                for (const auto& e : r.empirical) {
                    part.rows.push_back({static_cast<double>(e.eve), to_string(e.method), to_string(e.eve), seeds[s],
                                         e.result.sp.estimate, e.result.sp.std_error, r.closed_for(e.method).rtp,
                                         r.closed_for(e.method).power_ratio});
                    if (e.eve == EveKind::energy)
                        energy[s] = {e.result.sp.estimate, e.closed_sp, e.result.sp.std_error * e.result.sp.std_error};
                }
            });
            merge(parts);
            std::vector<double> by_eve;
            for (EveKind e : {EveKind::energy, EveKind::classifier, EveKind::predictive})
                by_eve.push_back(median(detail::field(t.select(static_cast<double>(e), "pipeline", to_string(e)), &TrendRow::sp)));
            t.checks.push_back(detail::monotone("energy>=classifier>=predictive", by_eve, false, 0.0));
            // Pooled over seeds: equal transmissions per seed, so plain means.
            double de = 0.0, dc = 0.0, vv = 0.0;
            const double n = static_cast<double>(energy.size());
            for (const auto& [emp, closed, var] : energy) {
                de += emp / n;
                dc += closed / n;
                vv += var / (n * n);
            }
            const double sigma = std::sqrt(vv);
            t.checks.push_back({"energy-matches-closed-form", std::abs(de - dc) <= 3.0 * sigma,
                                "empirical " + fmt(de) + " closed " + fmt(dc) + " sigma " + fmt(sigma)});
            std::vector<double> conv;
            for (const char* m : {"pipeline", "stage1-only", "greedy"})
                conv.push_back(median(detail::field(t.select(-1.0, m, "closed-form"), &TrendRow::sp)));
            t.checks.push_back(detail::monotone("pipeline>=stage1-only>=greedy", conv, false, 0.0));
            break;
        }
    }
    return t;
}

inline std::string trend_csv(const ExperimentConfig& c, const TrendResult& t) {
    std::ostringstream os;
    auto lines = provenance(c, c.seeds.front());
    lines.push_back("axis " + std::string(to_string(t.axis)) + "; eve_kind rows use value = eve index, closed-form rows value -1");
    write_comments(os, lines);
    os << "axis,value,method,eve,seed,sp,sp_std_error,rtp,power_ratio\n";
    for (const auto& r : t.rows)
        os << to_string(t.axis) << ',' << fmt(r.value) << ',' << r.method << ',' << r.eve << ',' << r.seed << ','
           << fmt(r.sp) << ',' << fmt(r.sp_std_error) << ',' << fmt(r.rtp) << ',' << fmt(r.power_ratio) << '\n';
    return os.str();
}

/// Medians with per-seed spread, then the directional checks.
inline std::string trend_summary_csv(const ExperimentConfig& c, const TrendResult& t) {
    std::ostringstream os;
    write_comments(os, provenance(c, c.seeds.front()));
    os << "axis,value,method,eve,seeds,sp_median,sp_min,sp_max,rtp_median,power_ratio_median\n";
    std::vector<std::pair<std::string, std::string>> keys;
    for (const auto& r : t.rows)
        if (std::find(keys.begin(), keys.end(), std::make_pair(r.method, r.eve)) == keys.end()) keys.emplace_back(r.method, r.eve);
    for (double v : t.values())
        for (const auto& [m, e] : keys) {
            const auto sel = t.select(v, m, e);
            if (sel.empty()) continue;
            const auto sp = detail::field(sel, &TrendRow::sp);
            os << to_string(t.axis) << ',' << fmt(v) << ',' << m << ',' << e << ',' << sel.size() << ','
               << fmt(median(sp)) << ',' << fmt(*std::min_element(sp.begin(), sp.end())) << ','
               << fmt(*std::max_element(sp.begin(), sp.end())) << ',' << fmt(median(detail::field(sel, &TrendRow::rtp)))
               << ',' << fmt(median(detail::field(sel, &TrendRow::power_ratio))) << '\n';
        }
    return os.str();
}

inline std::string trend_checks_csv(const ExperimentConfig& c, const TrendResult& t) {
    std::ostringstream os;
    write_comments(os, provenance(c, c.seeds.front()));
    os << "check,passed,detail\n";
    for (const auto& k : t.checks) os << k.name << ',' << (k.passed ? "yes" : "no") << ",\"" << k.detail << "\"\n";
    return os.str();
}

}  // namespace stnsec

#endif  // STNSEC_HARNESS_HPP
