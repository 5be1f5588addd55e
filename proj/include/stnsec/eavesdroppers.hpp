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

#ifndef STNSEC_EAVESDROPPERS_HPP
#define STNSEC_EAVESDROPPERS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "stnsec/channel.hpp"
#include "stnsec/error.hpp"
#include "stnsec/grid.hpp"
#include "stnsec/marl.hpp"
#include "stnsec/metrics.hpp"
#include "stnsec/nn.hpp"
#include "stnsec/rng.hpp"

namespace stnsec {

/// Plan used in a given period. Must be deterministic in the period index.
using PlanSource = std::function<ResourcePlan(long period)>;

enum class EveKind { energy, classifier, predictive };

inline const char* to_string(EveKind k) {
    switch (k) {
        case EveKind::energy: return "energy";
        case EveKind::classifier: return "classifier";
        case EveKind::predictive: return "predictive";
    }
    return "?";
}

struct EveConfig {
    EveKind kind = EveKind::energy;
    int monitored = 4;        // slots listened to per time step
    int window = 3;           // periods of sensing history
    int warmup_periods = 30;  // labeled periods for the classifier
    double svm_lambda = 1e-2;
    int svm_epochs = 30;
    int episode_periods = 4;  // predictive training episode length
    TrainConfig dqn = [] {
        TrainConfig c;
        c.discount = 0.5;
        c.hidden = {32};
        c.mixer = MixerKind::sum;
        c.optimizer = OptimizerKind::adam;
        c.learning_rate = 1e-3;
        c.episodes = 150;
        c.warmup = 64;
        c.target_sync = 100;
        return c;
    }();

    void check(int q) const {
        if (monitored < 0 || monitored > q) throw DomainError("monitored slots must lie in [0, q]");
        if (kind != EveKind::energy && window < 1) throw DomainError("learning eavesdroppers need a history window");
    }
};

/// Sliding window of sensed busy maps (L x q), one per past period.
class OccupancyHistory {
public:
    OccupancyHistory() = default;
    OccupancyHistory(int window, int L, int q) : window_(window), L_(L), q_(q) {}

    void push(Grid2<std::uint8_t> busy) {
        if (busy.rows != L_ || busy.cols != q_) throw ShapeError("busy map shape mismatch");
        periods_.push_back(std::move(busy));
        while (static_cast<int>(periods_.size()) > window_) periods_.pop_front();
    }
    /// Fraction of remembered periods with slot f busy at time t.
    double freq(int t, int f) const {
        if (periods_.empty()) return 0.0;
        double n = 0.0;
        for (const auto& p : periods_) n += p(t, f);
        return n / static_cast<double>(periods_.size());
    }
    std::size_t size() const { return periods_.size(); }

private:
    int window_ = 1, L_ = 0, q_ = 0;
    std::deque<Grid2<std::uint8_t>> periods_;
};

/// Linear max-margin classifier trained by hinge-loss subgradient steps.
struct LinearSvm {
    std::vector<double> w;
    double b = 0.0;
    std::vector<double> mean, scale;  // feature standardization
    int constant = 0;                 // +1 / -1 when the training data had one class

    double score(const std::vector<double>& x) const {
        if (constant) return constant;
        double s = b;
        for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * (x[i] - mean[i]) / scale[i];
        return s;
    }
    int predict(const std::vector<double>& x) const { return score(x) >= 0.0 ? 1 : -1; }

    static LinearSvm train(const std::vector<std::vector<double>>& x, const std::vector<int>& y, double lambda,
                           int epochs, Rng& rng) {
        if (x.size() != y.size() || x.empty()) throw ShapeError("classifier needs matched nonempty data");
        LinearSvm m;
        const int pos = static_cast<int>(std::count(y.begin(), y.end(), 1));
        if (pos == 0 || pos == static_cast<int>(y.size())) {
            m.constant = pos ? 1 : -1;
            return m;
        }
        const std::size_t d = x[0].size();
        m.w.assign(d, 0.0);
        m.mean.assign(d, 0.0);
        m.scale.assign(d, 0.0);
        for (const auto& r : x)
            for (std::size_t j = 0; j < d; ++j) m.mean[j] += r[j] / x.size();
        for (const auto& r : x)
            for (std::size_t j = 0; j < d; ++j) m.scale[j] += (r[j] - m.mean[j]) * (r[j] - m.mean[j]) / x.size();
        for (auto& s : m.scale) s = s > 0.0 ? std::sqrt(s) : 1.0;
        long step = 0;
        const long total = static_cast<long>(epochs) * static_cast<long>(x.size());
        for (long it = 0; it < total; ++it) {
            const std::size_t i = rng.below(x.size());
            const double eta = 1.0 / (lambda * static_cast<double>(++step + 10));
            const double margin = y[i] * m.score(x[i]);
            for (auto& v : m.w) v *= 1.0 - eta * lambda;
            if (margin < 1.0) {
                for (std::size_t j = 0; j < d; ++j) m.w[j] += eta * y[i] * (x[i][j] - m.mean[j]) / m.scale[j];
                m.b += eta * y[i];
            }
        }
        return m;
    }
};

struct TxDraw {
    int node = 0;
    int ue = 0;
    int slot = 0;
    TxKind kind = TxKind::data;
    double snr = 0.0;  // received power over noise at the eavesdropper
};

/// One time step as seen by the eavesdropper: per-slot received SNR, plus the
/// ground truth that only the simulator may read.
struct StepSensing {
    std::vector<double> snr;
    std::vector<TxDraw> truth;
};

inline StepSensing sense_step(const ResourcePlan& p, const LinkSet& links, int t, Rng& rng) {
    const auto& d = p.dims;
    StepSensing s;
    s.snr.assign(static_cast<std::size_t>(d.freq_slots), 0.0);
    for (int z = 0; z < d.n_nodes(); ++z) {
        const auto zi = static_cast<std::size_t>(z);
        const auto& link = links.eve_link(d.is_satellite(z));
        for (int k = 0; k < d.ues(z); ++k) {
            const int fd = p.x[zi].slot_of(t, k);
            const int fa = p.a[zi].slot_of(t, k);
            if (fd >= 0) {
                const double g = draw_power_gain(link, rng);
                // Power on p_a without a decoy slot is noise superposed on the data.
                const double an = fa < 0 ? p.pa[zi](t, k) * g : 0.0;
                const double snr = p.pd[zi](t, k) * g / (link.noise_watt + an);
                s.truth.push_back({z, k, fd, TxKind::data, snr});
                s.snr[static_cast<std::size_t>(fd)] += (p.pd[zi](t, k) * g + an) / link.noise_watt;
            }
            if (fa >= 0) {
                const double snr = p.pa[zi](t, k) * draw_power_gain(link, rng) / link.noise_watt;
                s.truth.push_back({z, k, fa, TxKind::adversarial, snr});
                s.snr[static_cast<std::size_t>(fa)] += snr;
            }
        }
    }
    return s;
}

/// Listening strategy. Sees only sensed energies, the time index and its own history.
class Eavesdropper {
public:
    Eavesdropper(EveConfig cfg, int L, int q, double tau_e)
        : cfg_(std::move(cfg)), L_(L), q_(q), tau_(tau_e), history_(std::max(1, cfg_.window), L, q) {
        cfg_.check(q);
    }

    const EveConfig& config() const { return cfg_; }
    EveKind kind() const { return cfg_.kind; }
    const OccupancyHistory& history() const { return history_; }
    void set_classifier(LinearSvm m) { svm_ = std::move(m); }
    void set_policy(Mlp net) { policy_ = std::move(net); }
    bool trained() const { return cfg_.kind == EveKind::energy || (cfg_.kind == EveKind::classifier ? svm_.has_value() : policy_.has_value()); }

    std::vector<double> features(int t, int f, const std::vector<double>& snr) const {
        return {std::log10(1.0 + snr[static_cast<std::size_t>(f)]), history_.freq(t, f)};
    }

    std::vector<double> predictive_obs(int t) const {
        std::vector<double> o(static_cast<std::size_t>(L_ + q_), 0.0);
        o[static_cast<std::size_t>(t)] = 1.0;
        for (int f = 0; f < q_; ++f) o[static_cast<std::size_t>(L_ + f)] = history_.freq(t, f);
        return o;
    }

    /// Slots monitored at time t.
    std::vector<int> choose(int t, const std::vector<double>& snr, Rng& rng) const {
        const int E = cfg_.monitored;
        if (E == 0) return {};
        switch (cfg_.kind) {
            case EveKind::energy: return random_slots(E, rng);
            case EveKind::classifier: {
                if (!svm_) throw TrainingError("classifier-eve", "classifier not trained");
                const auto pool = random_slots(std::min(q_, 2 * E), rng);
                std::vector<double> score(pool.size());
                for (std::size_t i = 0; i < pool.size(); ++i) score[i] = svm_->score(features(t, pool[i], snr));
                auto order = top(score, E);
                for (auto& o : order) o = pool[static_cast<std::size_t>(o)];
                std::sort(order.begin(), order.end());
                return order;
            }
            case EveKind::predictive: {
                if (!policy_) throw TrainingError("predictive-eve", "policy not trained");
                auto order = top(policy_->forward(predictive_obs(t)), E);
                std::sort(order.begin(), order.end());
                return order;
            }
        }
        return {};
    }

    void observe_period(Grid2<std::uint8_t> busy) { history_.push(std::move(busy)); }

    // Indices of the n largest scores; ties go to the lower index.
    static std::vector<int> top(const std::vector<double>& score, int n) {
        std::vector<int> idx(score.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return score[a] > score[b]; });
        idx.resize(static_cast<std::size_t>(std::min<int>(n, static_cast<int>(idx.size()))));
        return idx;
    }

private:
    EveConfig cfg_;
    int L_, q_;
    double tau_;
    OccupancyHistory history_;
    std::optional<LinearSvm> svm_;
    std::optional<Mlp> policy_;

    std::vector<int> random_slots(int n, Rng& rng) const {
        std::vector<int> all(static_cast<std::size_t>(q_));
        std::iota(all.begin(), all.end(), 0);
        for (int i = 0; i < n; ++i) std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(i) + rng.below(static_cast<std::uint64_t>(q_ - i))]);
        all.resize(static_cast<std::size_t>(n));
        std::sort(all.begin(), all.end());
        return all;
    }
};

struct InterceptRecord {
    long period = 0;
    int t = 0;
    int slot = 0;
    bool h1 = false;       // a data signal occupies the slot
    bool decision = false; // energy above the detection threshold
    bool correct = false;  // H1 and the data SINR reaches tau_e
};

inline void write_intercept_csv(std::ostream& os, const std::vector<InterceptRecord>& log) {
    os << "period,t,slot,hypothesis,decision,correct\n";
    for (const auto& r : log)
        os << r.period << ',' << r.t << ',' << r.slot << ',' << (r.h1 ? "H1" : "H0") << ',' << int(r.decision) << ','
           << int(r.correct) << '\n';
}

struct EmpiricalSp {
    McEstimate sp;
    long transmissions = 0;
    long hits = 0;  // data transmissions whose slot was monitored
    double hit_rate() const { return transmissions ? static_cast<double>(hits) / transmissions : 0.0; }
};

/// Secrecy of one data transmission against a monitored set: when its slot is
/// monitored the eve intercepts at SINR >= tau_e; otherwise it is misled only if
/// the UE's decoy reaches tau_e. Listening to nothing intercepts nothing.
inline bool transmission_secret(const TxDraw& data, const TxDraw* decoy, const std::vector<int>& monitored, double tau) {
    if (monitored.empty()) return true;
    if (std::binary_search(monitored.begin(), monitored.end(), data.slot)) return data.snr < tau;
    return decoy && decoy->snr >= tau;
}

/// Runs the eve against `periods` consecutive plans and counts secret data transmissions.
inline EmpiricalSp empirical_sp(const PlanSource& source, long first_period, long periods, Eavesdropper& eve,
                                const LinkSet& links, Rng& rng, std::vector<InterceptRecord>* log = nullptr) {
    const double tau = links.tau_e;
    long secret = 0;
    EmpiricalSp out;
    for (long pi = first_period; pi < first_period + periods; ++pi) {
        const ResourcePlan plan = source(pi);
        const auto& d = plan.dims;
        Grid2<std::uint8_t> busy(d.time_slots, d.freq_slots, 0);
        for (int t = 0; t < d.time_slots; ++t) {
            const auto s = sense_step(plan, links, t, rng);
            const auto monitored = eve.choose(t, s.snr, rng);
            for (const auto& tx : s.truth) {
                if (tx.kind != TxKind::data) continue;
                const TxDraw* decoy = nullptr;
                for (const auto& o : s.truth)
                    if (o.kind == TxKind::adversarial && o.node == tx.node && o.ue == tx.ue) decoy = &o;
                ++out.transmissions;
                out.hits += std::binary_search(monitored.begin(), monitored.end(), tx.slot);
                secret += transmission_secret(tx, decoy, monitored, tau);
            }
            if (log)
                for (int f : monitored) {
                    InterceptRecord r{pi, t, f, false, s.snr[static_cast<std::size_t>(f)] >= tau, false};
                    for (const auto& tx : s.truth)
                        if (tx.kind == TxKind::data && tx.slot == f) {
                            r.h1 = true;
                            r.correct = r.correct || tx.snr >= tau;
                        }
                    log->push_back(r);
                }
            for (int f = 0; f < d.freq_slots; ++f) busy(t, f) = s.snr[static_cast<std::size_t>(f)] >= tau;
        }
        eve.observe_period(std::move(busy));
    }
    const double n = static_cast<double>(std::max(1L, out.transmissions));
    const double p = out.transmissions ? secret / n : 1.0;
    out.sp = {p, std::sqrt(p * (1.0 - p) / n), out.transmissions};
    return out;
}

/// Warm-up with ground-truth labels (data present or not) on every slot, then a
/// linear classifier over (log energy, remembered busy frequency).
inline void train_classifier(Eavesdropper& eve, const PlanSource& source, long first_period, const LinkSet& links,
                             Rng& rng) {
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    const int periods = eve.config().warmup_periods;
    for (long pi = first_period; pi < first_period + periods; ++pi) {
        const ResourcePlan plan = source(pi);
        const auto& d = plan.dims;
        Grid2<std::uint8_t> busy(d.time_slots, d.freq_slots, 0);
        for (int t = 0; t < d.time_slots; ++t) {
            const auto s = sense_step(plan, links, t, rng);
            for (int f = 0; f < d.freq_slots; ++f) {
                bool data = false;
                for (const auto& tx : s.truth) data = data || (tx.kind == TxKind::data && tx.slot == f);
                x.push_back(eve.features(t, f, s.snr));
                y.push_back(data ? 1 : -1);
                busy(t, f) = s.snr[static_cast<std::size_t>(f)] >= links.tau_e;
            }
        }
        eve.observe_period(std::move(busy));
    }
    eve.set_classifier(LinearSvm::train(x, y, eve.config().svm_lambda, eve.config().svm_epochs, rng));
}

struct EveEnvState {
    long period = 0;
    long last_period = 0;
    int t = 0;
    OccupancyHistory history;
    Grid2<std::uint8_t> busy;
};

/// Single-agent environment for the predictive eve: pick one slot per step, paid
/// one per intercepted data transmission.
class EveEnv {
public:
    using State = EveEnvState;

    EveEnv(PlanSource source, LinkSet links, int L, int q, int window, int episode_periods, long period_span = 1000000)
        : source_(std::move(source)), links_(std::move(links)), L_(L), q_(q), window_(window),
          episode_periods_(episode_periods), span_(period_span) {}

    int agent_types() const { return 1; }
    int decision_count() const { return 1; }
    int obs_width(int) const { return L_ + q_; }
    int action_count(int) const { return q_; }
    int state_width() const { return L_ + q_; }

    State reset(Rng& rng) const {
        State s;
        s.period = static_cast<long>(rng.below(static_cast<std::uint64_t>(span_)));
        s.last_period = s.period + episode_periods_ - 1;
        s.history = OccupancyHistory(window_, L_, q_);
        s.busy = Grid2<std::uint8_t>(L_, q_, 0);
        return s;
    }

    std::vector<double> obs(const State& s) const {
        std::vector<double> o(static_cast<std::size_t>(L_ + q_), 0.0);
        o[static_cast<std::size_t>(s.t)] = 1.0;
        for (int f = 0; f < q_; ++f) o[static_cast<std::size_t>(L_ + f)] = s.history.freq(s.t, f);
        return o;
    }

    Decision decision(const State& s, std::span<const int>, int) const {
        return {0, obs(s), std::vector<std::uint8_t>(static_cast<std::size_t>(q_), 1)};
    }
    std::vector<double> global_features(const State& s) const { return obs(s); }

    StepResult<State> step(const State& s, const std::vector<int>& joint, Rng& rng) const {
        const ResourcePlan& plan = plan_for(s.period);
        const auto sense = sense_step(plan, links_, s.t, rng);
        StepResult<State> r;
        for (const auto& tx : sense.truth)
            if (tx.kind == TxKind::data && tx.slot == joint[0] && tx.snr >= links_.tau_e) r.reward += 1.0;
        r.next = s;
        for (int f = 0; f < q_; ++f) r.next.busy(s.t, f) = sense.snr[static_cast<std::size_t>(f)] >= links_.tau_e;
        if (++r.next.t == L_) {
            r.next.history.push(r.next.busy);
            r.next.busy = Grid2<std::uint8_t>(L_, q_, 0);
            r.next.t = 0;
            ++r.next.period;
        }
        r.terminal = r.next.period > s.last_period;
        return r;
    }

private:
    PlanSource source_;
    LinkSet links_;
    int L_, q_, window_, episode_periods_;
    long span_;
    mutable long cached_period_ = -1;
    mutable ResourcePlan cached_;

    const ResourcePlan& plan_for(long period) const {
        if (period != cached_period_) {
            cached_ = source_(period);
            cached_period_ = period;
        }
        return cached_;
    }
};

/// Trains the predictive eve's slot-value network against the plan source.
inline void train_predictive(Eavesdropper& eve, const PlanSource& source, const LinkSet& links, int L, int q,
                             std::uint64_t seed) {
    EveEnv env(source, links, L, q, eve.config().window, eve.config().episode_periods);
    TrainConfig cfg = eve.config().dqn;
    cfg.seed = seed;
    QmixLearner<EveEnv> learner(env, cfg, "predictive-eve");
    learner.train();
    eve.set_policy(learner.agents()[0]);
}

/// Builds and trains an eve of the configured kind.
inline Eavesdropper make_eve(const EveConfig& cfg, const PlanSource& source, const LinkSet& links, int L, int q,
                             Rng& rng) {
    Eavesdropper eve(cfg, L, q, links.tau_e);
    if (cfg.kind == EveKind::classifier) train_classifier(eve, source, 1000000, links, rng);
    if (cfg.kind == EveKind::predictive) train_predictive(eve, source, links, L, q, rng());
    return eve;
}

}  // namespace stnsec

#endif  // STNSEC_EAVESDROPPERS_HPP
