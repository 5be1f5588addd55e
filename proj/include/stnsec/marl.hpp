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

#ifndef STNSEC_MARL_HPP
#define STNSEC_MARL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "stnsec/error.hpp"
#include "stnsec/nn.hpp"
#include "stnsec/rng.hpp"

namespace stnsec {

/// Index of the largest masked value; ties go to the lowest index.
inline int masked_argmax(const std::vector<double>& q, const std::vector<std::uint8_t>& mask) {
    if (q.size() != mask.size()) throw ShapeError("q-values and mask differ in length");
    int best = -1;
    for (std::size_t i = 0; i < q.size(); ++i)
        if (mask[i] && (best < 0 || q[i] > q[static_cast<std::size_t>(best)])) best = static_cast<int>(i);
    if (best < 0) throw ActionError("no feasible action");
    return best;
}

enum class MixerKind { qmix, sum };

/// State-conditioned monotone mixer. In qmix mode
///   Q_tot = |W2(s)|^T elu(|W1(s)|^T q + b1(s)) + b2(s),
/// with hypernetworks W1, b1, W2 (linear) and b2 (one hidden layer). In sum mode
/// Q_tot is the plain sum of the agent values.
class Mixer {
public:
    struct Tape {
        std::vector<double> q;
        stnsec::Tape w1, b1, w2, b2;
        std::vector<double> w1_raw, w2_raw, z, h;
    };

    Mixer() = default;
    Mixer(MixerKind kind, int agents, int state_width, int embed, Rng& rng)
        : kind_(kind), agents_(agents), state_width_(state_width), embed_(embed) {
        if (agents < 1) throw ShapeError("mixer needs at least one agent");
        if (kind == MixerKind::sum) return;
        if (state_width < 1 || embed < 1) throw ShapeError("mixer needs positive state width and embedding");
        w1_ = Mlp({state_width, agents * embed}, {Activation::identity}, rng);
        b1_ = Mlp({state_width, embed}, {Activation::identity}, rng);
        w2_ = Mlp({state_width, embed}, {Activation::identity}, rng);
        b2_ = Mlp({state_width, embed, 1}, {Activation::relu, Activation::identity}, rng);
    }

    MixerKind kind() const { return kind_; }
    int agents() const { return agents_; }
    int state_width() const { return state_width_; }

    std::vector<Mlp*> nets() {
        if (kind_ == MixerKind::sum) return {};
        return {&w1_, &b1_, &w2_, &b2_};
    }
    std::vector<const Mlp*> nets() const {
        if (kind_ == MixerKind::sum) return {};
        return {&w1_, &b1_, &w2_, &b2_};
    }

    double forward(const std::vector<double>& q, const std::vector<double>& s, Tape* tape = nullptr) const {
        if (static_cast<int>(q.size()) != agents_) throw ShapeError("mixer expects one value per agent");
        if (kind_ == MixerKind::sum) {
            if (tape) tape->q = q;
            double t = 0.0;
            for (double v : q) t += v;
            return t;
        }
        if (static_cast<int>(s.size()) != state_width_) throw ShapeError("mixer state width mismatch");
        Tape local;
        Tape& t = tape ? *tape : local;
        t.q = q;
        t.w1_raw = w1_.forward(s, t.w1);
        const auto b1 = b1_.forward(s, t.b1);
        t.w2_raw = w2_.forward(s, t.w2);
        const double b2 = b2_.forward(s, t.b2)[0];
        t.z.assign(static_cast<std::size_t>(embed_), 0.0);
        t.h.assign(static_cast<std::size_t>(embed_), 0.0);
        double out = b2;
        for (int e = 0; e < embed_; ++e) {
            double z = b1[static_cast<std::size_t>(e)];
            for (int i = 0; i < agents_; ++i) z += std::abs(t.w1_raw[static_cast<std::size_t>(i * embed_ + e)]) * q[static_cast<std::size_t>(i)];
            t.z[static_cast<std::size_t>(e)] = z;
            t.h[static_cast<std::size_t>(e)] = z > 0.0 ? z : std::expm1(z);
            out += std::abs(t.w2_raw[static_cast<std::size_t>(e)]) * t.h[static_cast<std::size_t>(e)];
        }
        return out;
    }

    /// Accumulates hypernetwork gradients (one buffer per net, in nets() order) and
    /// returns dL/dq given dL/dQ_tot.
    std::vector<double> backward(const Tape& t, double g, std::vector<Gradients>& grads) const {
        if (kind_ == MixerKind::sum) return std::vector<double>(static_cast<std::size_t>(agents_), g);
        if (grads.size() != 4) grads.resize(4);
        auto sgn = [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); };
        std::vector<double> dw2(static_cast<std::size_t>(embed_)), dz(static_cast<std::size_t>(embed_));
        for (int e = 0; e < embed_; ++e) {
            const auto ei = static_cast<std::size_t>(e);
            dw2[ei] = g * t.h[ei] * sgn(t.w2_raw[ei]);
            const double dh = g * std::abs(t.w2_raw[ei]);
            dz[ei] = dh * (t.z[ei] > 0.0 ? 1.0 : t.h[ei] + 1.0);
        }
        std::vector<double> dw1(static_cast<std::size_t>(agents_ * embed_));
        std::vector<double> dq(static_cast<std::size_t>(agents_), 0.0);
        for (int i = 0; i < agents_; ++i)
            for (int e = 0; e < embed_; ++e) {
                const auto k = static_cast<std::size_t>(i * embed_ + e);
                dw1[k] = t.q[static_cast<std::size_t>(i)] * dz[static_cast<std::size_t>(e)] * sgn(t.w1_raw[k]);
                dq[static_cast<std::size_t>(i)] += std::abs(t.w1_raw[k]) * dz[static_cast<std::size_t>(e)];
            }
        w1_.backprop(t.w1, dw1, grads[0]);
        b1_.backprop(t.b1, dz, grads[1]);
        w2_.backprop(t.w2, dw2, grads[2]);
        b2_.backprop(t.b2, std::vector<double>{g}, grads[3]);
        return dq;
    }

private:
    MixerKind kind_ = MixerKind::sum;
    int agents_ = 1;
    int state_width_ = 0;
    int embed_ = 0;
    Mlp w1_, b1_, w2_, b2_;
};

template <class State>
struct Transition {
    State state;
    std::vector<int> actions;
    std::vector<std::vector<double>> obs;  // observation seen by each decision
    std::vector<int> types;                // value net used by each decision
    std::vector<double> features;          // global features of `state`
    double reward = 0.0;
    State next;
    bool terminal = false;
};

/// Fixed-capacity ring buffer with uniform sampling.
template <class T>
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity = 10000) : capacity_(capacity) {
        if (capacity == 0) throw CapacityError("replay capacity must be positive");
        data_.reserve(std::min<std::size_t>(capacity, 1 << 16));
    }

    void push(T t) {
        if (data_.size() < capacity_) data_.push_back(std::move(t));
        else data_[head_] = std::move(t);
        head_ = (head_ + 1) % capacity_;
    }

    std::size_t size() const { return data_.size(); }
    std::size_t capacity() const { return capacity_; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    std::size_t sample_index(Rng& rng) const {
        if (data_.empty()) throw CapacityError("sampling from an empty replay buffer");
        return static_cast<std::size_t>(rng.below(data_.size()));
    }

    std::vector<const T*> sample(std::size_t n, Rng& rng) const {
        std::vector<const T*> out;
        out.reserve(n);
        for (std::size_t i = 0; i < n; ++i) out.push_back(&data_[sample_index(rng)]);
        return out;
    }

private:
    std::size_t capacity_;
    std::size_t head_ = 0;
    std::vector<T> data_;
};

enum class OptimizerKind { sgd, adam };

struct TrainConfig {
    double discount = 0.98;
    double learning_rate = 0.05;
    OptimizerKind optimizer = OptimizerKind::sgd;
    double eps_start = 1.0;
    double eps_end = 0.05;
    double eps_fraction = 0.6;  // share of episodes over which epsilon decays linearly
    int episodes = 200;
    int batch = 32;
    std::size_t capacity = 10000;
    int target_sync = 200;  // in updates
    int warmup = 64;        // transitions stored before the first update
    std::vector<int> hidden{64, 64};
    int mixer_embed = 32;
    MixerKind mixer = MixerKind::qmix;
    double grad_clip = 10.0;
    double divergence_limit = 1e6;
    std::uint64_t seed = 1;

    void check() const {
        if (!(discount > 0.0 && discount < 1.0)) throw DomainError("discount must lie in (0,1)");
        if (!(eps_start >= 0.0 && eps_start <= 1.0 && eps_end >= 0.0 && eps_end <= 1.0))
            throw DomainError("epsilon must lie in [0,1]");
        if (!(learning_rate > 0.0)) throw DomainError("learning rate must be positive");
        if (episodes < 0 || batch < 1 || target_sync < 1) throw DomainError("bad training sizes");
    }

    double epsilon(int episode) const {
        const double span = std::max(1.0, eps_fraction * episodes);
        const double frac = std::min(1.0, episode / span);
        if (frac >= 1.0) return eps_end;
        return eps_start + (eps_end - eps_start) * frac;
    }
};

struct CurvePoint {
    int episode = 0;
    double loss = 0.0;
    double reward = 0.0;
    double sp = 0.0;
    double rtp = 0.0;
    double epsilon = 0.0;
};

struct Decision {
    int type = 0;
    std::vector<double> obs;
    std::vector<std::uint8_t> mask;
};

template <class State>
struct StepResult {
    State next;
    double reward = 0.0;
    bool terminal = false;
    double sp = 0.0;
    double rtp = 0.0;
};

/// Centralized training of decentralized value agents with a monotone mixer and
/// double-estimator targets.
///
/// The environment supplies a fixed number of decisions per step. Decision i sees
/// the actions already taken by decisions 0..i-1 in the same step (a node placing
/// its UEs one by one); each decision contributes one value to the mixer.
template <class Env>
class QmixLearner {
public:
    using State = typename Env::State;
    using Record = Transition<State>;

    QmixLearner(const Env& env, TrainConfig cfg, std::string stage = "train")
        : env_(&env), cfg_(std::move(cfg)), stage_(std::move(stage)), buffer_(cfg_.capacity), rng_(cfg_.seed) {
        cfg_.check();
        Rng init = rng_.split(1);
        for (int t = 0; t < env.agent_types(); ++t) {
            std::vector<int> widths{env.obs_width(t)};
            widths.insert(widths.end(), cfg_.hidden.begin(), cfg_.hidden.end());
            widths.push_back(env.action_count(t));
            std::vector<Activation> acts(widths.size() - 1, Activation::relu);
            acts.back() = Activation::identity;
            online_.emplace_back(widths, acts, init);
        }
        mixer_ = Mixer(cfg_.mixer, env.decision_count(), env.state_width(), cfg_.mixer_embed, init);
        target_ = online_;
        target_mixer_ = mixer_;
        for (std::size_t i = 0; i < online_.size() + mixer_.nets().size(); ++i) {
            adam_.emplace_back();
            adam_.back().lr = cfg_.learning_rate;
        }
        explore_ = rng_.split(2);
        sample_ = rng_.split(3);
        env_rng_ = rng_.split(4);
    }

    const TrainConfig& config() const { return cfg_; }
    const std::vector<Mlp>& agents() const { return online_; }
    std::vector<Mlp>& agents() { return online_; }
    const Mixer& mixer() const { return mixer_; }
    Mixer& mixer() { return mixer_; }
    const std::vector<Mlp>& target_agents() const { return target_; }
    const Mixer& target_mixer() const { return target_mixer_; }
    const ReplayBuffer<Record>& buffer() const { return buffer_; }
    long updates() const { return updates_; }

    /// Sequential masked decisions for one step. epsilon = 0 gives the greedy action.
    std::vector<int> act(const State& s, double epsilon, Rng& rng, std::vector<Decision>* seen = nullptr,
                         const std::vector<Mlp>* nets = nullptr) const {
        const auto& use = nets ? *nets : online_;
        std::vector<int> joint;
        const int n = env_->decision_count();
        joint.reserve(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            Decision d = env_->decision(s, std::span<const int>(joint), i);
            int a;
            if (epsilon > 0.0 && rng.uniform() < epsilon) {
                std::vector<int> ok;
                for (std::size_t j = 0; j < d.mask.size(); ++j)
                    if (d.mask[j]) ok.push_back(static_cast<int>(j));
                if (ok.empty()) throw ActionError("no feasible action");
                a = ok[rng.below(ok.size())];
            } else {
                a = masked_argmax(use[static_cast<std::size_t>(d.type)].forward(d.obs), d.mask);
            }
            joint.push_back(a);
            if (seen) seen->push_back(std::move(d));
        }
        return joint;
    }

    std::vector<int> greedy(const State& s, std::vector<Decision>* seen = nullptr) const {
        Rng unused(0);
        return act(s, 0.0, unused, seen);
    }

    /// y = r + discount * Q_tot^-(s', a*) with a* chosen greedily by the online nets.
    double ddqn_target(const Record& t) const {
        if (t.terminal) return t.reward;
        std::vector<Decision> seen;
        const auto a_star = greedy(t.next, &seen);
        std::vector<double> q(a_star.size());
        for (std::size_t i = 0; i < a_star.size(); ++i)
            q[i] = target_[static_cast<std::size_t>(seen[i].type)].forward(seen[i].obs)[static_cast<std::size_t>(a_star[i])];
        return t.reward + cfg_.discount * target_mixer_.forward(q, env_->global_features(t.next));
    }

    /// Q_tot(s, a) of a stored transition under the online nets.
    double qtot(const Record& t) const {
        std::vector<double> q(t.actions.size());
        for (std::size_t i = 0; i < q.size(); ++i)
            q[i] = online_[static_cast<std::size_t>(t.types[i])].forward(t.obs[i])[static_cast<std::size_t>(t.actions[i])];
        return mixer_.forward(q, t.features);
    }

    /// Mean squared TD error of the batch and its gradient for every online net
    /// (agent nets first, then mixer hypernetworks).
    double td_loss(const std::vector<const Record*>& batch, std::vector<Gradients>& grads) const {
        const std::size_t na = online_.size();
        grads.assign(na + mixer_.nets().size(), Gradients{});
        std::vector<Gradients> mgrads(mixer_.nets().size());
        double loss = 0.0;
        const double inv = 1.0 / static_cast<double>(batch.size());
        for (const Record* t : batch) {
            const double y = ddqn_target(*t);
            std::vector<Tape> tapes(t->actions.size());
            std::vector<double> q(t->actions.size());
            for (std::size_t i = 0; i < q.size(); ++i)
                q[i] = online_[static_cast<std::size_t>(t->types[i])].forward(t->obs[i], tapes[i])[static_cast<std::size_t>(t->actions[i])];
            Mixer::Tape mt;
            const double qt = mixer_.forward(q, t->features, &mt);
            const double err = qt - y;
            loss += err * err * inv;
            const auto dq = mixer_.backward(mt, 2.0 * err * inv, mgrads);
            for (std::size_t i = 0; i < q.size(); ++i) {
                const auto& net = online_[static_cast<std::size_t>(t->types[i])];
                std::vector<double> gout(static_cast<std::size_t>(net.output_width()), 0.0);
                gout[static_cast<std::size_t>(t->actions[i])] = dq[i];
                net.backprop(tapes[i], gout, grads[static_cast<std::size_t>(t->types[i])]);
            }
        }
        for (std::size_t i = 0; i < na; ++i)
            if (grads[i].params.empty()) grads[i].params.assign(online_[i].param_count(), 0.0);
        for (std::size_t j = 0; j < mgrads.size(); ++j) {
            grads[na + j] = std::move(mgrads[j]);
            if (grads[na + j].params.empty()) grads[na + j].params.assign(mixer_.nets()[j]->param_count(), 0.0);
        }
        return loss;
    }

    /// One gradient step on the batch; returns the loss before the step.
    double td_update(const std::vector<const Record*>& batch) {
        std::vector<Gradients> grads;
        const double loss = td_loss(batch, grads);
        if (!std::isfinite(loss) || loss > cfg_.divergence_limit)
            throw TrainingError(stage_, "TD loss " + std::to_string(loss) + " after " + std::to_string(updates_) +
                                            " updates exceeds the divergence limit");
        if (cfg_.grad_clip > 0.0) {
            double total = 0.0;
            for (const auto& g : grads)
                for (double v : g.params) total += v * v;
            total = std::sqrt(total);
            if (total > cfg_.grad_clip)
                for (auto& g : grads)
                    for (double& v : g.params) v *= cfg_.grad_clip / total;
        }
        std::vector<Mlp*> nets;
        for (auto& n : online_) nets.push_back(&n);
        for (auto* n : mixer_.nets()) nets.push_back(n);
        for (std::size_t i = 0; i < nets.size(); ++i) {
            if (cfg_.optimizer == OptimizerKind::sgd) nets[i]->sgd_update(grads[i].params, cfg_.learning_rate);
            else adam_[i].step(nets[i]->mutable_params(), grads[i].params);
        }
        if (++updates_ % cfg_.target_sync == 0) sync_targets();
        return loss;
    }

    void sync_targets() {
        for (std::size_t i = 0; i < online_.size(); ++i) target_[i].mutable_params() = online_[i].params();
        auto src = mixer_.nets();
        auto dst = target_mixer_.nets();
        for (std::size_t i = 0; i < src.size(); ++i) dst[i]->mutable_params() = src[i]->params();
    }

    /// Runs one episode with exploration, storing transitions and updating after
    /// every step once the buffer is warm.
    CurvePoint run_episode(int episode) {
        const double eps = cfg_.epsilon(episode);
        State s = env_->reset(env_rng_);
        CurvePoint cp;
        cp.episode = episode;
        cp.epsilon = eps;
        int steps = 0, n_updates = 0;
        for (;;) {
            std::vector<Decision> seen;
            const auto joint = act(s, eps, explore_, &seen);
            auto res = env_->step(s, joint, env_rng_);
            Record rec;
            rec.actions = joint;
            for (auto& d : seen) {
                rec.types.push_back(d.type);
                rec.obs.push_back(std::move(d.obs));
            }
            rec.features = env_->global_features(s);
            rec.reward = res.reward;
            rec.terminal = res.terminal;
            rec.state = std::move(s);
            rec.next = res.next;
            buffer_.push(std::move(rec));
            cp.reward += res.reward;
            cp.sp += res.sp;
            cp.rtp += res.rtp;
            ++steps;
            if (static_cast<int>(buffer_.size()) >= std::max(cfg_.warmup, cfg_.batch)) {
                cp.loss += td_update(buffer_.sample(static_cast<std::size_t>(cfg_.batch), sample_));
                ++n_updates;
            }
            if (res.terminal) break;
            s = std::move(res.next);
        }
        cp.reward /= steps;
        cp.sp /= steps;
        cp.rtp /= steps;
        cp.loss = n_updates ? cp.loss / n_updates : 0.0;
        return cp;
    }

    std::vector<CurvePoint> train() {
        std::vector<CurvePoint> curve;
        for (int e = 0; e < cfg_.episodes; ++e) curve.push_back(run_episode(e));
        return curve;
    }

    /// Greedy rollout without exploration or learning; returns per-step results.
    std::vector<StepResult<State>> rollout(Rng& env_rng, std::vector<std::vector<int>>* actions = nullptr) const {
        std::vector<StepResult<State>> out;
        State s = env_->reset(env_rng);
        for (;;) {
            const auto joint = greedy(s);
            if (actions) actions->push_back(joint);
            auto res = env_->step(s, joint, env_rng);
            out.push_back(res);
            if (res.terminal) break;
            s = res.next;
        }
        return out;
    }

    /// Checksum over every online and target parameter.
    std::uint64_t checksum() const {
        std::uint64_t h = 0;
        auto mix = [&h](std::uint64_t v) { h = splitmix64(h ^ v); };
        for (const auto& n : online_) mix(n.checksum());
        for (const auto& n : target_) mix(n.checksum());
        for (const auto* n : mixer_.nets()) mix(n->checksum());
        for (const auto* n : target_mixer_.nets()) mix(n->checksum());
        return h;
    }

    // Checkpoint: "STNQMIX1", u32 agent-net count, u32 mixer-net count, then every
    // online agent net followed by every mixer net in the nn binary layout.
    void save(std::ostream& os) const {
        os.write("STNQMIX1", 8);
        const auto mnets = mixer_.nets();
        const std::uint32_t counts[2] = {static_cast<std::uint32_t>(online_.size()),
                                         static_cast<std::uint32_t>(mnets.size())};
        for (std::uint32_t c : counts)
            for (int i = 0; i < 4; ++i) os.put(static_cast<char>((c >> (8 * i)) & 0xff));
        for (const auto& n : online_) n.save(os);
        for (const auto* n : mnets) n->save(os);
    }

    void load(std::istream& is) {
        char magic[8];
        if (!is.read(magic, 8) || std::string(magic, 8) != "STNQMIX1") throw FormatError("bad checkpoint magic");
        std::uint32_t counts[2] = {0, 0};
        for (auto& c : counts)
            for (int i = 0; i < 4; ++i) {
                const int b = is.get();
                if (b == EOF) throw FormatError("truncated checkpoint");
                c |= static_cast<std::uint32_t>(b) << (8 * i);
            }
        auto mnets = mixer_.nets();
        if (counts[0] != online_.size() || counts[1] != mnets.size()) throw FormatError("checkpoint shape mismatch");
        for (auto& n : online_) {
            Mlp m = Mlp::load(is);
            if (m.layers() != n.layers()) throw FormatError("checkpoint layer mismatch");
            n.mutable_params() = m.params();
        }
        for (auto* n : mnets) {
            Mlp m = Mlp::load(is);
            if (m.layers() != n->layers()) throw FormatError("checkpoint layer mismatch");
            n->mutable_params() = m.params();
        }
        sync_targets();
    }

private:
    const Env* env_;
    TrainConfig cfg_;
    std::string stage_;
    std::vector<Mlp> online_, target_;
    Mixer mixer_, target_mixer_;
    std::vector<Adam> adam_;
    ReplayBuffer<Record> buffer_;
    Rng rng_, explore_{0}, sample_{0}, env_rng_{0};
    long updates_ = 0;
};

}  // namespace stnsec

#endif  // STNSEC_MARL_HPP
