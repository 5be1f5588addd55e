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

#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>

#include <cmath>
#include <sstream>

#include "stnsec/marl.hpp"

namespace {

using namespace stnsec;

// Three-step episodes; agent 0 is paid for matching t, agent 1 for matching t+1 (mod 3).
struct MockEnv {
    struct State {
        int t = 0;
    };
    bool mask_last = false;

    int agent_types() const { return 2; }
    int obs_width(int) const { return 3; }
    int action_count(int) const { return 3; }
    int decision_count() const { return 2; }
    int state_width() const { return 3; }
    State reset(Rng&) const { return {}; }
    Decision decision(const State& s, std::span<const int>, int i) const {
        Decision d;
        d.type = i;
        d.obs = {double(s.t == 0), double(s.t == 1), double(s.t == 2)};
        d.mask = {1, 1, std::uint8_t(mask_last ? 0 : 1)};
        return d;
    }
    std::vector<double> global_features(const State& s) const { return {double(s.t == 0), double(s.t == 1), double(s.t == 2)}; }
    StepResult<State> step(const State& s, const std::vector<int>& a, Rng&) const {
        StepResult<State> r;
        r.reward = (a[0] == s.t) + (a[1] == (s.t + 1) % 3);
        r.next.t = s.t + 1;
        r.terminal = r.next.t >= 3;
        return r;
    }
};

TrainConfig small_config() {
    TrainConfig c;
    c.hidden = {8};
    c.mixer_embed = 4;
    c.learning_rate = 0.01;
    c.episodes = 0;
    c.warmup = 1 << 30;
    c.target_sync = 1 << 20;
    c.seed = 5;
    return c;
}

void set_biases(Mlp& net, const std::vector<double>& b) {
    auto& p = net.mutable_params();
    std::fill(p.begin(), p.end(), 0.0);
    const auto& l = net.layers().back();
    for (int o = 0; o < l.out; ++o) p[p.size() - l.out + o] = b[static_cast<std::size_t>(o)];
}

TEST(MaskedArgmax, Examples) {
    EXPECT_EQ(masked_argmax({0.1, 0.9, 0.3}, {1, 1, 1}), 1);
    EXPECT_EQ(masked_argmax({0.1, 0.9, 0.3}, {1, 0, 1}), 2);
    EXPECT_EQ(masked_argmax({0.5, 0.5}, {1, 1}), 0);
    EXPECT_THROW(masked_argmax({0.1, 0.2}, {0, 0}), ActionError);
    EXPECT_THROW(masked_argmax({0.1, 0.2}, {1}), ShapeError);
}

TEST(Mixer, SumOfOneAgentIsIdentity) {
    Rng rng(1);
    Mixer m(MixerKind::sum, 1, 0, 0, rng);
    EXPECT_DOUBLE_EQ(m.forward({0.37}, {}), 0.37);
    EXPECT_THROW(m.forward({0.1, 0.2}, {}), ShapeError);
}

TEST(Mixer, MonotoneUnderRandomProbes) {
    Rng rng(2);
    for (int probe = 0; probe < 1000; ++probe) {
        Mixer m(MixerKind::qmix, 3, 4, 5, rng);
        std::vector<double> q(3), s(4);
        for (auto& v : q) v = 4.0 * rng.normal();
        for (auto& v : s) v = rng.normal();
        const double base = m.forward(q, s);
        const int i = static_cast<int>(rng.below(3));
        q[static_cast<std::size_t>(i)] += 0.01 + rng.uniform();
        EXPECT_GE(m.forward(q, s), base - 1e-12);
    }
}

TEST(Mixer, ForwardMatchesIndependentEvaluation) {
    Rng rng(3);
    Mixer m(MixerKind::qmix, 2, 3, 4, rng);
    const std::vector<double> q{1.0, 2.0}, s{0.3, -0.2, 0.5};
    auto nets = m.nets();
    const auto w1 = nets[0]->forward(s), b1 = nets[1]->forward(s), w2 = nets[2]->forward(s);
    double want = nets[3]->forward(s)[0];
    for (int e = 0; e < 4; ++e) {
        double z = b1[e] + std::fabs(w1[e]) * q[0] + std::fabs(w1[4 + e]) * q[1];
        want += std::fabs(w2[e]) * (z > 0 ? z : std::exp(z) - 1.0);
    }
    EXPECT_NEAR(m.forward(q, s), want, 1e-12);
}

TEST(Mixer, BackwardMatchesFiniteDifferences) {
    Rng rng(4);
    Mixer m(MixerKind::qmix, 2, 3, 4, rng);
    const std::vector<double> q{0.4, -1.3}, s{0.3, -0.2, 0.5};
    Mixer::Tape tape;
    m.forward(q, s, &tape);
    std::vector<Gradients> grads;
    const auto dq = m.backward(tape, 1.0, grads);
    const double h = 1e-6;
    for (int i = 0; i < 2; ++i) {
        auto up = q, dn = q;
        up[i] += h;
        dn[i] -= h;
        EXPECT_NEAR(dq[i], (m.forward(up, s) - m.forward(dn, s)) / (2 * h), 1e-6);
    }
    auto nets = m.nets();
    for (std::size_t n = 0; n < nets.size(); ++n) {
        const auto fd = finite_difference_gradient(*nets[n], [&](const Mlp&) { return m.forward(q, s); });
        for (std::size_t j = 0; j < fd.size(); ++j) EXPECT_NEAR(grads[n].params[j], fd[j], 1e-5) << n << ":" << j;
    }
}

TEST(Greedy, FactorizedEqualsExhaustiveArgmax) {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        Mixer m(MixerKind::qmix, 2, 2, 4, rng);
        const std::vector<double> s{rng.normal(), rng.normal()};
        std::vector<double> q0(3), q1(3);
        for (auto& v : q0) v = rng.normal();
        for (auto& v : q1) v = rng.normal();
        const int a0 = masked_argmax(q0, {1, 1, 1}), a1 = masked_argmax(q1, {1, 1, 1});
        double best = -1e300;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) best = std::max(best, m.forward({q0[i], q1[j]}, s));
        EXPECT_NEAR(m.forward({q0[a0], q1[a1]}, s), best, 1e-12);
    }
}

TEST(Ddqn, HandExampleAndTerminal) {
    MockEnv env;
    auto cfg = small_config();
    cfg.hidden = {};
    cfg.mixer = MixerKind::sum;
    QmixLearner<MockEnv> learner(env, cfg);
    set_biases(learner.agents()[0], {5, 5, 1});
    set_biases(learner.agents()[1], {5, 5, 1});
    learner.sync_targets();
    // Online nets now prefer action 2, which the target nets value at 1 each.
    set_biases(learner.agents()[0], {0, 0, 1});
    set_biases(learner.agents()[1], {0, 0, 1});
    Transition<MockEnv::State> t;
    t.reward = 1.0;
    t.next.t = 1;
    EXPECT_NEAR(learner.ddqn_target(t), 2.96, 1e-12);
    t.terminal = true;
    EXPECT_DOUBLE_EQ(learner.ddqn_target(t), 1.0);
    // With target = online this is the ordinary Q-learning target.
    learner.sync_targets();
    t.terminal = false;
    EXPECT_NEAR(learner.ddqn_target(t), 1.0 + 0.98 * 2.0, 1e-12);
}

std::vector<Transition<MockEnv::State>> collect(QmixLearner<MockEnv>& learner, int episodes) {
    for (int e = 0; e < episodes; ++e) learner.run_episode(0);
    std::vector<Transition<MockEnv::State>> out;
    for (std::size_t i = 0; i < learner.buffer().size(); ++i) out.push_back(learner.buffer()[i]);
    return out;
}

TEST(TdUpdate, ZeroErrorBatchHasZeroGradient) {
    MockEnv env;
    QmixLearner<MockEnv> learner(env, small_config());
    auto data = collect(learner, 1);
    auto t = data.back();
    ASSERT_TRUE(t.terminal);
    t.reward = learner.qtot(t);
    std::vector<Gradients> grads;
    EXPECT_NEAR(learner.td_loss({&t}, grads), 0.0, 1e-20);
    for (const auto& g : grads)
        for (double v : g.params) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(TdUpdate, LossDecreasesOnFrozenBatch) {
    MockEnv env;
    QmixLearner<MockEnv> learner(env, small_config());
    auto data = collect(learner, 4);
    std::vector<const Transition<MockEnv::State>*> batch;
    for (const auto& t : data) batch.push_back(&t);
    double prev = learner.td_update(batch);
    for (int i = 0; i < 50; ++i) {
        const double loss = learner.td_update(batch);
        EXPECT_LT(loss, prev) << "step " << i;
        prev = loss;
    }
}

TEST(TdUpdate, GradientMatchesFiniteDifferences) {
    MockEnv env;
    auto cfg = small_config();
    cfg.hidden = {4};
    QmixLearner<MockEnv> learner(env, cfg);
    auto data = collect(learner, 1);
    std::vector<const Transition<MockEnv::State>*> batch{&data[0], &data[1]};
    std::vector<Gradients> grads;
    learner.td_loss(batch, grads);
    std::vector<Mlp*> nets{&learner.agents()[0], &learner.agents()[1]};
    for (auto* n : learner.mixer().nets()) nets.push_back(n);
    for (std::size_t n = 0; n < nets.size(); ++n) {
        const auto fd = finite_difference_gradient(*nets[n], [&](const Mlp&) {
            std::vector<Gradients> g;
            return learner.td_loss(batch, g);
        });
        for (std::size_t j = 0; j < fd.size(); ++j) EXPECT_NEAR(grads[n].params[j], fd[j], 1e-5) << n << ":" << j;
    }
}

TEST(TdUpdate, DivergenceAbortsWithStage) {
    MockEnv env;
    auto cfg = small_config();
    cfg.divergence_limit = 1e-9;
    QmixLearner<MockEnv> learner(env, cfg, "stage1");
    auto data = collect(learner, 1);
    data[0].reward = 100.0;
    try {
        learner.td_update({&data[0]});
        FAIL() << "expected TrainingError";
    } catch (const TrainingError& e) {
        EXPECT_EQ(e.stage(), "stage1");
    }
}

TEST(Replay, UniformByChiSquare) {
    ReplayBuffer<int> buf(10);
    for (int i = 0; i < 25; ++i) buf.push(i);
    ASSERT_EQ(buf.size(), 10u);
    Rng rng(6);
    std::vector<double> hist(10, 0.0);
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) hist[buf.sample_index(rng)] += 1.0;
    double chi = 0.0;
    for (double h : hist) chi += (h - draws / 10.0) * (h - draws / 10.0) / (draws / 10.0);
    boost::math::chi_squared dist(9);
    EXPECT_LT(chi, boost::math::quantile(dist, 0.99));
    EXPECT_THROW(ReplayBuffer<int>(0), CapacityError);
    ReplayBuffer<int> empty(3);
    EXPECT_THROW(empty.sample_index(rng), CapacityError);
}

TEST(Targets, StaleBetweenSyncs) {
    MockEnv env;
    auto cfg = small_config();
    cfg.target_sync = 5;
    QmixLearner<MockEnv> learner(env, cfg);
    auto data = collect(learner, 4);
    std::vector<const Transition<MockEnv::State>*> batch;
    for (const auto& t : data) batch.push_back(&t);
    auto snapshot = learner.target_agents()[0].params();
    for (int i = 1; i <= 12; ++i) {
        learner.td_update(batch);
        if (i % 5 == 0) {
            EXPECT_EQ(learner.target_agents()[0].params(), learner.agents()[0].params());
            snapshot = learner.target_agents()[0].params();
        } else {
            EXPECT_EQ(learner.target_agents()[0].params(), snapshot);
            EXPECT_NE(learner.agents()[0].params(), snapshot);
        }
    }
}

TEST(Learner, SolvesMockTaskAndStaysMonotone) {
    MockEnv env;
    TrainConfig cfg;
    cfg.hidden = {16};
    cfg.mixer_embed = 8;
    cfg.episodes = 300;
    cfg.warmup = 32;
    cfg.target_sync = 50;
    cfg.learning_rate = 0.01;
    cfg.optimizer = OptimizerKind::adam;
    cfg.seed = 11;
    QmixLearner<MockEnv> learner(env, cfg);
    learner.train();
    Rng r(0);
    double ret = 0.0;
    for (const auto& s : learner.rollout(r)) ret += s.reward;
    EXPECT_DOUBLE_EQ(ret, 6.0);
    Rng probe(9);
    for (int i = 0; i < 200; ++i) {
        std::vector<double> q{probe.normal(), probe.normal()}, s{probe.uniform(), probe.uniform(), probe.uniform()};
        const double base = learner.mixer().forward(q, s);
        q[i % 2] += probe.uniform();
        EXPECT_GE(learner.mixer().forward(q, s), base - 1e-12);
    }
}

TEST(Learner, RespectsMasksAndIsDeterministic) {
    MockEnv env;
    env.mask_last = true;
    auto cfg = small_config();
    cfg.episodes = 20;
    cfg.warmup = 16;
    QmixLearner<MockEnv> a(env, cfg), b(env, cfg);
    a.train();
    b.train();
    EXPECT_EQ(a.checksum(), b.checksum());
    for (std::size_t i = 0; i < a.buffer().size(); ++i)
        for (int act : a.buffer()[i].actions) EXPECT_NE(act, 2);
}

TEST(Learner, CheckpointRoundTrip) {
    MockEnv env;
    auto cfg = small_config();
    cfg.episodes = 10;
    cfg.warmup = 8;
    QmixLearner<MockEnv> a(env, cfg);
    a.train();
    std::stringstream ss;
    a.save(ss);
    auto cfg2 = cfg;
    cfg2.seed = 99;
    QmixLearner<MockEnv> b(env, cfg2);
    b.load(ss);
    EXPECT_EQ(a.agents()[0].params(), b.agents()[0].params());
    EXPECT_EQ(a.mixer().nets()[2]->params(), b.mixer().nets()[2]->params());
    std::stringstream bad("NOTACKPT");
    EXPECT_THROW(b.load(bad), FormatError);
}

TEST(Config, EpsilonScheduleAndChecks) {
    TrainConfig c;
    c.episodes = 100;
    EXPECT_DOUBLE_EQ(c.epsilon(0), 1.0);
    EXPECT_NEAR(c.epsilon(30), 1.0 - 0.95 * 0.5, 1e-12);
    EXPECT_DOUBLE_EQ(c.epsilon(60), 0.05);
    EXPECT_DOUBLE_EQ(c.epsilon(99), 0.05);
    c.discount = 1.0;
    EXPECT_THROW(c.check(), DomainError);
}

}  // namespace
