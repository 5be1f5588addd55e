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

#ifndef STNSEC_ADVGEN_HPP
#define STNSEC_ADVGEN_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "stnsec/error.hpp"
#include "stnsec/grid.hpp"
#include "stnsec/nn.hpp"
#include "stnsec/rng.hpp"

namespace stnsec {

struct GanConfig {
    double lambda_gp = 10.0;
    double alpha = 1.0;  // similarity weight
    double beta = 1.0;   // occupancy weight
    int n_critic = 5;
    int noise_dim = 8;
    int iterations = 300;  // generator steps
    int batch = 16;
    int hidden = 32;
    double lr = 1e-3;
    double smoothing = 1e-6;  // additive smoothing of the slot distributions
    double collapse_variance = 1e-6;
    int collapse_rounds = 100;
    std::uint64_t seed = 1;

    void check() const {
        if (!(lambda_gp >= 0.0 && alpha >= 0.0 && beta >= 0.0)) throw DomainError("GAN weights must be nonnegative");
        if (n_critic < 1 || noise_dim < 1 || batch < 1 || hidden < 1 || iterations < 0)
            throw DomainError("bad GAN sizes");
        if (!(lr > 0.0)) throw DomainError("GAN learning rate must be positive");
    }
};

/// Shape of one node's pattern, flattened as (l, k, f) row-major.
struct PatternShape {
    int time_slots = 0;
    int ues = 0;
    int slots = 0;
    int size() const { return time_slots * ues * slots; }
    std::size_t at(int l, int k, int f) const {
        return (static_cast<std::size_t>(l) * ues + k) * slots + f;
    }
};

inline std::vector<double> flatten(const NodePattern& p) { return {p.v.begin(), p.v.end()}; }

using Batch = std::vector<std::vector<double>>;

struct PenaltyTerm {
    double value = 0.0;            // (|grad| - 1)^2
    std::vector<double> input_grad;  // grad_x D at the point
};

/// Gradient-penalty term of a scalar critic at x.
inline PenaltyTerm gradient_penalty(const Mlp& critic, const std::vector<double>& x) {
    Tape t;
    critic.forward(x, t);
    PenaltyTerm p;
    p.input_grad = critic.backward(t, {1.0}).input;
    double n = 0.0;
    for (double g : p.input_grad) n += g * g;
    n = std::sqrt(n);
    p.value = (n - 1.0) * (n - 1.0);
    return p;
}

/// d(|grad_x D| - 1)^2 / d theta by forward-over-reverse differentiation: the
/// directional derivative of grad_theta D along u = 2 (|g| - 1) g / |g|.
inline std::vector<double> penalty_param_gradient(const Mlp& critic, const std::vector<double>& x) {
    const auto p = gradient_penalty(critic, x);
    double n = 0.0;
    for (double g : p.input_grad) n += g * g;
    n = std::sqrt(n);
    std::vector<Dual> xd(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double u = n > 0.0 ? 2.0 * (n - 1.0) * p.input_grad[i] / n : 0.0;
        xd[i] = Dual{x[i], u};
    }
    TapeOf<Dual> tape;
    critic.run<Dual>(xd, &tape);
    GradientsOf<Dual> g;
    critic.backprop<Dual>(tape, {Dual{1.0, 0.0}}, g);
    std::vector<double> out(g.params.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = g.params[i].d;
    return out;
}

struct CriticStep {
    double loss = 0.0;
    double wgap = 0.0;  // E[D(X)] - E[D(A)]
    double penalty = 0.0;
    std::vector<double> grad;
};

/// L_D = E[D(A)] - E[D(X)] + lambda E[(|grad D(xh)| - 1)^2], xh = rho X + (1 - rho) A.
inline CriticStep critic_loss(const Mlp& critic, const Batch& real, const Batch& fake, double lambda_gp, Rng& rng) {
    if (real.size() != fake.size() || real.empty()) throw ShapeError("critic needs matched nonempty batches");
    const double inv = 1.0 / static_cast<double>(real.size());
    CriticStep out;
    Gradients acc;
    acc.params.assign(critic.param_count(), 0.0);
    for (std::size_t i = 0; i < real.size(); ++i) {
        if (real[i].size() != fake[i].size()) throw ShapeError("pattern widths differ");
        Tape tr, tf;
        const double dr = critic.forward(real[i], tr)[0];
        const double df = critic.forward(fake[i], tf)[0];
        out.wgap += (dr - df) * inv;
        critic.backprop(tr, std::vector<double>{-inv}, acc);
        critic.backprop(tf, std::vector<double>{inv}, acc);
        if (lambda_gp > 0.0) {
            const double rho = rng.uniform();
            std::vector<double> xh(real[i].size());
            for (std::size_t j = 0; j < xh.size(); ++j) xh[j] = rho * real[i][j] + (1.0 - rho) * fake[i][j];
            out.penalty += gradient_penalty(critic, xh).value * inv;
            const auto gp = penalty_param_gradient(critic, xh);
            for (std::size_t j = 0; j < gp.size(); ++j) acc.params[j] += lambda_gp * inv * gp[j];
        }
    }
    out.loss = -out.wgap + lambda_gp * out.penalty;
    if (!std::isfinite(out.loss)) throw TrainingError("stage2", "non-finite critic loss");
    out.grad = std::move(acc.params);
    return out;
}

struct Regularizer {
    double value = 0.0;
    Batch grad;  // d value / d A, same shape as the generated batch
};

/// L1 distance plus KL divergence of per-slot occupancy distributions over the batch.
inline Regularizer similarity_loss(const Batch& a, const Batch& x, const PatternShape& s, double smoothing = 1e-6) {
    if (a.size() != x.size() || a.empty()) throw ShapeError("similarity needs matched nonempty batches");
    const double inv = 1.0 / static_cast<double>(a.size());
    Regularizer r;
    r.grad.assign(a.size(), std::vector<double>(static_cast<std::size_t>(s.size()), 0.0));
    std::vector<double> ca(static_cast<std::size_t>(s.slots), smoothing), cx(static_cast<std::size_t>(s.slots), smoothing);
    for (std::size_t b = 0; b < a.size(); ++b)
        for (int l = 0; l < s.time_slots; ++l)
            for (int k = 0; k < s.ues; ++k)
                for (int f = 0; f < s.slots; ++f) {
                    const auto i = s.at(l, k, f);
                    const double d = a[b][i] - x[b][i];
                    r.value += std::abs(d) * inv;
                    r.grad[b][i] = (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) * inv;
                    ca[static_cast<std::size_t>(f)] += a[b][i];
                    cx[static_cast<std::size_t>(f)] += x[b][i];
                }
    double sa = 0.0, sx = 0.0;
    for (int f = 0; f < s.slots; ++f) sa += ca[static_cast<std::size_t>(f)], sx += cx[static_cast<std::size_t>(f)];
    std::vector<double> lr(static_cast<std::size_t>(s.slots));
    double kl = 0.0;
    for (int f = 0; f < s.slots; ++f) {
        const auto fi = static_cast<std::size_t>(f);
        const double pa = ca[fi] / sa, px = cx[fi] / sx;
        lr[fi] = std::log(pa / px);
        kl += pa * lr[fi];
    }
    r.value += kl;
    for (int f = 0; f < s.slots; ++f) {
        const double dk = (lr[static_cast<std::size_t>(f)] - kl) / sa;
        for (std::size_t b = 0; b < a.size(); ++b)
            for (int l = 0; l < s.time_slots; ++l)
                for (int k = 0; k < s.ues; ++k) r.grad[b][s.at(l, k, f)] += dk;
    }
    return r;
}

/// Per-(l, f) squared difference of UE counts normalized by the node's UE count,
/// averaged over the batch.
inline Regularizer occupancy_loss(const Batch& a, const Batch& x, const PatternShape& s) {
    if (a.size() != x.size() || a.empty()) throw ShapeError("occupancy needs matched nonempty batches");
    const double inv = 1.0 / static_cast<double>(a.size());
    const double K = std::max(1, s.ues);
    Regularizer r;
    r.grad.assign(a.size(), std::vector<double>(static_cast<std::size_t>(s.size()), 0.0));
    for (std::size_t b = 0; b < a.size(); ++b)
        for (int l = 0; l < s.time_slots; ++l)
            for (int f = 0; f < s.slots; ++f) {
                double diff = 0.0;
                for (int k = 0; k < s.ues; ++k) diff += a[b][s.at(l, k, f)] - x[b][s.at(l, k, f)];
                diff /= K;
                r.value += diff * diff * inv;
                for (int k = 0; k < s.ues; ++k) r.grad[b][s.at(l, k, f)] = 2.0 * diff / K * inv;
            }
    return r;
}

inline Mlp make_generator(const PatternShape& s, const GanConfig& cfg, Rng& rng) {
    return Mlp({cfg.noise_dim, cfg.hidden, cfg.hidden, s.size()},
               {Activation::relu, Activation::relu, Activation::sigmoid}, rng);
}

inline Mlp make_critic(const PatternShape& s, const GanConfig& cfg, Rng& rng) {
    return Mlp({s.size(), cfg.hidden, cfg.hidden, 1}, {Activation::tanh, Activation::tanh, Activation::identity}, rng);
}

inline std::vector<double> sample_noise(int dim, Rng& rng) {
    std::vector<double> z(static_cast<std::size_t>(dim));
    for (auto& v : z) v = rng.normal();
    return z;
}

struct GeneratorStep {
    double loss = 0.0;
    double adversarial = 0.0;  // -E[D(A)]
    double similarity = 0.0;
    double occupancy = 0.0;
    std::vector<double> grad;
    Batch generated;
};

/// L_G = -E[D(A)] + alpha L_sim + beta L_occ for A = G(z), with regularizers on the
/// continuous outputs.
inline GeneratorStep generator_loss(const Mlp& gen, const Mlp& critic, const Batch& noise, const Batch& reference,
                                    const PatternShape& s, const GanConfig& cfg) {
    if (noise.size() != reference.size() || noise.empty()) throw ShapeError("generator needs matched batches");
    const double inv = 1.0 / static_cast<double>(noise.size());
    GeneratorStep out;
    std::vector<Tape> tapes(noise.size());
    for (std::size_t b = 0; b < noise.size(); ++b) out.generated.push_back(gen.forward(noise[b], tapes[b]));
    Batch dA(noise.size());
    for (std::size_t b = 0; b < noise.size(); ++b) {
        Tape t;
        out.adversarial -= critic.forward(out.generated[b], t)[0] * inv;
        dA[b] = critic.backward(t, {-inv}).input;
    }
    const auto sim = similarity_loss(out.generated, reference, s, cfg.smoothing);
    const auto occ = occupancy_loss(out.generated, reference, s);
    out.similarity = sim.value;
    out.occupancy = occ.value;
    out.loss = out.adversarial + cfg.alpha * sim.value + cfg.beta * occ.value;
    if (!std::isfinite(out.loss)) throw TrainingError("stage2", "non-finite generator loss");
    Gradients g;
    for (std::size_t b = 0; b < noise.size(); ++b) {
        for (std::size_t i = 0; i < dA[b].size(); ++i) dA[b][i] += cfg.alpha * sim.grad[b][i] + cfg.beta * occ.grad[b][i];
        gen.backprop(tapes[b], dA[b], g);
    }
    out.grad = std::move(g.params);
    return out;
}

struct GanPoint {
    int iteration = 0;
    double critic_loss = 0.0;
    double generator_loss = 0.0;
    double wgap = 0.0;
    double occupancy = 0.0;
};

struct GanModel {
    PatternShape shape;
    Mlp generator;
    Mlp critic;
    std::vector<GanPoint> curve;
};

/// Mean over coordinates of the across-batch variance.
inline double batch_variance(const Batch& b) {
    if (b.size() < 2) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < b[0].size(); ++i) {
        double m = 0.0, m2 = 0.0;
        for (const auto& v : b) m += v[i], m2 += v[i] * v[i];
        m /= b.size();
        total += m2 / b.size() - m * m;
    }
    return total / static_cast<double>(b[0].size());
}

/// n_critic critic steps then one generator step, per iteration.
inline GanModel train_stage2(const std::vector<NodePattern>& corpus, const GanConfig& cfg) {
    cfg.check();
    if (corpus.empty()) throw ShapeError("Stage II needs a nonempty corpus");
    GanModel m;
    m.shape = {corpus[0].n0, corpus[0].n1, corpus[0].n2};
    for (const auto& p : corpus)
        if (p.n0 != m.shape.time_slots || p.n1 != m.shape.ues || p.n2 != m.shape.slots)
            throw ShapeError("corpus patterns differ in shape");
    Rng rng(cfg.seed);
    Rng init = rng.split(1), draw = rng.split(2);
    m.generator = make_generator(m.shape, cfg, init);
    m.critic = make_critic(m.shape, cfg, init);
    if (m.shape.size() == 0) return m;
    Adam ac, ag;
    ac.lr = ag.lr = cfg.lr;
    auto real_batch = [&] {
        Batch b;
        for (int i = 0; i < cfg.batch; ++i) b.push_back(flatten(corpus[draw.below(corpus.size())]));
        return b;
    };
    auto noise_batch = [&] {
        Batch b;
        for (int i = 0; i < cfg.batch; ++i) b.push_back(sample_noise(cfg.noise_dim, draw));
        return b;
    };
    int flat = 0;
    for (int it = 0; it < cfg.iterations; ++it) {
        GanPoint pt;
        pt.iteration = it;
        for (int c = 0; c < cfg.n_critic; ++c) {
            Batch fake;
            for (const auto& z : noise_batch()) fake.push_back(m.generator.forward(z));
            auto step = critic_loss(m.critic, real_batch(), fake, cfg.lambda_gp, draw);
            ac.step(m.critic.mutable_params(), step.grad);
            pt.critic_loss = step.loss;
            pt.wgap = step.wgap;
        }
        auto g = generator_loss(m.generator, m.critic, noise_batch(), real_batch(), m.shape, cfg);
        ag.step(m.generator.mutable_params(), g.grad);
        pt.generator_loss = g.loss;
        pt.occupancy = g.occupancy;
        m.curve.push_back(pt);
        flat = batch_variance(g.generated) < cfg.collapse_variance ? flat + 1 : 0;
        if (flat >= cfg.collapse_rounds)
            throw TrainingError("stage2", "generator collapsed: batch variance below " + std::to_string(cfg.collapse_variance) +
                                              " for " + std::to_string(flat) + " rounds at iteration " + std::to_string(it));
    }
    return m;
}

/// Median occupancy loss of generated batches against corpus batches.
inline double median_occupancy(const GanModel& m, const std::vector<NodePattern>& corpus, int batches, int batch,
                               int noise_dim, Rng& rng) {
    std::vector<double> v;
    for (int i = 0; i < batches; ++i) {
        Batch a, x;
        for (int j = 0; j < batch; ++j) {
            a.push_back(m.generator.forward(sample_noise(noise_dim, rng)));
            x.push_back(flatten(corpus[rng.below(corpus.size())]));
        }
        v.push_back(occupancy_loss(a, x, m.shape).value);
    }
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    return v[v.size() / 2];
}

/// Hard decoy pattern for node z from continuous scores: each (l, k) takes the
/// best-scoring slot not used by the node's data or earlier decoys at that time and
/// inside the satellite band; rows with no free slot stay empty.
inline NodePattern project_scores(const std::vector<double>& scores, const ResourcePlan& plan, int z) {
    const auto& d = plan.dims;
    const int L = d.time_slots, K = d.ues(z), q = d.freq_slots;
    const PatternShape s{L, K, q};
    if (static_cast<int>(scores.size()) != s.size()) throw ShapeError("score vector does not match the node pattern");
    const auto& X = plan.x[static_cast<std::size_t>(z)];
    NodePattern A(L, K, q, 0);
    for (int l = 0; l < L; ++l) {
        std::vector<std::uint8_t> busy(static_cast<std::size_t>(q), 0);
        for (int k = 0; k < K; ++k)
            for (int f = 0; f < q; ++f) busy[static_cast<std::size_t>(f)] |= X(l, k, f);
        for (int k = 0; k < K; ++k) {
            int best = -1;
            for (int f = 0; f < q; ++f) {
                if (busy[static_cast<std::size_t>(f)]) continue;
                if (d.is_satellite(z) && !plan.s(z, f)) continue;
                if (best < 0 || scores[s.at(l, k, f)] > scores[s.at(l, k, best)]) best = f;
            }
            if (best < 0) continue;
            A(l, k, best) = 1;
            busy[static_cast<std::size_t>(best)] = 1;
        }
    }
    return A;
}

/// Fills plan.a for every node from its generator (nodes without a model get no decoys).
inline ResourcePlan sample_adversarial_plan(const std::vector<const GanModel*>& models, ResourcePlan plan,
                                            int noise_dim, Rng& rng) {
    const auto& d = plan.dims;
    if (static_cast<int>(models.size()) != d.n_nodes()) throw ShapeError("one generator slot per node");
    for (int z = 0; z < d.n_nodes(); ++z) {
        auto& A = plan.a[static_cast<std::size_t>(z)];
        std::fill(A.v.begin(), A.v.end(), 0);
        if (!models[static_cast<std::size_t>(z)] || d.ues(z) == 0) continue;
        const auto scores = models[static_cast<std::size_t>(z)]->generator.forward(sample_noise(noise_dim, rng));
        A = project_scores(scores, plan, z);
    }
    return plan;
}

}  // namespace stnsec

#endif  // STNSEC_ADVGEN_HPP
