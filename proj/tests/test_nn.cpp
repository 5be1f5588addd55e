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

#include <cmath>
#include <sstream>

#include "stnsec/nn.hpp"

using namespace stnsec;

namespace {

Mlp random_net(Rng& r, int depth_max = 3, int width_max = 8, bool smooth = false) {
    std::vector<int> w{1 + static_cast<int>(r.below(static_cast<std::uint64_t>(width_max)))};
    std::vector<Activation> a;
    const int depth = 1 + static_cast<int>(r.below(static_cast<std::uint64_t>(depth_max)));
    for (int i = 0; i < depth; ++i) {
        w.push_back(1 + static_cast<int>(r.below(static_cast<std::uint64_t>(width_max))));
        static const Activation all[] = {Activation::identity, Activation::relu, Activation::sigmoid,
                                         Activation::elu, Activation::tanh};
        static const Activation soft[] = {Activation::identity, Activation::sigmoid, Activation::tanh};
        a.push_back(smooth ? soft[r.below(3)] : all[r.below(5)]);
    }
    return Mlp(w, a, r);
}

std::vector<double> random_vec(Rng& r, int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (auto& x : v) x = 2.0 * r.uniform() - 1.0;
    return v;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max({1e-6, std::abs(a), std::abs(b)}); }

}  // namespace

TEST(Forward, HandExamples) {
    Rng r(1);
    Mlp m({1, 1}, {Activation::identity}, r);
    m.mutable_params() = {2.0, 1.0};
    EXPECT_DOUBLE_EQ(m.forward({3.0})[0], 7.0);
    m.mutable_params() = {0.0, -0.25};
    EXPECT_DOUBLE_EQ(m.forward({3.0})[0], -0.25);
    EXPECT_THROW(m.forward({1.0, 2.0}), ShapeError);
}

TEST(Forward, MatrixProductOracle) {
    Rng r(2);
    Mlp m({3, 4, 2}, {Activation::relu, Activation::identity}, r);
    const std::vector<double> x{0.3, -0.7, 0.5};
    std::vector<double> h(4);
    for (int o = 0; o < 4; ++o) {
        double s = m.bias(0, o);
        for (int i = 0; i < 3; ++i) s += m.weight(0, o, i) * x[i];
        h[o] = std::max(s, 0.0);
    }
    const auto y = m.forward(x);
    for (int o = 0; o < 2; ++o) {
        double s = m.bias(1, o);
        for (int i = 0; i < 4; ++i) s += m.weight(1, o, i) * h[i];
        EXPECT_NEAR(y[o], s, 1e-15);
    }
    EXPECT_EQ(m.param_count(), dense_param_count({3, 4, 2}));
    EXPECT_EQ(dense_param_count({64, 64, 64, 8}), 64u * 64 + 64 + 64 * 64 + 64 + 64 * 8 + 8);
}

TEST(Backward, LinearWeightGradientIsInput) {
    Rng r(3);
    Mlp m({2, 1}, {Activation::identity}, r);
    Tape t;
    m.forward({0.4, -1.5}, t);
    const auto g = m.backward(t, {1.0});
    EXPECT_DOUBLE_EQ(g.params[0], 0.4);
    EXPECT_DOUBLE_EQ(g.params[1], -1.5);
    EXPECT_DOUBLE_EQ(g.params[2], 1.0);
}

TEST(Backward, FiniteDifferenceOracle) {
    Rng r(4);
    for (int trial = 0; trial < 20; ++trial) {
        Mlp m = random_net(r, 3, 8, true);
        const auto x = random_vec(r, m.input_width());
        const auto w = random_vec(r, m.output_width());
        auto f = [&](const Mlp& n) {
            const auto y = n.forward(x);
            double s = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i) s += w[i] * y[i];
            return s;
        };
        Tape t;
        m.forward(x, t);
        const auto g = m.backward(t, w);
        const auto fd = finite_difference_gradient(m, f, 1e-5);
        for (std::size_t i = 0; i < fd.size(); ++i) EXPECT_LT(rel_err(g.params[i], fd[i]), 1e-4) << trial << ":" << i;
        for (int i = 0; i < m.input_width(); ++i) {
            auto xp = x, xm = x;
            xp[i] += 1e-5;
            xm[i] -= 1e-5;
            auto fx = [&](const std::vector<double>& v) {
                const auto y = m.forward(v);
                double s = 0.0;
                for (std::size_t j = 0; j < y.size(); ++j) s += w[j] * y[j];
                return s;
            };
            EXPECT_LT(rel_err(g.input[i], (fx(xp) - fx(xm)) / 2e-5), 1e-4);
        }
    }
}

TEST(Backward, RectifierNetsAwayFromKinks) {
    Rng r(5);
    int checked = 0;
    for (int trial = 0; trial < 20; ++trial) {
        Mlp m({6, 16, 16, 1}, {Activation::relu, Activation::elu, Activation::identity}, r);
        const auto x = random_vec(r, 6);
        Tape t;
        m.forward(x, t);
        bool near_kink = false;
        for (std::size_t l = 0; l < 2; ++l)
            for (double z : t.pre[l]) near_kink |= std::abs(z) < 1e-3;
        if (near_kink) continue;
        ++checked;
        const auto g = m.backward(t, {1.0});
        const auto fd = finite_difference_gradient(m, [&](const Mlp& n) { return n.forward(x)[0]; });
        for (std::size_t i = 0; i < fd.size(); ++i) EXPECT_LT(rel_err(g.params[i], fd[i]), 1e-4);
    }
    EXPECT_GT(checked, 5);
}

TEST(Backward, DualTangentMatchesDirectionalDifference) {
    // Tangent of the parameter gradient under input direction u equals the
    // derivative of the parameter gradient along u.
    Rng r(6);
    for (int trial = 0; trial < 10; ++trial) {
        Mlp m = random_net(r, 3, 6, true);
        const auto x = random_vec(r, m.input_width());
        const auto u = random_vec(r, m.input_width());
        std::vector<Dual> xd(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) xd[i] = Dual(x[i], u[i]);
        TapeOf<Dual> t;
        m.run(xd, &t);
        GradientsOf<Dual> g;
        m.backprop(t, std::vector<Dual>(static_cast<std::size_t>(m.output_width()), Dual(1.0)), g);
        auto pg = [&](double h) {
            auto xs = x;
            for (std::size_t i = 0; i < x.size(); ++i) xs[i] += h * u[i];
            Tape tt;
            m.forward(xs, tt);
            return m.backward(tt, std::vector<double>(static_cast<std::size_t>(m.output_width()), 1.0)).params;
        };
        const auto up = pg(1e-5), down = pg(-1e-5);
        for (std::size_t i = 0; i < up.size(); ++i) {
            EXPECT_NEAR(g.params[i].v, pg(0.0)[i], 1e-12);
            EXPECT_LT(rel_err(g.params[i].d, (up[i] - down[i]) / 2e-5), 1e-4);
        }
    }
}

TEST(Backward, StaleTapeRejected) {
    Rng r(7);
    Mlp m({2, 2}, {Activation::relu}, r);
    Tape t;
    m.forward({1.0, 1.0}, t);
    m.sgd_update(std::vector<double>(m.param_count(), 0.1), 0.1);
    EXPECT_THROW(m.backward(t, {1.0, 1.0}), ShapeError);
    Mlp other = m;
    other.forward({1.0, 1.0}, t);
    EXPECT_THROW(m.backward(t, {1.0, 1.0}), ShapeError);
}

TEST(Sgd, Updates) {
    Rng r(8);
    Mlp m({1, 1}, {Activation::identity}, r);
    m.mutable_params() = {1.0, 0.0};
    const auto before = m.params();
    m.sgd_update({0.0, 0.0}, 0.05);
    EXPECT_EQ(m.params(), before);
    m.sgd_update({2.0, -1.0}, 0.05);
    EXPECT_DOUBLE_EQ(m.params()[0], 0.9);
    EXPECT_DOUBLE_EQ(m.params()[1], 0.05);
    EXPECT_THROW(m.sgd_update({NAN, 0.0}, 0.05), TrainingError);
    EXPECT_DOUBLE_EQ(m.params()[0], 0.9);
}

TEST(Sgd, ConvexQuadraticDescends) {
    // Linear model, squared loss: convex in the parameters.
    Rng r(9);
    Mlp m({3, 1}, {Activation::identity}, r);
    std::vector<std::vector<double>> xs;
    std::vector<double> ys;
    for (int i = 0; i < 16; ++i) {
        xs.push_back(random_vec(r, 3));
        ys.push_back(0.5 * xs.back()[0] - xs.back()[1] + 0.2);
    }
    double prev = 1e300;
    for (int step = 0; step < 100; ++step) {
        std::vector<double> g(m.param_count(), 0.0);
        double loss = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            Tape t;
            const double e = m.forward(xs[i], t)[0] - ys[i];
            loss += e * e / xs.size();
            const auto gi = m.backward(t, {2.0 * e / xs.size()});
            for (std::size_t j = 0; j < g.size(); ++j) g[j] += gi.params[j];
        }
        EXPECT_LE(loss, prev + 1e-15);
        prev = loss;
        m.sgd_update(g, 0.05);
    }
}

TEST(Persistence, RoundTrip) {
    Rng r(10);
    Mlp m({4, 5, 3}, {Activation::tanh, Activation::sigmoid}, r);
    std::stringstream ss;
    m.save(ss);
    const std::string bytes = ss.str();
    EXPECT_EQ(bytes.substr(0, 8), "STNMLP01");
    EXPECT_EQ(bytes.size(), 8 + 4 + 2 * 12 + 8 * m.param_count());
    Mlp back = Mlp::load(ss);
    EXPECT_EQ(back.params(), m.params());
    EXPECT_EQ(back.layers(), m.layers());
    EXPECT_EQ(back.checksum(), m.checksum());
    std::stringstream bad("STNMLP02xxxx");
    EXPECT_THROW(Mlp::load(bad), FormatError);
    std::stringstream cut(bytes.substr(0, bytes.size() - 3));
    EXPECT_THROW(Mlp::load(cut), FormatError);
}

TEST(Forward, Deterministic) {
    Rng a(11), b(11);
    Mlp m1({5, 64, 64, 3}, {Activation::relu, Activation::relu, Activation::identity}, a);
    Mlp m2({5, 64, 64, 3}, {Activation::relu, Activation::relu, Activation::identity}, b);
    EXPECT_EQ(m1.params(), m2.params());
    const std::vector<double> x{0.1, 0.2, 0.3, 0.4, 0.5};
    EXPECT_EQ(m1.forward(x), m2.forward(x));
}
