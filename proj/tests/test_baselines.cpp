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

#include <set>

#include "oracles.hpp"
#include "stnsec/baselines.hpp"
#include "stnsec/eavesdroppers.hpp"
#include "stnsec/metrics.hpp"

namespace {

using namespace stnsec;

LinkSet toy_links() {
    const double n0 = dbm_to_watt(-103.0);
    LinkSet l;
    l.sat_user = LinkModel::satellite(LinkKind::satellite_to_user, 5.0, 137.5, n0);
    l.sat_eve = LinkModel::satellite(LinkKind::satellite_to_eve, 3.0, 137.5, n0);
    l.terr_user = LinkModel::terrestrial(LinkKind::terrestrial_to_user, 1.0, 95.0, n0);
    l.terr_eve = LinkModel::terrestrial(LinkKind::terrestrial_to_eve, 0.75, 112.5, n0);
    l.tau_e = l.tau_u = db_to_linear(2.0);
    return l;
}

std::vector<double> budgets(const GridDims& d) {
    std::vector<double> p;
    for (int z = 0; z < d.n_nodes(); ++z) p.push_back(dbm_to_watt(d.is_satellite(z) ? 53.0 : 37.0));
    return p;
}

TEST(Hopper, HandValuesAndValidation) {
    LogisticHopper h(3.9, 0.3, 10);
    EXPECT_EQ(h.next(), 8);
    EXPECT_NEAR(h.state(), 0.819, 1e-12);
    EXPECT_THROW(LogisticHopper(4.0, 0.5, 8), DomainError);
    EXPECT_THROW(LogisticHopper(3.5, 0.3, 8), DomainError);
    EXPECT_THROW(LogisticHopper(3.9, 1.0, 8), DomainError);
    // The boundary value x = 1 maps to the last slot.
    LogisticHopper edge(4.0, 0.5 + 1e-9, 8);
    EXPECT_EQ(edge.next(), 7);
}

TEST(Hopper, DeterministicAndCovering) {
    LogisticHopper a(3.99, 0.123, 16), b(3.99, 0.123, 16);
    std::vector<int> hist(16, 0);
    for (int i = 0; i < 100000; ++i) {
        const int s = a.next();
        ASSERT_EQ(s, b.next());
        ++hist[s];
        ASSERT_GT(a.state(), 0.0);
        ASSERT_LT(a.state(), 1.0);
    }
    for (int c : hist) EXPECT_GT(c, 0);
}

TEST(AnFh, PowerSplitAndFeasibility) {
    const std::vector<GridDims> cases{GridDims{0, 1, 4, 4, {2}, true, true}, GridDims{1, 1, 4, 8, {2, 3}, true, true},
                                      GridDims{2, 2, 6, 12, {2, 1, 3, 4}, true, true}, GridDims{1, 2, 5, 4, {2, 2, 1}, true, false}};
    for (const auto& d : cases)
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            const auto p = an_fh_plan(d, make_hoppers(d.total_ues(), 3.99, d.freq_slots, seed), 0.3, budgets(d));
            const auto rep = validate(p);
            ASSERT_TRUE(rep.feasible()) << rep.summary();
            ASSERT_TRUE(oracle::violated_families(p).empty());
        }
    const GridDims d{0, 1, 2, 4, {2}, true, true};
    const auto pure = an_fh_plan(d, make_hoppers(2, 3.99, 4, 1), 0.0, {10.0});
    const auto half = an_fh_plan(d, make_hoppers(2, 3.99, 4, 1), 0.5, {10.0});
    EXPECT_EQ(pure.pa[0](0, 0), 0.0);
    EXPECT_EQ(pure.pd[0](0, 0), 5.0);
    EXPECT_EQ(half.pd[0](0, 0), 2.5);
    EXPECT_EQ(pure.x, half.x);
    EXPECT_EQ(std::count(half.a[0].v.begin(), half.a[0].v.end(), 1), 0);
}

TEST(AnFh, ObjectiveUsesSelfNoise) {
    const auto links = toy_links();
    const GridDims d{0, 1, 1, 4, {1}, true, true};
    const auto p = an_fh_plan(d, make_hoppers(1, 3.99, 4, 2), 0.3, {1.0});
    const auto rep = plan_objective(p, links, 0.2, 0.1);
    EXPECT_NEAR(rep.ues[0].sp, sp_artificial_noise(links.secrecy(false, 1.0, 0.0, 4), 0.3), 1e-15);
    EXPECT_NEAR(rep.ues[0].rtp, reliability_probability(links.reliability(false, 0.7)), 1e-15);
}

TEST(Greedy, LowestSlotsAndFeasible) {
    const GridDims d{0, 1, 4, 4, {2}, true, true};
    const auto p = greedy_plan(d, {1.0});
    EXPECT_EQ(p.x[0].slot_of(0, 0), 0);
    EXPECT_EQ(p.x[0].slot_of(0, 1), 1);
    EXPECT_TRUE(validate(p).feasible());
    const GridDims mixed{2, 1, 6, 12, {3, 2, 4}, true, true};
    const auto pm = greedy_plan(mixed, budgets(mixed));
    EXPECT_TRUE(validate(pm).feasible()) << validate(pm).summary();
    EXPECT_THROW(greedy_plan(GridDims{0, 1, 2, 2, {3}, true, false}, {1.0}), std::exception);
}

TEST(Greedy, NeverBeatsBruteForce) {
    const auto links = toy_links();
    const std::vector<GridDims> tiny{GridDims{0, 1, 2, 2, {1}, true, true}, GridDims{0, 1, 2, 3, {2}, true, true},
                                     GridDims{0, 1, 3, 3, {1}, true, true}};
    for (const auto& d : tiny) {
        const double pmax = 2.0;
        const double per_ue = pmax / d.ues(0);
        const auto g = greedy_plan(d, {pmax});
        const double greedy = plan_objective(g, links, 0.2, 0.1).objective;
        EnumerationOptions o;
        o.data_power = {0.5 * per_ue, per_ue};
        o.adversarial_power = {0.5 * per_ue};
        o.budget = pmax;
        double best = -1.0;
        enumerate_feasible_plans(d, o, [&](const ResourcePlan& p) {
            best = std::max(best, plan_objective(p, links, 0.2, 0.1).objective);
            return true;
        });
        EXPECT_LE(greedy, best + 1e-12);
    }
}

TEST(Greedy, MorePredictableThanAnFh) {
    const auto links = toy_links();
    const GridDims d{0, 1, 8, 8, {2}, true, true};
    const auto greedy = greedy_plan(d, budgets(d));
    const PlanSource gsrc = [greedy](long) { return greedy; };
    const PlanSource asrc = [d](long period) {
        return an_fh_plan(d, make_hoppers(2, 3.99, 8, static_cast<std::uint64_t>(period)), 0.3, budgets(d));
    };
    EveConfig c;
    c.kind = EveKind::predictive;
    c.monitored = 4;
    int wins = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng r1(seed), r2(seed);
        auto eg = make_eve(c, gsrc, links, 8, 8, r1);
        auto ea = make_eve(c, asrc, links, 8, 8, r2);
        Rng a(100 + seed), b(100 + seed);
        const double sg = empirical_sp(gsrc, 0, 200, eg, links, a).sp.estimate;
        const double sa = empirical_sp(asrc, 0, 200, ea, links, b).sp.estimate;
        wins += sg <= sa;
    }
    EXPECT_GE(wins, 4);
}

}  // namespace
