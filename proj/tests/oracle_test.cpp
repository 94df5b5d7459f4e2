// Copyright 2026 The cmdp-lsvi Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cmdp/env.hpp"
#include "cmdp/lp.hpp"
#include "cmdp/oracle.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

namespace cmdp {
namespace {

LinearProgram make_lp(std::initializer_list<std::initializer_list<double>> A, std::initializer_list<double> b,
                      std::initializer_list<double> c) {
    LinearProgram lp;
    lp.A.resize(static_cast<Eigen::Index>(A.size()), static_cast<Eigen::Index>(c.size()));
    Eigen::Index r = 0;
    for (const auto& row : A) {
        Eigen::Index k = 0;
        for (double v : row) lp.A(r, k++) = v;
        ++r;
    }
    lp.b = Eigen::Map<const Vector>(std::data(b), static_cast<Eigen::Index>(b.size()));
    lp.c = Eigen::Map<const Vector>(std::data(c), static_cast<Eigen::Index>(c.size()));
    return lp;
}

TEST(SimplexTest, SmallKnownOptimum) {
    // max 3x + 5y  s.t. x <= 4, 2y <= 12, 3x + 2y <= 18  (slacks s1..s3)
    const auto lp = make_lp({{1, 0, 1, 0, 0}, {0, 2, 0, 1, 0}, {3, 2, 0, 0, 1}}, {4, 12, 18}, {3, 5, 0, 0, 0});
    const auto sol = solve_standard_form(lp);
    ASSERT_EQ(sol.status, LpStatus::optimal);
    EXPECT_NEAR(sol.objective, 36.0, 1e-9);
    EXPECT_NEAR(sol.x[0], 2.0, 1e-9);
    EXPECT_NEAR(sol.x[1], 6.0, 1e-9);
}

TEST(SimplexTest, EqualityConstraintsNeedPhaseOne) {
    // max x + y  s.t. x + y + z = 1, x - y = 0
    const auto lp = make_lp({{1, 1, 1}, {1, -1, 0}}, {1, 0}, {1, 1, 0});
    const auto sol = solve_standard_form(lp);
    ASSERT_EQ(sol.status, LpStatus::optimal);
    EXPECT_NEAR(sol.objective, 1.0, 1e-9);
    EXPECT_NEAR(sol.x[0], 0.5, 1e-9);
}

TEST(SimplexTest, DetectsInfeasibility) {
    const auto lp = make_lp({{1, 1}, {1, 1}}, {1, 2}, {1, 0});
    const auto sol = solve_standard_form(lp);
    EXPECT_EQ(sol.status, LpStatus::infeasible);
    EXPECT_GT(sol.phase_one_residual, 1e-6);
}

TEST(SimplexTest, DetectsUnboundedness) {
    const auto lp = make_lp({{1, -1}}, {1}, {0, 1});
    EXPECT_EQ(solve_standard_form(lp).status, LpStatus::unbounded);
}

TEST(SimplexTest, HandlesRedundantRowsAndNegativeRightHandSides) {
    const auto lp = make_lp({{1, 1, 0}, {2, 2, 0}, {-1, 0, -1}}, {2, 4, -1}, {1, 2, 0});
    const auto sol = solve_standard_form(lp);
    ASSERT_EQ(sol.status, LpStatus::optimal);
    EXPECT_NEAR(sol.objective, 4.0, 1e-9);
}

TEST(SimplexTest, AgreesWithBruteForceOnRandomBoxes) {
    // max c.x over x in [0,u]^n as a standard-form problem with slacks:
    // the optimum takes x_i = u_i exactly when c_i > 0.
    RandomStream rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = testing::uniform_int(rng, 1, 6);
        LinearProgram lp;
        lp.A = Matrix::Zero(n, 2 * n);
        lp.b = Vector(n);
        lp.c = Vector::Zero(2 * n);
        double expected = 0.0;
        for (int i = 0; i < n; ++i) {
            lp.A(i, i) = 1.0;
            lp.A(i, n + i) = 1.0;
            lp.b[i] = testing::uniform(rng, 0.1, 3.0);
            lp.c[i] = testing::uniform(rng, -1.0, 1.0);
            expected += std::max(lp.c[i], 0.0) * lp.b[i];
        }
        const auto sol = solve_standard_form(lp);
        ASSERT_EQ(sol.status, LpStatus::optimal);
        EXPECT_NEAR(sol.objective, expected, 1e-9);
    }
}

TabularCMDP chain(int H, double reward, double utility, double threshold) {
    TabularCMDP m;
    m.n_states = 2;
    m.n_actions = 2;
    m.horizon = H;
    m.initial_state = 0;
    m.threshold = threshold;
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < 2; ++s)
            for (int a = 0; a < 2; ++a) {
                const int next = (s + a) % 2;
                m.transition.push_back(next == 0 ? 1.0 : 0.0);
                m.transition.push_back(next == 1 ? 1.0 : 0.0);
                m.reward.push_back(reward);
                m.utility.push_back(utility);
            }
    return m;
}

/// Binding toy: action 0 pays reward, action 1 pays utility; moving states
/// changes the payoffs.
TabularCMDP binding_toy() {
    TabularCMDP m;
    m.n_states = 2;
    m.n_actions = 2;
    m.horizon = 2;
    m.initial_state = 0;
    m.transition = {0.7, 0.3, 0.2, 0.8, 0.5, 0.5, 0.1, 0.9,
                    0.6, 0.4, 0.3, 0.7, 0.4, 0.6, 0.8, 0.2};
    m.reward = {0.9, 0.1, 0.6, 0.3, 0.8, 0.2, 0.7, 0.0};
    m.utility = {0.1, 0.8, 0.2, 0.9, 0.0, 0.7, 0.3, 1.0};
    m.threshold = 1.0;
    m.validate();
    return m;
}

TEST(PolicyEvalTest, SingleStep) {
    RandomStream rng(1);
    const auto m = testing::random_cmdp(rng, 3, 3, 1, 0.5);
    StepPolicy pi(1, 3, 3);
    pi(0, 0, 0) = 0.2;
    pi(0, 0, 1) = 0.5;
    pi(0, 0, 2) = 0.3;
    const auto v = policy_eval_dp(m, pi);
    EXPECT_NEAR(v.v_r1, 0.2 * m.r(0, 0, 0) + 0.5 * m.r(0, 0, 1) + 0.3 * m.r(0, 0, 2), 1e-15);
    EXPECT_NEAR(v.v_g1, 0.2 * m.g(0, 0, 0) + 0.5 * m.g(0, 0, 1) + 0.3 * m.g(0, 0, 2), 1e-15);
}

TEST(PolicyEvalTest, RewardOneChain) {
    const auto m = chain(5, 1.0, 0.0, 1.0);
    const auto v = policy_eval_dp(m, StepPolicy(5, 2, 2));
    EXPECT_DOUBLE_EQ(v.v_r1, 5.0);
    EXPECT_DOUBLE_EQ(v.v_g1, 0.0);
}

TEST(PolicyEvalTest, MatchesMonteCarlo) {
    RandomStream rng(2);
    const auto m = testing::random_cmdp(rng, 4, 2, 3, 0.5);
    StepPolicy pi(3, 4, 2);
    for (int h = 0; h < 3; ++h)
        for (int s = 0; s < 4; ++s) {
            const auto p = testing::random_distribution(rng, 2);
            pi(h, s, 0) = p[0];
            pi(h, s, 1) = p[1];
        }
    const auto exact = policy_eval_dp(m, pi);
    RandomStream sampler(3);
    const auto [mc_r, mc_g] = testing::monte_carlo_values(m, pi, 1'000'000, sampler);
    EXPECT_NEAR(exact.v_r1, mc_r, 3e-3);
    EXPECT_NEAR(exact.v_g1, mc_g, 3e-3);
}

TEST(PolicyEvalTest, JobSchedulerRealizedUtilityMatchesExpectedTable) {
    const auto m = make_job_scheduler();
    StepPolicy pi(m.horizon, m.n_states, m.n_actions);
    const auto exact = policy_eval_dp(m, pi);
    RandomStream sampler(4);
    const auto [mc_r, mc_g] = testing::monte_carlo_values(m, pi, 200'000, sampler);
    EXPECT_NEAR(exact.v_r1, mc_r, 1e-2);
    EXPECT_NEAR(exact.v_g1, mc_g, 1e-2);
}

TEST(SlaterMarginTest, JobSchedulerMatchesHandRecursion) {
    // V_h(x) = max(V_{h+1}(x), 0.8 (1 + V_{h+1}(x-2)) + 0.1 (1/2 + V_{h+1}(x-1)) + 0.1 V_{h+1}(x))
    // with x-2, x-1 floored at 0 and the utility shrinking accordingly.
    std::vector<double> v(10, 0.0);
    for (int h = 0; h < 10; ++h) {
        std::vector<double> next(10);
        for (int x = 0; x < 10; ++x) {
            const int two = std::max(x - 2, 0), one = std::max(x - 1, 0);
            const double send = 0.8 * ((x - two) / 2.0 + v[static_cast<std::size_t>(two)]) +
                                0.1 * ((x - one) / 2.0 + v[static_cast<std::size_t>(one)]) +
                                0.1 * v[static_cast<std::size_t>(x)];
            next[static_cast<std::size_t>(x)] = std::max(v[static_cast<std::size_t>(x)], send);
        }
        v = next;
    }
    const double margin = slater_margin(make_job_scheduler());
    EXPECT_NEAR(margin, v[9] - 4.0, 1e-12);
    EXPECT_NEAR(margin, 0.4997912551500008, 1e-12);
    EXPECT_NEAR(margin, 0.5, 1e-3);
}

TEST(SlaterMarginTest, ConstantUtilities) {
    TabularCMDP ones = chain(5, 0.5, 1.0, 4.0);
    EXPECT_DOUBLE_EQ(slater_margin(ones), 1.0);
    TabularCMDP zeros = chain(5, 0.5, 0.0, 1.0);
    EXPECT_DOUBLE_EQ(slater_margin(zeros), -1.0);
}

TEST(OccupancyLpTest, ZeroThresholdIsUnconstrainedOptimum) {
    RandomStream rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        const auto m = testing::random_cmdp(rng, testing::uniform_int(rng, 1, 5), testing::uniform_int(rng, 1, 3),
                                            testing::uniform_int(rng, 1, 4), 0.5);
        const auto lp = solve_occupancy_lp(m, 0.0);
        ASSERT_TRUE(lp.has_value());
        EXPECT_NEAR(lp->optimal_value, optimal_value_dp(m, 1.0, 0.0).value, 1e-8);
    }
}

TEST(OccupancyLpTest, SlackConstraintChangesNothing) {
    RandomStream rng(6);
    const auto m = testing::random_cmdp(rng, 4, 3, 3, 0.5);
    const auto unconstrained = optimal_value_dp(m, 1.0, 0.0);
    const double achieved = policy_eval_dp(m, unconstrained.policy).v_g1;
    const auto slack = solve_occupancy_lp(m, 0.5 * achieved);
    const auto free = solve_occupancy_lp(m, 0.0);
    ASSERT_TRUE(slack && free);
    EXPECT_NEAR(slack->optimal_value, free->optimal_value, 1e-9);
}

TEST(OccupancyLpTest, InfeasibleThreshold) {
    RandomStream rng(7);
    const auto m = testing::random_cmdp(rng, 3, 2, 3, 0.5);
    const double best = optimal_value_dp(m, 0.0, 1.0).value;
    EXPECT_FALSE(solve_occupancy_lp(m, best + 0.01).has_value());
    EXPECT_TRUE(solve_occupancy_lp(m, best - 1e-4).has_value());
}

TEST(OccupancyLpTest, BindingToyBeatsEveryGridPolicy) {
    const auto m = binding_toy();
    const double free_utility = policy_eval_dp(m, optimal_value_dp(m, 1.0, 0.0).policy).v_g1;
    ASSERT_LT(free_utility, m.threshold);  // constraint binds
    const auto lp = solve_occupancy_lp(m, m.threshold);
    ASSERT_TRUE(lp.has_value());
    const auto extracted = policy_eval_dp(m, lp->policy);
    EXPECT_GE(extracted.v_g1, m.threshold - 1e-6);
    EXPECT_NEAR(extracted.v_r1, lp->optimal_value, 1e-6);

    RandomStream rng(8);
    long feasible = 0, beaten = 0;
    testing::for_each_grid_policy(m, 20, 1'000'000, 0, rng, [&](const StepPolicy& pi) {
        const auto v = policy_eval_dp(m, pi);
        if (v.v_g1 < m.threshold) return;
        ++feasible;
        if (v.v_r1 > lp->optimal_value + 1e-6) ++beaten;
    });
    EXPECT_GT(feasible, 0);
    EXPECT_EQ(beaten, 0);
}

TEST(OccupancyLpTest, OccupancyInvariantsAndExtraction) {
    RandomStream rng(10);
    for (int trial = 0; trial < 20; ++trial) {
        const auto m = testing::random_cmdp(rng, testing::uniform_int(rng, 2, 5), testing::uniform_int(rng, 2, 3),
                                            testing::uniform_int(rng, 1, 4), 0.8);
        const auto lp = solve_occupancy_lp(m, m.threshold);
        ASSERT_TRUE(lp.has_value());
        EXPECT_LE(occupancy_residual(m, lp->occupancy), 1e-8);
        const auto v = policy_eval_dp(m, lp->policy);
        EXPECT_NEAR(v.v_r1, lp->optimal_value, 1e-6);
        EXPECT_GE(v.v_g1, m.threshold - 1e-6);
        EXPECT_NO_THROW(lp->policy.validate());
    }
}

TEST(OccupancyLpTest, StrongDuality) {
    RandomStream rng(11);
    for (int trial = 0; trial < 8; ++trial) {
        const auto m = testing::random_cmdp(rng, testing::uniform_int(rng, 2, 4), 2, testing::uniform_int(rng, 1, 3), 0.8);
        const double gamma = slater_margin(m);
        ASSERT_GT(gamma, 0.0);
        const double xi = 2.0 * m.horizon / gamma;
        const auto lp = solve_occupancy_lp(m, m.threshold);
        ASSERT_TRUE(lp.has_value());
        EXPECT_NEAR(testing::dual_grid_minimum(m, m.threshold, 10.0 * xi), lp->optimal_value, 1e-3);
    }
}

TEST(OccupancyLpTest, JobSchedulerOptimum) {
    const auto m = make_job_scheduler();
    const auto lp = solve_occupancy_lp(m, m.threshold);
    ASSERT_TRUE(lp.has_value());
    EXPECT_NEAR(lp->optimal_value, 9.058823529411764, 1e-8);
    EXPECT_NEAR(optimal_value_dp(m, 1.0, 0.0).value, 10.0, 1e-12);
    const auto v = policy_eval_dp(m, lp->policy);
    EXPECT_NEAR(v.v_g1, 4.0, 1e-8);
    EXPECT_LE(occupancy_residual(m, lp->occupancy), 1e-8);
}

TEST(PolicyFromOccupancyTest, UniformOnUnreachedStates) {
    OccupancyMeasure occ{1, 2, 2, {0.25, 0.75, 0.0, 0.0}};
    const auto pi = policy_from_occupancy(occ);
    EXPECT_DOUBLE_EQ(pi(0, 0, 1), 0.75);
    EXPECT_DOUBLE_EQ(pi(0, 1, 0), 0.5);
    EXPECT_DOUBLE_EQ(pi(0, 1, 1), 0.5);
}

}  // namespace
}  // namespace cmdp
