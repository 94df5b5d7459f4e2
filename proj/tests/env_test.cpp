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
#include "cmdp/tabular.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <map>

namespace cmdp {
namespace {

TabularCMDP two_by_two() {
    TabularCMDP m;
    m.n_states = 2;
    m.n_actions = 2;
    m.horizon = 2;
    m.initial_state = 0;
    m.threshold = 1.0;
    m.transition = {1, 0, 0, 1, 0.5, 0.5, 0, 1,  // h = 0
                    1, 0, 0, 1, 0.5, 0.5, 0, 1};
    m.reward = {1, 0, 0.5, 0.25, 1, 0, 0.5, 0.25};
    m.utility = {0, 1, 0.2, 0.4, 0, 1, 0.2, 0.4};
    return m;
}

TEST(TabularCMDPTest, ValidateCatchesBadTables) {
    auto m = two_by_two();
    EXPECT_NO_THROW(m.validate());
    auto bad = m;
    bad.transition[0] = 0.9;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    bad = m;
    bad.reward[1] = 1.5;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    bad = m;
    bad.threshold = 0.0;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    bad = m;
    bad.threshold = 2.5;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    bad = m;
    bad.initial_state = 2;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(TabularEnvTest, ResetReturnsInitialState) {
    auto m = two_by_two();
    TabularEnv env(m);
    EXPECT_EQ(env.reset(), 0);
    EXPECT_EQ(env.current_step(), 0);
    EXPECT_EQ(env.reset(), 0);

    TabularEnv jobs(make_job_scheduler());
    EXPECT_EQ(jobs.reset(), 9);
    EXPECT_EQ(jobs.reset(), 9);
}

TEST(TabularEnvTest, SteppingPastHorizonIsAnError) {
    TabularEnv env(two_by_two());
    RandomStream rng(1);
    env.reset();
    env.step(0, rng);
    env.step(0, rng);
    EXPECT_THROW(env.step(0, rng), std::logic_error);
    env.reset();
    EXPECT_NO_THROW(env.step(1, rng));
    EXPECT_THROW(env.step(2, rng), std::out_of_range);
}

TEST(TabularEnvTest, OneHotFeatures) {
    TabularEnv env(two_by_two());
    EXPECT_EQ(env.feature_dim(), 4);
    Vector e0(4), e3(4);
    e0 << 1, 0, 0, 0;
    e3 << 0, 0, 0, 1;
    EXPECT_EQ(env.features_of(0, 0).values(), e0);
    EXPECT_EQ(env.features_of(1, 1).values(), e3);
    for (int s = 0; s < 2; ++s)
        for (int a = 0; a < 2; ++a) EXPECT_DOUBLE_EQ(env.features_of(s, a).values().norm(), 1.0);
    EXPECT_THROW(env.features_of(2, 0), std::out_of_range);
    EXPECT_THROW(env.features_of(0, -1), std::out_of_range);
}

TEST(TabularEnvTest, EmbeddingReproducesTablesLinearly) {
    RandomStream rng(21);
    const auto m = testing::random_cmdp(rng, 4, 3, 3, 0.5);
    TabularEnv env(m);
    for (int h = 0; h < m.horizon; ++h) {
        Vector theta_r(env.feature_dim()), theta_g(env.feature_dim());
        for (int s = 0; s < m.n_states; ++s)
            for (int a = 0; a < m.n_actions; ++a) {
                theta_r[s * m.n_actions + a] = m.r(h, s, a);
                theta_g[s * m.n_actions + a] = m.g(h, s, a);
            }
        for (int s = 0; s < m.n_states; ++s)
            for (int a = 0; a < m.n_actions; ++a) {
                EXPECT_EQ(env.features_of(s, a).values().dot(theta_r), m.r(h, s, a));
                EXPECT_EQ(env.features_of(s, a).values().dot(theta_g), m.g(h, s, a));
            }
    }
}

TEST(TabularEnvTest, EmpiricalTransitionFrequencies) {
    RandomStream rng(4);
    const auto m = testing::random_cmdp(rng, 5, 2, 2, 0.5);
    RandomStream sampler(99);
    const int h = 1, s = 3, a = 1;
    std::vector<double> counts(5, 0.0);
    const int n = 100000;
    TabularCMDP shifted = m;
    shifted.initial_state = s;
    for (int x = 0; x < m.n_states; ++x)
        for (int b = 0; b < m.n_actions; ++b)
            for (int y = 0; y < m.n_states; ++y)
                shifted.transition[shifted.transition_index(0, x, b, y)] = m.p(h, x, b, y);
    TabularEnv shifted_env(shifted);
    for (int i = 0; i < n; ++i) {
        shifted_env.reset();
        counts[static_cast<std::size_t>(shifted_env.step(a, sampler).next_state)] += 1.0;
    }
    double tv = 0.0;
    for (int y = 0; y < 5; ++y) tv += std::abs(counts[static_cast<std::size_t>(y)] / n - m.p(h, s, a, y));
    EXPECT_LE(0.5 * tv, 0.01);
}

TEST(JobSchedulerTest, Shape) {
    const auto m = make_job_scheduler();
    EXPECT_EQ(m.n_states, 10);
    EXPECT_EQ(m.n_actions, 2);
    EXPECT_EQ(m.horizon, 10);
    EXPECT_EQ(m.initial_state, 9);
    EXPECT_DOUBLE_EQ(m.threshold, 4.0);
}

TEST(JobSchedulerTest, Transitions) {
    const auto m = make_job_scheduler();
    for (int h = 0; h < m.horizon; ++h) {
        EXPECT_DOUBLE_EQ(m.p(h, 9, 1, 7), 0.8);
        EXPECT_DOUBLE_EQ(m.p(h, 9, 1, 8), 0.1);
        EXPECT_DOUBLE_EQ(m.p(h, 9, 1, 9), 0.1);
        for (int x = 0; x < 10; ++x) EXPECT_DOUBLE_EQ(m.p(h, x, 0, x), 1.0);
        // x = 1: max{1-2,0} = 0 w.p. 0.8 and max{1-1,0} = 0 w.p. 0.1
        EXPECT_NEAR(m.p(h, 1, 1, 0), 0.9, 1e-15);
        EXPECT_NEAR(m.p(h, 1, 1, 1), 0.1, 1e-15);
    }
}

TEST(JobSchedulerTest, StepDependentReward) {
    const auto m = make_job_scheduler();
    // 1-based steps 3..6 are expensive
    for (int h = 0; h < m.horizon; ++h) {
        const bool expensive = h >= 2 && h <= 5;
        EXPECT_DOUBLE_EQ(m.r(h, 9, 1), expensive ? 1.0 - 0.9 : 1.0 - 0.2);
        EXPECT_DOUBLE_EQ(m.r(h, 9, 0), 1.0);
    }
    EXPECT_NEAR(m.r(3, 9, 1), 0.1, 1e-15);  // step 4
    EXPECT_DOUBLE_EQ(m.r(0, 9, 1), 0.8);    // step 1
}

TEST(JobSchedulerTest, RealizedAndExpectedUtility) {
    const auto m = make_job_scheduler();
    EXPECT_DOUBLE_EQ(m.realized_utility(0, 9, 1, 7), 1.0);
    EXPECT_DOUBLE_EQ(m.realized_utility(0, 9, 1, 8), 0.5);
    EXPECT_DOUBLE_EQ(m.realized_utility(0, 9, 1, 9), 0.0);
    EXPECT_NEAR(m.g(0, 9, 1), 0.8 * 1.0 + 0.1 * 0.5, 1e-15);
    EXPECT_NEAR(m.g(0, 1, 1), 0.9 * 0.5, 1e-15);
    EXPECT_DOUBLE_EQ(m.g(0, 5, 0), 0.0);
}

TEST(JobSchedulerTest, IdleKeepsStateAndSampledStepsMatch) {
    TabularEnv env(make_job_scheduler());
    RandomStream rng(8);
    std::map<int, int> next_counts;
    for (int i = 0; i < 20000; ++i) {
        env.reset();
        const auto step = env.step(1, rng);
        EXPECT_EQ(step.state, 9);
        EXPECT_DOUBLE_EQ(step.reward, 0.8);
        ++next_counts[step.next_state];
        const auto idle = env.step(0, rng);
        EXPECT_EQ(idle.next_state, idle.state);
        EXPECT_DOUBLE_EQ(idle.utility, 0.0);
    }
    EXPECT_EQ(next_counts.size(), 3u);
    EXPECT_NEAR(next_counts[7] / 20000.0, 0.8, 0.01);
    EXPECT_NEAR(next_counts[8] / 20000.0, 0.1, 0.01);
    EXPECT_NEAR(next_counts[9] / 20000.0, 0.1, 0.01);
}

TEST(JobSchedulerTest, EpisodeUtilityTelescopes) {
    TabularEnv env(make_job_scheduler());
    RandomStream rng(12);
    for (int episode = 0; episode < 2000; ++episode) {
        env.reset();
        double total = 0.0;
        int last = 9;
        for (int h = 0; h < env.horizon(); ++h) {
            const auto step = env.step(rng.uniform() < 0.6 ? 1 : 0, rng);
            EXPECT_GE(step.utility, 0.0);
            EXPECT_LE(step.utility, 1.0);
            total += step.utility;
            last = step.next_state;
        }
        EXPECT_EQ(total, (9 - last) / 2.0);
    }
}

TEST(TabularIoTest, RoundTripIsLossless) {
    RandomStream rng(31);
    const auto path = std::filesystem::temp_directory_path() / "cmdp_io_roundtrip.json";
    for (const auto& m : {make_job_scheduler(), testing::random_cmdp(rng, 3, 2, 4, 0.7)}) {
        save_tabular(m, path.string());
        const auto back = load_tabular(path.string());
        EXPECT_EQ(back.n_states, m.n_states);
        EXPECT_EQ(back.n_actions, m.n_actions);
        EXPECT_EQ(back.horizon, m.horizon);
        EXPECT_EQ(back.initial_state, m.initial_state);
        EXPECT_EQ(back.threshold, m.threshold);
        EXPECT_EQ(back.transition, m.transition);
        EXPECT_EQ(back.reward, m.reward);
        EXPECT_EQ(back.utility, m.utility);
        EXPECT_EQ(back.utility_on_transition, m.utility_on_transition);
    }
    std::filesystem::remove(path);
}

TEST(TabularIoTest, RejectsMalformedDescriptions) {
    auto j = to_json(make_job_scheduler());
    j["format"] = "something-else";
    EXPECT_THROW(tabular_from_json(j), std::invalid_argument);
    j = to_json(make_job_scheduler());
    j["reward"].erase(0);
    EXPECT_THROW(tabular_from_json(j), std::invalid_argument);
    j = to_json(make_job_scheduler());
    j.erase("threshold");
    EXPECT_ANY_THROW(tabular_from_json(j));
}

}  // namespace
}  // namespace cmdp
