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

// Episodic CMDP environments with bandit feedback.

#pragma once

#include "cmdp/linalg.hpp"
#include "cmdp/rng.hpp"
#include "cmdp/tabular.hpp"

#include <algorithm>
#include <concepts>
#include <span>
#include <stdexcept>
#include <vector>

namespace cmdp {

struct EpisodeStep {
    int state = 0;
    int action = 0;
    double reward = 0.0;
    double utility = 0.0;
    int next_state = 0;
};

/// What the agent needs from an environment: a fixed start state, sampled
/// transitions, and a feature map.
template <class E>
concept EpisodicEnvironment = requires(E env, const E cenv, int action, RandomStream& rng,
                                       typename E::state_type state) {
    { env.reset() } -> std::same_as<typename E::state_type>;
    { env.step(action, rng) } -> std::same_as<EpisodeStep>;
    { cenv.features_of(state, action) } -> std::convertible_to<FeatureVector>;
    { cenv.feature_dim() } -> std::convertible_to<int>;
    { cenv.action_count() } -> std::convertible_to<int>;
    { cenv.horizon() } -> std::convertible_to<int>;
};

/**
 * Simulator for a TabularCMDP with the canonical one-hot embedding
 * phi(s, a) = e_{s*A + a} of dimension S*A.
 *
 * Emitted utilities are the realized ones (utility_on_transition when the
 * model has it), while oracles work with the expected table.
 */
class TabularEnv {
  public:
    using state_type = int;

    explicit TabularEnv(TabularCMDP model) : model_(std::move(model)) {
        model_.validate();
        build_features();
    }

    int reset() {
        step_ = 0;
        state_ = model_.initial_state;
        return state_;
    }

    EpisodeStep step(int action, RandomStream& rng) {
        if (step_ >= model_.horizon)
            throw std::logic_error("TabularEnv::step: episode already reached the horizon");
        check_action(action);
        const std::size_t row = model_.transition_index(step_, state_, action, 0);
        const std::span<const double> probs(model_.transition.data() + row,
                                            static_cast<std::size_t>(model_.n_states));
        const int next = static_cast<int>(rng.categorical(probs));
        EpisodeStep out{state_, action, model_.r(step_, state_, action),
                        model_.realized_utility(step_, state_, action, next), next};
        state_ = next;
        ++step_;
        return out;
    }

    const FeatureVector& features_of(int state, int action) const {
        if (state < 0 || state >= model_.n_states)
            throw std::out_of_range("TabularEnv::features_of: state out of range");
        check_action(action);
        return features_[static_cast<std::size_t>(state) * model_.n_actions + action];
    }

    /// phi(state, a) for every action, contiguous.
    std::span<const FeatureVector> features_at(int state) const {
        if (state < 0 || state >= model_.n_states)
            throw std::out_of_range("TabularEnv::features_at: state out of range");
        return {features_.data() + static_cast<std::size_t>(state) * model_.n_actions,
                static_cast<std::size_t>(model_.n_actions)};
    }

    int feature_dim() const { return model_.n_states * model_.n_actions; }
    int action_count() const { return model_.n_actions; }
    int horizon() const { return model_.horizon; }
    int current_step() const { return step_; }
    int current_state() const { return state_; }
    const TabularCMDP& model() const { return model_; }

  private:
    void check_action(int action) const {
        if (action < 0 || action >= model_.n_actions)
            throw std::out_of_range("TabularEnv: action out of range");
    }

    void build_features() {
        const int d = feature_dim();
        features_.reserve(static_cast<std::size_t>(d));
        for (int i = 0; i < d; ++i) features_.push_back(FeatureVector::one_hot(d, i));
    }

    TabularCMDP model_;
    std::vector<FeatureVector> features_;
    int step_ = 0;
    int state_ = 0;
};

/**
 * Job scheduling benchmark: 10 states (jobs left), 2 actions (idle / send two
 * jobs), horizon 10, episodes start with a full stack of 9 jobs.
 *
 * Sending (a = 1) clears two jobs w.p. 0.8, one job w.p. 0.1 and none
 * otherwise, clamped at zero; idling keeps the state. Reward is 1 - 0.9a on
 * steps 3..6 (1-based, inclusive) and 1 - 0.2a elsewhere. Utility is the
 * realized (x - x') / 2, and the episode target is b = 4.
 */
inline TabularCMDP make_job_scheduler() {
    TabularCMDP m;
    m.n_states = 10;
    m.n_actions = 2;
    m.horizon = 10;
    m.initial_state = 9;
    m.threshold = 4.0;
    const std::size_t pairs = m.pair_count();
    m.transition.assign(pairs * m.n_states, 0.0);
    m.reward.assign(pairs, 0.0);
    std::vector<double> realized(pairs * m.n_states, 0.0);
    for (int h = 0; h < m.horizon; ++h) {
        const bool expensive = h + 1 >= 3 && h + 1 <= 6;
        for (int x = 0; x < m.n_states; ++x) {
            for (int a = 0; a < m.n_actions; ++a) {
                m.reward[m.pair_index(h, x, a)] = expensive ? 1.0 - 0.9 * a : 1.0 - 0.2 * a;
                const std::pair<double, int> branches[] = {
                    {0.8, std::max(x - 2 * a, 0)}, {0.1, std::max(x - a, 0)}, {0.1, x}};
                for (auto [prob, next] : branches) m.transition[m.transition_index(h, x, a, next)] += prob;
                for (auto [prob, next] : branches) realized[m.transition_index(h, x, a, next)] = (x - next) / 2.0;
            }
        }
    }
    m.utility = expected_utility(m, realized);
    m.utility_on_transition = std::move(realized);
    m.validate();
    return m;
}

}  // namespace cmdp
