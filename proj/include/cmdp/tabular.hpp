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

// Finite-horizon tabular CMDP model and its JSON description format.
//
// Steps are 0-based in code (h = 0 .. H-1). All tables are flattened in
// row-major order with index order [h][s][a] for per-pair tables and
// [h][s][a][s'] for transition-indexed tables.
//
// File format (JSON object):
//   "format"                : "cmdp-tabular/1"
//   "n_states", "n_actions", "horizon", "initial_state" : integers
//   "threshold"             : the constraint level b
//   "index_order"           : "[h][s][a][s']" (informational)
//   "transition"            : H*S*A*S probabilities
//   "reward", "utility"     : H*S*A values in [0, 1]; "utility" is the
//                             expected per-step utility
//   "utility_on_transition" : optional H*S*A*S realized utilities; when
//                             present, environments emit these and "utility"
//                             must equal their expectation

#pragma once

#include <json.hpp>

#include <cmath>
#include <cstddef>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cmdp {

inline constexpr double kProbabilityTolerance = 1e-9;

struct TabularCMDP {
    int n_states = 0;
    int n_actions = 0;
    int horizon = 0;
    std::vector<double> transition;  // [h][s][a][s']
    std::vector<double> reward;      // [h][s][a]
    std::vector<double> utility;     // [h][s][a], expected
    std::optional<std::vector<double>> utility_on_transition;  // [h][s][a][s']
    int initial_state = 0;
    double threshold = 0.0;

    std::size_t pair_index(int h, int s, int a) const {
        return (static_cast<std::size_t>(h) * n_states + s) * n_actions + a;
    }
    std::size_t transition_index(int h, int s, int a, int next) const {
        return pair_index(h, s, a) * n_states + next;
    }

    double p(int h, int s, int a, int next) const { return transition[transition_index(h, s, a, next)]; }
    double r(int h, int s, int a) const { return reward[pair_index(h, s, a)]; }
    double g(int h, int s, int a) const { return utility[pair_index(h, s, a)]; }

    double realized_utility(int h, int s, int a, int next) const {
        return utility_on_transition ? (*utility_on_transition)[transition_index(h, s, a, next)]
                                     : g(h, s, a);
    }

    std::size_t pair_count() const {
        return static_cast<std::size_t>(horizon) * n_states * n_actions;
    }

    /// Throws std::invalid_argument describing the first violated invariant.
    void validate() const;
};

/// Expected per-step utility implied by a transition-indexed utility table.
inline std::vector<double> expected_utility(const TabularCMDP& m,
                                            const std::vector<double>& on_transition) {
    std::vector<double> out(m.pair_count(), 0.0);
    for (int h = 0; h < m.horizon; ++h)
        for (int s = 0; s < m.n_states; ++s)
            for (int a = 0; a < m.n_actions; ++a) {
                double acc = 0.0;
                for (int n = 0; n < m.n_states; ++n)
                    acc += m.p(h, s, a, n) * on_transition[m.transition_index(h, s, a, n)];
                out[m.pair_index(h, s, a)] = acc;
            }
    return out;
}

inline void TabularCMDP::validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("TabularCMDP: " + what); };
    if (n_states < 1 || n_actions < 1 || horizon < 1) fail("dimensions must be positive");
    if (initial_state < 0 || initial_state >= n_states) fail("initial_state out of range");
    if (!(threshold > 0.0) || threshold > horizon) fail("threshold must lie in (0, H]");
    const std::size_t pairs = pair_count();
    if (transition.size() != pairs * n_states) fail("transition table has wrong size");
    if (reward.size() != pairs || utility.size() != pairs) fail("reward/utility table has wrong size");
    for (std::size_t i = 0; i < pairs; ++i) {
        if (!(reward[i] >= 0.0 && reward[i] <= 1.0)) fail("reward outside [0, 1]");
        if (!(utility[i] >= 0.0 && utility[i] <= 1.0)) fail("utility outside [0, 1]");
        double total = 0.0;
        for (int n = 0; n < n_states; ++n) {
            const double q = transition[i * n_states + n];
            if (!(q >= 0.0)) fail("negative transition probability");
            total += q;
        }
        if (std::abs(total - 1.0) > kProbabilityTolerance) fail("transition row does not sum to 1");
    }
    if (utility_on_transition) {
        if (utility_on_transition->size() != pairs * n_states)
            fail("utility_on_transition table has wrong size");
        for (double u : *utility_on_transition)
            if (!(u >= 0.0 && u <= 1.0)) fail("utility_on_transition outside [0, 1]");
        const auto expected = expected_utility(*this, *utility_on_transition);
        for (std::size_t i = 0; i < pairs; ++i)
            if (std::abs(expected[i] - utility[i]) > 1e-9)
                fail("utility is not the expectation of utility_on_transition");
    }
}

inline nlohmann::json to_json(const TabularCMDP& m) {
    nlohmann::json j;
    j["format"] = "cmdp-tabular/1";
    j["n_states"] = m.n_states;
    j["n_actions"] = m.n_actions;
    j["horizon"] = m.horizon;
    j["initial_state"] = m.initial_state;
    j["threshold"] = m.threshold;
    j["index_order"] = "[h][s][a][s']";
    j["transition"] = m.transition;
    j["reward"] = m.reward;
    j["utility"] = m.utility;
    if (m.utility_on_transition) j["utility_on_transition"] = *m.utility_on_transition;
    return j;
}

inline TabularCMDP tabular_from_json(const nlohmann::json& j) {
    if (j.value("format", std::string{}) != "cmdp-tabular/1")
        throw std::invalid_argument("TabularCMDP: unsupported or missing \"format\"");
    TabularCMDP m;
    m.n_states = j.at("n_states").get<int>();
    m.n_actions = j.at("n_actions").get<int>();
    m.horizon = j.at("horizon").get<int>();
    m.initial_state = j.at("initial_state").get<int>();
    m.threshold = j.at("threshold").get<double>();
    m.transition = j.at("transition").get<std::vector<double>>();
    m.reward = j.at("reward").get<std::vector<double>>();
    m.utility = j.at("utility").get<std::vector<double>>();
    if (j.contains("utility_on_transition"))
        m.utility_on_transition = j.at("utility_on_transition").get<std::vector<double>>();
    m.validate();
    return m;
}

inline void save_tabular(const TabularCMDP& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << to_json(m).dump(2) << '\n';
}

inline TabularCMDP load_tabular(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return tabular_from_json(nlohmann::json::parse(in));
}

}  // namespace cmdp
