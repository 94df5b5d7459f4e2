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

// Ground truth on known tabular models: exact policy evaluation, optimal
// (unconstrained) values, the constrained optimum through the occupancy
// measure linear program, and the Slater margin.

#pragma once

#include "cmdp/lp.hpp"
#include "cmdp/tabular.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

namespace cmdp {

/// Randomized Markov policy probs[h][s][a].
struct StepPolicy {
    int horizon = 0;
    int n_states = 0;
    int n_actions = 0;
    std::vector<double> probs;

    StepPolicy() = default;
    StepPolicy(int H, int S, int A)
        : horizon(H), n_states(S), n_actions(A),
          probs(static_cast<std::size_t>(H) * S * A, 1.0 / A) {}

    static StepPolicy uniform(const TabularCMDP& m) { return {m.horizon, m.n_states, m.n_actions}; }

    double& operator()(int h, int s, int a) { return probs[index(h, s, a)]; }
    double operator()(int h, int s, int a) const { return probs[index(h, s, a)]; }

    std::size_t index(int h, int s, int a) const {
        return (static_cast<std::size_t>(h) * n_states + s) * n_actions + a;
    }

    void validate(double tol = 1e-9) const {
        for (int h = 0; h < horizon; ++h)
            for (int s = 0; s < n_states; ++s) {
                double total = 0.0;
                for (int a = 0; a < n_actions; ++a) {
                    if (!((*this)(h, s, a) >= 0.0)) throw std::invalid_argument("StepPolicy: negative probability");
                    total += (*this)(h, s, a);
                }
                if (std::abs(total - 1.0) > tol) throw std::invalid_argument("StepPolicy: row does not sum to 1");
            }
    }
};

/// Value tables v[h][s] for h = 0..H (row H is zero).
struct PolicyValues {
    std::vector<double> v_r;
    std::vector<double> v_g;
    int n_states = 0;
    double v_r1 = 0.0;  // reward value at the initial state
    double v_g1 = 0.0;  // utility value at the initial state

    double reward_value(int h, int s) const { return v_r[static_cast<std::size_t>(h) * n_states + s]; }
    double utility_value(int h, int s) const { return v_g[static_cast<std::size_t>(h) * n_states + s]; }
};

/// Exact V^pi_{r,h}, V^pi_{g,h} by backward recursion on the expected tables.
inline PolicyValues policy_eval_dp(const TabularCMDP& m, const StepPolicy& pi) {
    if (pi.horizon != m.horizon || pi.n_states != m.n_states || pi.n_actions != m.n_actions)
        throw std::invalid_argument("policy_eval_dp: policy shape does not match the model");
    const int S = m.n_states;
    PolicyValues out;
    out.n_states = S;
    out.v_r.assign(static_cast<std::size_t>(m.horizon + 1) * S, 0.0);
    out.v_g.assign(out.v_r.size(), 0.0);
    for (int h = m.horizon - 1; h >= 0; --h) {
        const double* next_r = &out.v_r[static_cast<std::size_t>(h + 1) * S];
        const double* next_g = &out.v_g[static_cast<std::size_t>(h + 1) * S];
        for (int s = 0; s < S; ++s) {
            double vr = 0.0, vg = 0.0;
            for (int a = 0; a < m.n_actions; ++a) {
                const double w = pi(h, s, a);
                if (w == 0.0) continue;
                double er = 0.0, eg = 0.0;
                const double* row = &m.transition[m.transition_index(h, s, a, 0)];
                for (int n = 0; n < S; ++n) {
                    er += row[n] * next_r[n];
                    eg += row[n] * next_g[n];
                }
                vr += w * (m.r(h, s, a) + er);
                vg += w * (m.g(h, s, a) + eg);
            }
            out.v_r[static_cast<std::size_t>(h) * S + s] = vr;
            out.v_g[static_cast<std::size_t>(h) * S + s] = vg;
        }
    }
    out.v_r1 = out.reward_value(0, m.initial_state);
    out.v_g1 = out.utility_value(0, m.initial_state);
    return out;
}

struct OptimalControl {
    double value = 0.0;  // at the initial state
    StepPolicy policy;   // deterministic, ties to the lowest action index
};

/// max_pi of the expected sum of reward_weight * r + utility_weight * g.
inline OptimalControl optimal_value_dp(const TabularCMDP& m, double reward_weight,
                                       double utility_weight) {
    const int S = m.n_states;
    OptimalControl out;
    out.policy = StepPolicy(m.horizon, S, m.n_actions);
    std::vector<double> next(static_cast<std::size_t>(S), 0.0), cur(next.size());
    for (int h = m.horizon - 1; h >= 0; --h) {
        for (int s = 0; s < S; ++s) {
            int best_a = 0;
            double best = -std::numeric_limits<double>::infinity();
            for (int a = 0; a < m.n_actions; ++a) {
                double q = reward_weight * m.r(h, s, a) + utility_weight * m.g(h, s, a);
                const double* row = &m.transition[m.transition_index(h, s, a, 0)];
                for (int n = 0; n < S; ++n) q += row[n] * next[static_cast<std::size_t>(n)];
                if (q > best) {
                    best = q;
                    best_a = a;
                }
            }
            cur[static_cast<std::size_t>(s)] = best;
            for (int a = 0; a < m.n_actions; ++a) out.policy(h, s, a) = a == best_a ? 1.0 : 0.0;
        }
        std::swap(cur, next);
    }
    out.value = next[static_cast<std::size_t>(m.initial_state)];
    return out;
}

/// Composite dual function  max_pi V_r + Y (V_g - b).
inline double lagrangian_dual_value(const TabularCMDP& m, double dual, double threshold) {
    return optimal_value_dp(m, 1.0, dual).value - dual * threshold;
}

/// max_pi V^pi_{g,1}(x_1) - b; positive iff a strictly feasible policy exists.
inline double slater_margin(const TabularCMDP& m) {
    return optimal_value_dp(m, 0.0, 1.0).value - m.threshold;
}

/// State-action occupancy nu[h][s][a] of a policy from the fixed start state.
struct OccupancyMeasure {
    int horizon = 0;
    int n_states = 0;
    int n_actions = 0;
    std::vector<double> nu;

    double operator()(int h, int s, int a) const {
        return nu[(static_cast<std::size_t>(h) * n_states + s) * n_actions + a];
    }
};

/// Largest violation of normalization / flow conservation / start-state support.
inline double occupancy_residual(const TabularCMDP& m, const OccupancyMeasure& occ) {
    double worst = 0.0;
    for (int h = 0; h < m.horizon; ++h) {
        double total = 0.0;
        for (int s = 0; s < m.n_states; ++s)
            for (int a = 0; a < m.n_actions; ++a) {
                worst = std::max(worst, -occ(h, s, a));
                total += occ(h, s, a);
            }
        worst = std::max(worst, std::abs(total - 1.0));
    }
    for (int s = 0; s < m.n_states; ++s)
        if (s != m.initial_state)
            for (int a = 0; a < m.n_actions; ++a) worst = std::max(worst, std::abs(occ(0, s, a)));
    for (int h = 0; h + 1 < m.horizon; ++h)
        for (int next = 0; next < m.n_states; ++next) {
            double inflow = 0.0, outflow = 0.0;
            for (int s = 0; s < m.n_states; ++s)
                for (int a = 0; a < m.n_actions; ++a) inflow += occ(h, s, a) * m.p(h, s, a, next);
            for (int a = 0; a < m.n_actions; ++a) outflow += occ(h + 1, next, a);
            worst = std::max(worst, std::abs(inflow - outflow));
        }
    return worst;
}

/// Policy pi_h(a|s) = nu_h(s,a) / sum_a' nu_h(s,a'), uniform where the
/// marginal is below `min_marginal`.
inline StepPolicy policy_from_occupancy(const OccupancyMeasure& occ, double min_marginal = 1e-12) {
    StepPolicy pi(occ.horizon, occ.n_states, occ.n_actions);
    for (int h = 0; h < occ.horizon; ++h)
        for (int s = 0; s < occ.n_states; ++s) {
            double marginal = 0.0;
            for (int a = 0; a < occ.n_actions; ++a) marginal += std::max(occ(h, s, a), 0.0);
            for (int a = 0; a < occ.n_actions; ++a)
                pi(h, s, a) = marginal < min_marginal ? 1.0 / occ.n_actions
                                                      : std::max(occ(h, s, a), 0.0) / marginal;
        }
    return pi;
}

struct ConstrainedOptimum {
    double optimal_value = 0.0;
    StepPolicy policy;
    OccupancyMeasure occupancy;
};

/**
 * Constrained optimum via the occupancy-measure LP
 *
 *   max  sum_{h,s,a} nu_h(s,a) r_h(s,a)
 *   s.t. sum_a nu_1(s,a) = 1[s = x_1]
 *        sum_a nu_{h+1}(s',a) = sum_{s,a} nu_h(s,a) P_h(s'|s,a)
 *        sum_{h,s,a} nu_h(s,a) g_h(s,a) >= threshold
 *        nu >= 0
 *
 * Returns std::nullopt when no policy meets the threshold.
 */
inline std::optional<ConstrainedOptimum> solve_occupancy_lp(const TabularCMDP& m, double threshold) {
    const int H = m.horizon, S = m.n_states, A = m.n_actions;
    const auto pairs = static_cast<Eigen::Index>(m.pair_count());
    const Eigen::Index rows = static_cast<Eigen::Index>(H) * S + 1;
    LinearProgram lp;
    lp.A = Matrix::Zero(rows, pairs + 1);  // last column: surplus of the utility constraint
    lp.b = Vector::Zero(rows);
    lp.c = Vector::Zero(pairs + 1);
    auto col = [&](int h, int s, int a) { return static_cast<Eigen::Index>(m.pair_index(h, s, a)); };
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) lp.A(s, col(0, s, a)) = 1.0;
        lp.b[s] = s == m.initial_state ? 1.0 : 0.0;
    }
    for (int h = 1; h < H; ++h)
        for (int next = 0; next < S; ++next) {
            const Eigen::Index r = static_cast<Eigen::Index>(h) * S + next;
            for (int a = 0; a < A; ++a) lp.A(r, col(h, next, a)) = 1.0;
            for (int s = 0; s < S; ++s)
                for (int a = 0; a < A; ++a) lp.A(r, col(h - 1, s, a)) -= m.p(h - 1, s, a, next);
        }
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) {
                lp.A(rows - 1, col(h, s, a)) = m.g(h, s, a);
                lp.c[col(h, s, a)] = m.r(h, s, a);
            }
    lp.A(rows - 1, pairs) = -1.0;
    lp.b[rows - 1] = threshold;

    const LpSolution sol = solve_standard_form(lp);
    if (sol.status == LpStatus::infeasible) return std::nullopt;
    if (sol.status != LpStatus::optimal)
        throw std::runtime_error("solve_occupancy_lp: simplex did not reach optimality");

    ConstrainedOptimum out;
    out.occupancy = {H, S, A, std::vector<double>(sol.x.data(), sol.x.data() + pairs)};
    out.optimal_value = 0.0;
    for (Eigen::Index i = 0; i < pairs; ++i) out.optimal_value += lp.c[i] * sol.x[i];
    out.policy = policy_from_occupancy(out.occupancy);
    return out;
}

}  // namespace cmdp
