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

// Model-free primal-dual soft-max LSVI-UCB agent for episodic constrained MDPs
// with linear function approximation.
//
// Each episode runs a backward least-squares value iteration over the data of
// all earlier episodes (optimistic Q estimates clipped at H), acts with a
// soft-max policy on the composite value Q_r + Y Q_g, and finally takes a
// projected dual step on Y using the estimated utility value of the start
// state.

#pragma once

#include "cmdp/env.hpp"
#include "cmdp/linalg.hpp"
#include "cmdp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace cmdp {

struct AgentConfig {
    int feature_dim = 0;
    int horizon = 0;
    int episodes = 0;  // K, the planned number of episodes
    int action_count = 0;
    double lambda_reg = 1.0;
    double c1 = 1.0;  // bonus constant C1
    double failure_prob = 0.05;
    double slater_gamma = 1.0;
    double tighten_zeta = 0.0;  // > 0 selects the zero-violation variant
    std::optional<double> alpha;
    std::optional<double> eta;
    std::optional<double> beta;
    std::optional<double> xi;

    void validate() const {
        auto fail = [](const char* what) { throw std::invalid_argument(std::string("AgentConfig: ") + what); };
        if (feature_dim < 1 || horizon < 1 || episodes < 1 || action_count < 1)
            fail("feature_dim, horizon, episodes and action_count must be positive");
        if (!(lambda_reg > 0.0)) fail("lambda_reg must be positive");
        if (!(c1 > 0.0)) fail("c1 must be positive");
        if (!(failure_prob > 0.0 && failure_prob < 1.0)) fail("failure_prob must lie in (0, 1)");
        if (!(slater_gamma > 0.0)) fail("slater_gamma must be positive");
        if (!(tighten_zeta >= 0.0)) fail("tighten_zeta must be non-negative");
        if (tighten_zeta > slater_gamma / 2.0) fail("tighten_zeta must not exceed slater_gamma / 2");
        if (alpha && !(*alpha > 0.0)) fail("alpha override must be positive");
        if (eta && !(*eta >= 0.0)) fail("eta override must be non-negative");
        if (beta && !(*beta >= 0.0)) fail("beta override must be non-negative");
        if (xi && !(*xi >= 0.0)) fail("xi override must be non-negative");
    }
};

/// Step sizes and constants actually used by a run.
struct AgentParameters {
    double xi = 0.0;     // upper bound of the dual variable
    double alpha = 0.0;  // soft-max inverse temperature
    double eta = 0.0;    // dual step size
    double beta = 0.0;   // bonus multiplier
    double iota = 0.0;   // log factor inside beta
};

/**
 * Default schedule:
 *   xi    = 2H/gamma (4H/gamma when tightening is on)
 *   alpha = log|A| K / (2 (1 + xi + H))
 *   eta   = xi / sqrt(K H^2)
 *   iota  = log(log|A| 4 d T / p),  T = K H
 *   beta  = c1 d H sqrt(iota)
 * A single-action problem uses log 2 in place of log|A| so that alpha and iota
 * stay finite; the policy is trivial there anyway.
 */
inline AgentParameters derive_parameters(const AgentConfig& c) {
    c.validate();
    const double H = c.horizon;
    const double K = c.episodes;
    const double d = c.feature_dim;
    const double log_actions = std::log(std::max(c.action_count, 2));
    AgentParameters p;
    p.xi = c.xi.value_or((c.tighten_zeta > 0.0 ? 4.0 : 2.0) * H / c.slater_gamma);
    p.alpha = c.alpha.value_or(log_actions * K / (2.0 * (1.0 + p.xi + H)));
    p.eta = c.eta.value_or(p.xi / std::sqrt(K * H * H));
    p.iota = std::log(log_actions * 4.0 * d * K * H / c.failure_prob);
    p.beta = c.beta.value_or(c.c1 * d * H * std::sqrt(p.iota));
    return p;
}

/// Optimistic clipped estimate min{<w, phi> + beta sqrt(phi^T Lambda^{-1} phi), H}.
inline double q_value(const Vector& w, const GramInverse& g, double beta, const Vector& phi,
                      double horizon) {
    const double bonus = beta > 0.0 ? beta * bonus_quadratic_form(g, phi) : 0.0;
    return std::min(w.dot(phi) + bonus, horizon);
}
inline double q_value(const Vector& w, const GramInverse& g, double beta, const FeatureVector& phi,
                      double horizon) {
    return q_value(w, g, beta, phi.values(), horizon);
}

struct PolicyDistribution {
    std::vector<double> probs;
};

/// probs[a] proportional to exp(alpha (q_r[a] + Y q_g[a])), evaluated after
/// subtracting the maximum composite value.
inline PolicyDistribution softmax_policy(std::span<const double> q_r, std::span<const double> q_g,
                                         double dual, double alpha) {
    if (q_r.size() != q_g.size() || q_r.empty())
        throw std::invalid_argument("softmax_policy: q_r and q_g must be non-empty and equal length");
    if (!(alpha > 0.0)) throw std::invalid_argument("softmax_policy: alpha must be positive");
    if (!(dual >= 0.0)) throw std::invalid_argument("softmax_policy: dual must be non-negative");
    PolicyDistribution pi;
    pi.probs.resize(q_r.size());
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < q_r.size(); ++a) {
        pi.probs[a] = q_r[a] + dual * q_g[a];
        top = std::max(top, pi.probs[a]);
    }
    double total = 0.0;
    for (double& x : pi.probs) {
        x = std::exp(alpha * (x - top));
        total += x;
    }
    for (double& x : pi.probs) x /= total;
    return pi;
}

/// Soft-max over a single composite vector.
inline PolicyDistribution softmax_policy(std::span<const double> composite, double alpha) {
    const std::vector<double> zeros(composite.size(), 0.0);
    return softmax_policy(composite, zeros, 0.0, alpha);
}

inline double v_value(const PolicyDistribution& pi, std::span<const double> q) {
    if (pi.probs.size() != q.size()) throw std::invalid_argument("v_value: length mismatch");
    double v = 0.0;
    for (std::size_t a = 0; a < q.size(); ++a) v += pi.probs[a] * q[a];
    return v;
}

/// Projected dual step clamp(Y + eta (b - V_g1), 0, xi).
inline double dual_update(double dual, double eta, double effective_threshold, double v_g1,
                          double xi) {
    return std::max(std::min(dual + eta * (effective_threshold - v_g1), xi), 0.0);
}

/// Interns the per-action feature blocks {phi(x, a)}_a of visited states.
/// Two states with bit-identical blocks share an id.
class FeatureBlockTable {
  public:
    int intern(std::vector<FeatureVector> block) {
        std::string key;
        for (const auto& phi : block)
            key.append(reinterpret_cast<const char*>(phi.values().data()),
                       static_cast<std::size_t>(phi.dim()) * sizeof(double));
        auto [it, inserted] = index_.try_emplace(std::move(key), static_cast<int>(blocks_.size()));
        if (inserted) blocks_.push_back(std::move(block));
        return it->second;
    }

    const std::vector<FeatureVector>& operator[](int id) const {
        return blocks_.at(static_cast<std::size_t>(id));
    }
    std::size_t size() const { return blocks_.size(); }

  private:
    std::unordered_map<std::string, int> index_;
    std::vector<std::vector<FeatureVector>> blocks_;
};

/// One stored transition. next_block is -1 on the last step of an episode.
struct StepRecord {
    int block = 0;
    int action = 0;
    double reward = 0.0;
    double utility = 0.0;
    int next_block = -1;
};

struct EpisodeRecord {
    std::vector<StepRecord> steps;
};

struct EpisodeTrace {
    int episode = 0;
    std::vector<EpisodeStep> steps;
    double v_g1_estimate = 0.0;  // V^k_{g,1}(x_1) from the backward pass
    double v_r1_estimate = 0.0;
    double dual_used = 0.0;      // Y_k
    double dual_next = 0.0;      // Y_{k+1}
};

struct ActionValues {
    std::vector<double> reward;
    std::vector<double> utility;
};

struct StateValue {
    int block = 0;
    double reward = 0.0;
    double utility = 0.0;
};

/// Value estimates V^k_{j,h+1} at every distinct stored next state, per step.
struct BackwardPassValues {
    std::vector<std::vector<StateValue>> next_state_values;
};

/**
 * The primal-dual agent.
 *
 * Per step h it keeps the inverse Gram matrix, the weight vectors w_r and w_g,
 * the running sums sum phi r and sum phi g, and for each distinct next-state
 * block the summed features of the samples that led to it. The regression
 * target sum_t phi_t V(x'_t) is then sum_b V(b) * (sum of phi_t landing in b),
 * which re-evaluates V at every stored next state each episode without
 * walking the whole replay.
 */
class PrimalDualAgent {
  public:
    PrimalDualAgent(AgentConfig config, double threshold)
        : config_(std::move(config)), params_(derive_parameters(config_)), threshold_(threshold) {
        const auto H = static_cast<std::size_t>(config_.horizon);
        const Eigen::Index d = config_.feature_dim;
        gram_.assign(H, GramInverse(d, config_.lambda_reg));
        reward_sums_.assign(H, Vector::Zero(d));
        utility_sums_.assign(H, Vector::Zero(d));
        w_r_.assign(H, Vector::Zero(d));
        w_g_.assign(H, Vector::Zero(d));
        next_groups_.resize(H);
        next_group_slot_.resize(H);
    }

    const AgentConfig& config() const { return config_; }
    const AgentParameters& parameters() const { return params_; }
    double threshold() const { return threshold_; }
    double effective_threshold() const { return threshold_ + config_.tighten_zeta; }
    double dual() const { return dual_; }
    /// 1-based index of the next episode to be played.
    int episode() const { return episode_; }

    const GramInverse& gram(int h) const { return gram_.at(static_cast<std::size_t>(h)); }
    const Vector& reward_weights(int h) const { return w_r_.at(static_cast<std::size_t>(h)); }
    const Vector& utility_weights(int h) const { return w_g_.at(static_cast<std::size_t>(h)); }
    const FeatureBlockTable& blocks() const { return blocks_; }
    const std::vector<EpisodeRecord>& replay() const { return replay_; }

    /// Recomputes w_r, w_g for h = H..1 from episodes 1..k-1.
    BackwardPassValues backward_pass() {
        const int H = config_.horizon;
        BackwardPassValues out;
        out.next_state_values.resize(static_cast<std::size_t>(H));
        for (int h = H - 1; h >= 0; --h) {
            const auto hs = static_cast<std::size_t>(h);
            Vector target_r = reward_sums_[hs];
            Vector target_g = utility_sums_[hs];
            if (h + 1 < H) {
                for (const auto& [block, phi_sum] : next_groups_[hs]) {
                    const auto [v_r, v_g] = state_values(h + 1, blocks_[block]);
                    target_r.noalias() += v_r * phi_sum;
                    target_g.noalias() += v_g * phi_sum;
                    out.next_state_values[hs].push_back({block, v_r, v_g});
                }
            }
            w_r_[hs] = ridge_solve(gram_[hs], target_r);
            w_g_[hs] = ridge_solve(gram_[hs], target_g);
        }
        return out;
    }

    ActionValues action_values(int h, std::span<const FeatureVector> phis) const {
        check_step(h);
        const auto hs = static_cast<std::size_t>(h);
        const double H = config_.horizon;
        ActionValues q;
        q.reward.reserve(phis.size());
        q.utility.reserve(phis.size());
        for (const auto& phi : phis) {
            const Vector& x = phi.values();
            const double bonus =
                params_.beta > 0.0 ? params_.beta * bonus_quadratic_form(gram_[hs], x) : 0.0;
            q.reward.push_back(std::min(w_r_[hs].dot(x) + bonus, H));
            q.utility.push_back(std::min(w_g_[hs].dot(x) + bonus, H));
        }
        return q;
    }

    PolicyDistribution policy(int h, std::span<const FeatureVector> phis) const {
        const auto q = action_values(h, phis);
        return softmax_policy(q.reward, q.utility, dual_, params_.alpha);
    }

    /// (V_r, V_g) of the current soft-max policy at a state.
    std::pair<double, double> state_values(int h, std::span<const FeatureVector> phis) const {
        const auto q = action_values(h, phis);
        const auto pi = softmax_policy(q.reward, q.utility, dual_, params_.alpha);
        return {v_value(pi, q.reward), v_value(pi, q.utility)};
    }

    int act(int h, std::span<const FeatureVector> phis, RandomStream& rng) const {
        const auto pi = policy(h, phis);
        return static_cast<int>(rng.categorical(pi.probs));
    }

    /**
     * Plays episode k: backward pass, rollout, data commit, dual step.
     * on_planned(agent) is invoked after the backward pass and before the
     * rollout, i.e. while the agent represents the policy pi_k.
     */
    template <EpisodicEnvironment Env, class OnPlanned>
    EpisodeTrace run_episode(Env& env, RandomStream& env_rng, RandomStream& policy_rng,
                             OnPlanned&& on_planned) {
        if (episode_ > config_.episodes)
            throw std::logic_error("PrimalDualAgent: all configured episodes have been played");
        if (env.horizon() != config_.horizon || env.feature_dim() != config_.feature_dim ||
            env.action_count() != config_.action_count)
            throw std::invalid_argument("PrimalDualAgent: environment does not match the agent configuration");

        backward_pass();
        EpisodeTrace trace;
        trace.episode = episode_;
        trace.dual_used = dual_;

        auto state = env.reset();
        std::vector<FeatureVector> block = gather(env, state);
        {
            const auto [v_r1, v_g1] = state_values(0, block);
            trace.v_r1_estimate = v_r1;
            trace.v_g1_estimate = v_g1;
        }
        on_planned(std::as_const(*this));

        EpisodeRecord record;
        int block_id = blocks_.intern(block);
        const int H = config_.horizon;
        for (int h = 0; h < H; ++h) {
            const int action = act(h, blocks_[block_id], policy_rng);
            const EpisodeStep step = env.step(action, env_rng);
            int next_id = -1;
            if (h + 1 < H) next_id = blocks_.intern(gather(env, step.next_state));
            record.steps.push_back({block_id, action, step.reward, step.utility, next_id});
            trace.steps.push_back(step);
            block_id = next_id;
        }
        commit(record);
        dual_ = dual_update(dual_, params_.eta, effective_threshold(), trace.v_g1_estimate, params_.xi);
        trace.dual_next = dual_;
        replay_.push_back(std::move(record));
        ++episode_;
        return trace;
    }

    template <EpisodicEnvironment Env>
    EpisodeTrace run_episode(Env& env, RandomStream& env_rng, RandomStream& policy_rng) {
        return run_episode(env, env_rng, policy_rng, [](const PrimalDualAgent&) {});
    }

    /// Overrides the dual variable; must stay within [0, xi].
    void set_dual(double dual) {
        if (!(dual >= 0.0 && dual <= params_.xi))
            throw std::invalid_argument("PrimalDualAgent::set_dual: value outside [0, xi]");
        dual_ = dual;
    }

  private:
    template <class Env>
    static std::vector<FeatureVector> gather(const Env& env, const typename Env::state_type& state) {
        std::vector<FeatureVector> out;
        out.reserve(static_cast<std::size_t>(env.action_count()));
        for (int a = 0; a < env.action_count(); ++a) out.emplace_back(env.features_of(state, a));
        return out;
    }

    void check_step(int h) const {
        if (h < 0 || h >= config_.horizon) throw std::out_of_range("PrimalDualAgent: step out of range");
    }

    void commit(const EpisodeRecord& record) {
        for (std::size_t h = 0; h < record.steps.size(); ++h) {
            const StepRecord& s = record.steps[h];
            const Vector& phi = blocks_[s.block][static_cast<std::size_t>(s.action)].values();
            gram_[h].rank_one_update(phi);
            reward_sums_[h].noalias() += s.reward * phi;
            utility_sums_[h].noalias() += s.utility * phi;
            if (s.next_block >= 0) {
                auto [it, inserted] =
                    next_group_slot_[h].try_emplace(s.next_block, next_groups_[h].size());
                if (inserted) next_groups_[h].emplace_back(s.next_block, Vector::Zero(phi.size()));
                next_groups_[h][it->second].second.noalias() += phi;
            }
        }
    }

    AgentConfig config_;
    AgentParameters params_;
    double threshold_;
    double dual_ = 0.0;
    int episode_ = 1;

    std::vector<GramInverse> gram_;
    std::vector<Vector> reward_sums_;
    std::vector<Vector> utility_sums_;
    std::vector<Vector> w_r_;
    std::vector<Vector> w_g_;
    // per step: (next-state block id, summed features of samples landing there)
    std::vector<std::vector<std::pair<int, Vector>>> next_groups_;
    std::vector<std::unordered_map<int, std::size_t>> next_group_slot_;

    FeatureBlockTable blocks_;
    std::vector<EpisodeRecord> replay_;
};

}  // namespace cmdp
