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

// Experiment harness: resolves a run configuration against an environment and
// its oracle values, plays seeded trials, and accounts regret and constraint
// violation of every episode's policy exactly.
//
// Output files (in RunConfig::output_dir):
//   trial_<i>_seed_<s>.csv  episode, cumulative_regret,
//                           cumulative_violation_signed,
//                           cumulative_violation_positive_part, dual_Y,
//                           wall_time_s
//   aggregate.csv           episode followed by mean/std pairs of the four
//                           metrics, and regret_over_sqrt_k
//   summary.json            configuration echo, derived parameters, oracle
//                           values, warnings and sublinearity diagnostics

#pragma once

#include "cmdp/agent.hpp"
#include "cmdp/env.hpp"
#include "cmdp/log.hpp"
#include "cmdp/oracle.hpp"
#include "cmdp/rng.hpp"
#include "cmdp/tabular.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace cmdp {

enum class ConstraintMode { standard, zero_violation };

inline const char* to_string(ConstraintMode mode) {
    return mode == ConstraintMode::standard ? "standard" : "zero_violation";
}

struct RunConfig {
    std::string env = "job_scheduler";  // builtin name or path to a tabular JSON file
    AgentConfig agent;                  // feature_dim/horizon/action_count come from the env
    std::vector<std::uint64_t> seeds{1};
    int trials = 0;  // 0: one trial per seed
    std::string output_dir;  // empty: nothing written
    ConstraintMode mode = ConstraintMode::standard;
    std::optional<double> zeta;
    double zeta_constant = 1.0;  // c in the default zeta = min{c sqrt(T)/K, gamma/2}
    bool record_wall_time = false;
    int workers = 0;  // 0: hardware concurrency
};

inline std::vector<std::string> builtin_environments() { return {"job_scheduler"}; }

inline TabularCMDP load_environment(const std::string& name_or_path) {
    if (name_or_path == "job_scheduler") return make_job_scheduler();
    return load_tabular(name_or_path);
}

/// A configuration bound to its environment and oracle values.
struct ResolvedRun {
    RunConfig config;
    TabularCMDP model;
    AgentConfig agent;
    AgentParameters params;
    std::vector<std::uint64_t> seeds;
    double zeta = 0.0;
    double optimal_value = 0.0;  // V* at the original threshold
    double slater_margin = 0.0;
    std::vector<std::string> warnings;
};

inline ResolvedRun resolve(const RunConfig& config) {
    ResolvedRun run;
    run.config = config;
    run.model = load_environment(config.env);
    run.model.validate();
    const TabularCMDP& m = run.model;

    run.agent = config.agent;
    run.agent.feature_dim = m.n_states * m.n_actions;
    run.agent.horizon = m.horizon;
    run.agent.action_count = m.n_actions;
    const double gamma = run.agent.slater_gamma;

    if (config.mode == ConstraintMode::standard) {
        if (config.zeta && *config.zeta != 0.0)
            throw std::invalid_argument("zeta is only meaningful in zero_violation mode");
        run.zeta = 0.0;
    } else {
        const double K = run.agent.episodes;
        const double T = K * m.horizon;
        run.zeta = config.zeta.value_or(std::min(config.zeta_constant * std::sqrt(T) / K, gamma / 2.0));
        if (!(run.zeta > 0.0)) throw std::invalid_argument("zero_violation mode needs zeta > 0");
        if (run.zeta > gamma / 2.0) throw std::invalid_argument("zeta must not exceed gamma / 2");
    }
    run.agent.tighten_zeta = run.zeta;
    run.params = derive_parameters(run.agent);

    run.seeds = config.seeds;
    if (run.seeds.empty()) run.seeds.push_back(1);
    const int trials = config.trials > 0 ? config.trials : static_cast<int>(run.seeds.size());
    while (static_cast<int>(run.seeds.size()) < trials) run.seeds.push_back(run.seeds.back() + 1);
    run.seeds.resize(static_cast<std::size_t>(trials));

    run.slater_margin = slater_margin(m);
    if (gamma > run.slater_margin) {
        run.warnings.push_back("configured gamma " + std::to_string(gamma) +
                               " exceeds the true Slater margin " + std::to_string(run.slater_margin));
        log(LogLevel::warn, run.warnings.back());
    }
    const auto optimum = solve_occupancy_lp(m, m.threshold);
    if (!optimum)
        throw std::runtime_error("constraint is infeasible: no policy reaches utility " +
                                 std::to_string(m.threshold) + "; regret is undefined");
    run.optimal_value = optimum->optimal_value;
    return run;
}

/// The agent's current soft-max policy over the whole tabular state space.
inline StepPolicy snapshot_policy(const PrimalDualAgent& agent, const TabularEnv& env) {
    const TabularCMDP& m = env.model();
    StepPolicy pi(m.horizon, m.n_states, m.n_actions);
    for (int h = 0; h < m.horizon; ++h)
        for (int s = 0; s < m.n_states; ++s) {
            const auto dist = agent.policy(h, env.features_at(s));
            for (int a = 0; a < m.n_actions; ++a) pi(h, s, a) = dist.probs[static_cast<std::size_t>(a)];
        }
    return pi;
}

struct SnapshotValues {
    double v_r1 = 0.0;
    double v_g1 = 0.0;
};

/// Exact V^{pi_k}_{r,1}(x_1) and V^{pi_k}_{g,1}(x_1) of the agent's policy.
inline SnapshotValues evaluate_policy_snapshot(const PrimalDualAgent& agent, const TabularEnv& env) {
    const auto values = policy_eval_dp(env.model(), snapshot_policy(agent, env));
    return {values.v_r1, values.v_g1};
}

struct EpisodeMetrics {
    int episode = 0;
    double v_r1 = 0.0;
    double v_g1 = 0.0;
    double cumulative_regret = 0.0;
    double cumulative_violation_signed = 0.0;
    double cumulative_violation_positive = 0.0;
    double dual = 0.0;  // Y_k used in episode k
    double wall_time_s = 0.0;
};

struct RunMetrics {
    std::uint64_t seed = 0;
    std::vector<EpisodeMetrics> episodes;
    /// Episodes whose policy met the constraint yet beat V* (should stay 0).
    long optimality_breaches = 0;
    double final_dual = 0.0;
};

inline RunMetrics run_trial(const ResolvedRun& run, std::uint64_t seed, bool record_wall_time = false) {
    TabularEnv env(run.model);
    PrimalDualAgent agent(run.agent, run.model.threshold);
    RandomStream root(seed);
    RandomStream env_rng = root.substream(1);
    RandomStream policy_rng = root.substream(2);
    const double b = run.model.threshold;

    RunMetrics metrics;
    metrics.seed = seed;
    metrics.episodes.reserve(static_cast<std::size_t>(run.agent.episodes));
    const auto start = std::chrono::steady_clock::now();
    double regret = 0.0, violation = 0.0;
    for (int k = 1; k <= run.agent.episodes; ++k) {
        SnapshotValues values;
        const EpisodeTrace trace = agent.run_episode(
            env, env_rng, policy_rng,
            [&](const PrimalDualAgent& planned) { values = evaluate_policy_snapshot(planned, env); });
        regret += run.optimal_value - values.v_r1;
        violation += b - values.v_g1;
        if (values.v_g1 >= b - 1e-9 && values.v_r1 > run.optimal_value + 1e-7) ++metrics.optimality_breaches;
        EpisodeMetrics row;
        row.episode = k;
        row.v_r1 = values.v_r1;
        row.v_g1 = values.v_g1;
        row.cumulative_regret = regret;
        row.cumulative_violation_signed = violation;
        row.cumulative_violation_positive = std::max(violation, 0.0);
        row.dual = trace.dual_used;
        if (record_wall_time)
            row.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        metrics.episodes.push_back(row);
    }
    metrics.final_dual = agent.dual();
    return metrics;
}

struct AggregateRow {
    int episode = 0;
    double regret_mean = 0.0, regret_std = 0.0;
    double violation_signed_mean = 0.0, violation_signed_std = 0.0;
    double violation_positive_mean = 0.0, violation_positive_std = 0.0;
    double dual_mean = 0.0, dual_std = 0.0;
    double regret_over_sqrt_k = 0.0;
};

struct Summary {
    std::vector<AggregateRow> rows;
    int trials = 0;
    /// Mean Regret(K) / Regret(floor(K/2)); NaN when K < 2.
    double regret_ratio = std::numeric_limits<double>::quiet_NaN();
};

/// Mean and population standard deviation across trials at every episode.
inline Summary summarize(const std::vector<RunMetrics>& trials) {
    if (trials.empty()) throw std::invalid_argument("summarize: need at least one trial");
    const std::size_t K = trials.front().episodes.size();
    for (const auto& t : trials)
        if (t.episodes.size() != K) throw std::invalid_argument("summarize: trials differ in length");
    Summary out;
    out.trials = static_cast<int>(trials.size());
    out.rows.resize(K);
    const double n = static_cast<double>(trials.size());
    // shifted by the first trial so that identical trials give exactly zero spread
    auto moments = [&](std::size_t k, auto field, double& mean, double& stddev) {
        const double shift = field(trials.front().episodes[k]);
        double s = 0.0, s2 = 0.0;
        for (const auto& t : trials) {
            const double d = field(t.episodes[k]) - shift;
            s += d;
            s2 += d * d;
        }
        mean = shift + s / n;
        stddev = std::sqrt(std::max(s2 / n - (s / n) * (s / n), 0.0));
    };
    for (std::size_t k = 0; k < K; ++k) {
        AggregateRow& row = out.rows[k];
        row.episode = trials.front().episodes[k].episode;
        moments(k, [](const EpisodeMetrics& e) { return e.cumulative_regret; }, row.regret_mean, row.regret_std);
        moments(k, [](const EpisodeMetrics& e) { return e.cumulative_violation_signed; },
                row.violation_signed_mean, row.violation_signed_std);
        moments(k, [](const EpisodeMetrics& e) { return e.cumulative_violation_positive; },
                row.violation_positive_mean, row.violation_positive_std);
        moments(k, [](const EpisodeMetrics& e) { return e.dual; }, row.dual_mean, row.dual_std);
        row.regret_over_sqrt_k = row.regret_mean / std::sqrt(static_cast<double>(row.episode));
    }
    if (K >= 2) out.regret_ratio = out.rows[K - 1].regret_mean / out.rows[K / 2 - 1].regret_mean;
    return out;
}

struct ExperimentResult {
    ResolvedRun run;
    std::vector<RunMetrics> trials;
    Summary summary;
};

inline ExperimentResult run_experiment(const RunConfig& config);

namespace detail {

inline std::string format_number(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

}  // namespace detail

inline void write_trial_csv(std::ostream& out, const RunMetrics& metrics) {
    using detail::format_number;
    out << "episode,cumulative_regret,cumulative_violation_signed,"
           "cumulative_violation_positive_part,dual_Y,wall_time_s\n";
    for (const auto& e : metrics.episodes)
        out << e.episode << ',' << format_number(e.cumulative_regret) << ','
            << format_number(e.cumulative_violation_signed) << ','
            << format_number(e.cumulative_violation_positive) << ',' << format_number(e.dual) << ','
            << format_number(e.wall_time_s) << '\n';
}

inline void write_aggregate_csv(std::ostream& out, const Summary& summary) {
    using detail::format_number;
    out << "episode,cumulative_regret_mean,cumulative_regret_std,cumulative_violation_signed_mean,"
           "cumulative_violation_signed_std,cumulative_violation_positive_part_mean,"
           "cumulative_violation_positive_part_std,dual_Y_mean,dual_Y_std,regret_over_sqrt_k\n";
    for (const auto& r : summary.rows)
        out << r.episode << ',' << format_number(r.regret_mean) << ',' << format_number(r.regret_std) << ','
            << format_number(r.violation_signed_mean) << ',' << format_number(r.violation_signed_std) << ','
            << format_number(r.violation_positive_mean) << ',' << format_number(r.violation_positive_std)
            << ',' << format_number(r.dual_mean) << ',' << format_number(r.dual_std) << ','
            << format_number(r.regret_over_sqrt_k) << '\n';
}

inline nlohmann::json summary_json(const ExperimentResult& result) {
    const ResolvedRun& run = result.run;
    nlohmann::json j;
    j["env"] = run.config.env;
    j["mode"] = to_string(run.config.mode);
    j["episodes"] = run.agent.episodes;
    j["seeds"] = run.seeds;
    j["threshold"] = run.model.threshold;
    j["zeta"] = run.zeta;
    j["agent"] = {{"feature_dim", run.agent.feature_dim}, {"horizon", run.agent.horizon},
                  {"action_count", run.agent.action_count}, {"lambda_reg", run.agent.lambda_reg},
                  {"c1", run.agent.c1}, {"failure_prob", run.agent.failure_prob},
                  {"slater_gamma", run.agent.slater_gamma}};
    j["parameters"] = {{"xi", run.params.xi}, {"alpha", run.params.alpha}, {"eta", run.params.eta},
                       {"beta", run.params.beta}, {"iota", run.params.iota}};
    j["oracle"] = {{"optimal_value", run.optimal_value}, {"slater_margin", run.slater_margin}};
    j["warnings"] = run.warnings;
    const auto& rows = result.summary.rows;
    if (!rows.empty()) {
        j["final"] = {{"cumulative_regret_mean", rows.back().regret_mean},
                      {"cumulative_violation_signed_mean", rows.back().violation_signed_mean},
                      {"cumulative_violation_positive_part_mean", rows.back().violation_positive_mean},
                      {"dual_Y_mean", rows.back().dual_mean}};
    }
    j["regret_ratio_K_over_half_K"] =
        std::isfinite(result.summary.regret_ratio) ? nlohmann::json(result.summary.regret_ratio) : nlohmann::json();
    long breaches = 0;
    for (const auto& t : result.trials) breaches += t.optimality_breaches;
    j["optimality_breaches"] = breaches;
    return j;
}

inline void write_outputs(const ExperimentResult& result, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    auto open = [&](const std::string& name) {
        std::ofstream out(fs::path(dir) / name);
        if (!out) throw std::runtime_error("cannot write " + (fs::path(dir) / name).string());
        return out;
    };
    for (std::size_t i = 0; i < result.trials.size(); ++i) {
        auto out = open("trial_" + std::to_string(i) + "_seed_" + std::to_string(result.trials[i].seed) + ".csv");
        write_trial_csv(out, result.trials[i]);
    }
    {
        auto out = open("aggregate.csv");
        write_aggregate_csv(out, result.summary);
    }
    auto out = open("summary.json");
    out << summary_json(result).dump(2) << '\n';
}

/// Runs every seed (in parallel worker threads) and writes the outputs when
/// an output directory is configured. Results do not depend on scheduling.
inline ExperimentResult run_experiment(const RunConfig& config) {
    ExperimentResult result;
    result.run = resolve(config);
    const auto& seeds = result.run.seeds;
    result.trials.resize(seeds.size());

    unsigned workers = config.workers > 0 ? static_cast<unsigned>(config.workers)
                                          : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, static_cast<unsigned>(seeds.size()));
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    auto worker = [&] {
        for (std::size_t i = next++; i < seeds.size(); i = next++) {
            try {
                result.trials[i] = run_trial(result.run, seeds[i], config.record_wall_time);
                log(LogLevel::info, "finished trial " + std::to_string(i) + " (seed " + std::to_string(seeds[i]) + ")");
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    if (error) std::rethrow_exception(error);

    result.summary = summarize(result.trials);
    if (!config.output_dir.empty()) write_outputs(result, config.output_dir);
    return result;
}

}  // namespace cmdp
