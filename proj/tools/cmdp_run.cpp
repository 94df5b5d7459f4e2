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

// cmdp_run: experiment runner for the primal-dual soft-max LSVI-UCB agent.
//
//   cmdp_run run --episodes 20000 --seeds 1,2,3 --mode zero_violation --zeta 0.1 -o out/
//   cmdp_run solve --env model.json
//   cmdp_run export-env --env job_scheduler -o job_scheduler.json
//
// Every `run` flag can also come from an INI/TOML file given with --config
// (keys in a [run] section); flags on the command line win over the file.
//
//   cmdp_run --config experiment.ini run --c1 0.001

#include "cmdp/harness.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <map>

namespace {

const std::map<std::string, cmdp::LogLevel> kLogLevels{{"debug", cmdp::LogLevel::debug},
                                                       {"info", cmdp::LogLevel::info},
                                                       {"warn", cmdp::LogLevel::warn},
                                                       {"error", cmdp::LogLevel::error},
                                                       {"off", cmdp::LogLevel::off}};

const std::map<std::string, cmdp::ConstraintMode> kModes{{"standard", cmdp::ConstraintMode::standard},
                                                         {"zero_violation", cmdp::ConstraintMode::zero_violation}};

template <class T>
void optional_flag(CLI::App* app, const std::string& name, std::optional<T>& target, const std::string& help) {
    app->add_option_function<T>(name, [&target](const T& v) { target = v; }, help);
}

void print_run_summary(const cmdp::ExperimentResult& r) {
    const auto& p = r.run.params;
    std::printf("env=%s mode=%s K=%d trials=%zu\n", r.run.config.env.c_str(), cmdp::to_string(r.run.config.mode),
                r.run.agent.episodes, r.trials.size());
    std::printf("V*=%.6f slater_margin=%.6f zeta=%g\n", r.run.optimal_value, r.run.slater_margin, r.run.zeta);
    std::printf("xi=%g alpha=%g eta=%g beta=%g\n", p.xi, p.alpha, p.eta, p.beta);
    const auto& last = r.summary.rows.back();
    std::printf("final: regret %.4f (std %.4f)  violation %.4f (std %.4f)  positive part %.4f  Y %.4f\n",
                last.regret_mean, last.regret_std, last.violation_signed_mean, last.violation_signed_std,
                last.violation_positive_mean, last.dual_mean);
    if (std::isfinite(r.summary.regret_ratio))
        std::printf("Regret(K)/Regret(K/2) = %.4f\n", r.summary.regret_ratio);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Primal-dual soft-max LSVI-UCB for constrained MDPs"};
    app.require_subcommand(1);
    std::string log_level = "warn";
    app.add_option("--log-level", log_level, "debug, info, warn, error or off")
        ->check(CLI::IsMember(kLogLevels))
        ->capture_default_str();

    app.set_config("--config", "", "INI/TOML file; options of the run subcommand go in a [run] section");

    cmdp::RunConfig config;
    std::string mode = "standard";
    auto* run = app.add_subcommand("run", "run the agent and write per-trial and aggregate CSV files");
    run->add_option("--env", config.env, "builtin environment name or path to a tabular JSON file")
        ->capture_default_str();
    run->add_option("-K,--episodes", config.agent.episodes, "number of episodes K")->required();
    run->add_option("--seeds", config.seeds, "seed list")->delimiter(',');
    run->add_option("--trials", config.trials, "number of trials; seeds are extended as last+1, last+2, ...");
    run->add_option("--gamma", config.agent.slater_gamma, "Slater margin gamma")->capture_default_str();
    run->add_option("--mode", mode, "standard or zero_violation")
        ->check(CLI::IsMember(kModes))
        ->capture_default_str();
    optional_flag(run, "--zeta", config.zeta, "tightening zeta (zero_violation mode)");
    run->add_option("--zeta-constant", config.zeta_constant, "c in the default zeta = min{c sqrt(T)/K, gamma/2}")
        ->capture_default_str();
    run->add_option("--c1", config.agent.c1, "bonus constant C1")->capture_default_str();
    run->add_option("--lambda", config.agent.lambda_reg, "ridge regularizer lambda")->capture_default_str();
    run->add_option("--failure-prob", config.agent.failure_prob, "failure probability p inside iota")
        ->capture_default_str();
    optional_flag(run, "--alpha", config.agent.alpha, "override the soft-max parameter alpha");
    optional_flag(run, "--beta", config.agent.beta, "override the bonus multiplier beta");
    optional_flag(run, "--eta", config.agent.eta, "override the dual step size eta");
    optional_flag(run, "--xi", config.agent.xi, "override the dual bound xi");
    run->add_option("-o,--output", config.output_dir, "output directory (nothing is written when empty)");
    run->add_flag("--record-wall-time", config.record_wall_time,
                  "write elapsed seconds instead of 0 in wall_time_s (output is then not reproducible)");
    run->add_option("--workers", config.workers, "worker threads (0: hardware concurrency)");

    std::string env_name = "job_scheduler", export_path;
    auto* exporter = app.add_subcommand("export-env", "write an environment as tabular JSON");
    exporter->add_option("--env", env_name, "builtin environment name or JSON path")->capture_default_str();
    exporter->add_option("-o,--output", export_path, "destination file")->required();

    std::string solve_env = "job_scheduler";
    std::optional<double> solve_threshold;
    auto* solve = app.add_subcommand("solve", "print oracle values (V*, unconstrained optimum, Slater margin)");
    solve->add_option("--env", solve_env, "builtin environment name or JSON path")->capture_default_str();
    optional_flag(solve, "--threshold", solve_threshold, "threshold b (defaults to the model's)");

    CLI11_PARSE(app, argc, argv);
    cmdp::log_threshold() = kLogLevels.at(log_level);

    try {
        if (*run) {
            config.mode = kModes.at(mode);
            const auto result = cmdp::run_experiment(config);
            print_run_summary(result);
            if (!config.output_dir.empty()) std::printf("wrote %s\n", config.output_dir.c_str());
        } else if (*exporter) {
            cmdp::save_tabular(cmdp::load_environment(env_name), export_path);
        } else if (*solve) {
            const auto m = cmdp::load_environment(solve_env);
            m.validate();
            const double b = solve_threshold.value_or(m.threshold);
            std::printf("threshold b = %.12g\n", b);
            std::printf("unconstrained max V_r = %.12g\n", cmdp::optimal_value_dp(m, 1.0, 0.0).value);
            std::printf("max V_g = %.12g (Slater margin %.12g)\n", cmdp::optimal_value_dp(m, 0.0, 1.0).value,
                        cmdp::optimal_value_dp(m, 0.0, 1.0).value - b);
            const auto lp = cmdp::solve_occupancy_lp(m, b);
            if (!lp) {
                std::printf("constrained problem is infeasible\n");
                return 2;
            }
            const auto v = cmdp::policy_eval_dp(m, lp->policy);
            std::printf("constrained optimum V* = %.12g (policy V_g = %.12g)\n", lp->optimal_value, v.v_g1);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
