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

// Plays the job-scheduling benchmark with one seed and prints the cumulative
// regret and violation every K/10 episodes.
//
//   job_scheduler_demo [episodes] [c1] [seed]

#include "cmdp/harness.hpp"

#include <cstdio>
#include <cstdlib>

int main(int argc, char** argv) {
    cmdp::RunConfig config;
    config.agent.episodes = argc > 1 ? std::atoi(argv[1]) : 2000;
    config.agent.c1 = argc > 2 ? std::atof(argv[2]) : 0.01;
    config.seeds = {argc > 3 ? std::strtoull(argv[3], nullptr, 10) : 1ULL};
    config.agent.slater_gamma = 1.0;

    const auto run = cmdp::resolve(config);
    std::printf("V* = %.6f  slater margin = %.6f  alpha = %.3f  eta = %.5f  beta = %.4f  xi = %.2f\n",
                run.optimal_value, run.slater_margin, run.params.alpha, run.params.eta, run.params.beta,
                run.params.xi);
    const auto metrics = cmdp::run_trial(run, config.seeds.front());
    const int K = config.agent.episodes;
    for (int k = K / 10; k <= K; k += K / 10) {
        const auto& e = metrics.episodes[static_cast<std::size_t>(k - 1)];
        std::printf("k=%6d  regret=%10.3f  violation=%9.3f  Y=%.3f  V_r=%.4f V_g=%.4f\n", k,
                    e.cumulative_regret, e.cumulative_violation_signed, e.dual, e.v_r1, e.v_g1);
    }
    return 0;
}
