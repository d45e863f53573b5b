#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hdpo/config.hpp"
#include "hdpo/policy.hpp"
#include "hdpo/tasks.hpp"

namespace hdpo::evaluate {

// Unbiased estimator 1 - C(n-c, k)/C(n, k) evaluated as a stable product.
// Requires 0 <= c <= n and 1 <= k <= n.
double pass_at_k(int n, int c, int k);

// Validation prompts drawn from the configured mixture under a dedicated
// derived stream, so training consumes none of their randomness.
std::vector<tasks::TaskInstance> build_validation_set(const config::ExperimentConfig& cfg);

struct EvalResult {
  std::map<std::string, double> pass_at_k;  // "pass@1" -> mean over prompts
  double mean_reward = 0.0;                 // fraction of correct samples
};

// n samples per prompt at the given temperature; pass@k averaged over
// prompts. Deterministic given (seed_root, step): per-prompt streams are
// derived, never shared.
EvalResult run_eval(const policy::PolicySnapshot& pol,
                    const std::vector<tasks::TaskInstance>& prompts,
                    int samples_per_prompt, const std::vector<int>& k_list,
                    double temperature, std::uint64_t seed_root, std::int64_t step);

}  // namespace hdpo::evaluate
