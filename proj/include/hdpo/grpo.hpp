#pragma once

#include <cstddef>
#include <vector>

#include "hdpo/gradients.hpp"
#include "hdpo/policy.hpp"
#include "hdpo/rng.hpp"
#include "hdpo/tasks.hpp"

namespace hdpo::grpo {

enum class AdvantageMode { loo, mean_std };

struct ClipConfig {
  double epsilon = 0.2;  // ratio clip, 0 < epsilon < 1
  AdvantageMode mode = AdvantageMode::loo;
  double std_floor = 1e-6;    // mean_std sigma floor
  bool rloo_scaling = false;  // multiply loo advantages by G/(G-1)
};

struct RolloutGroup {
  tasks::TaskInstance task;
  std::vector<policy::Trajectory> rollouts;  // per-token old log-probs inside
  std::vector<int> rewards;                  // binary
  std::vector<double> advantages;
};

// G rollouts from the student view of the task prompt, scored by the
// verifier. Advantages are assigned separately.
RolloutGroup generate_group(const policy::PolicySnapshot& pol,
                            const tasks::TaskInstance& task, int G,
                            double temperature, rng::Stream& rng);

// loo: A_i = r_i - mean of the other rewards (optionally scaled by G/(G-1));
// mean_std: A_i = (r_i - mu) / max(sigma, std_floor), with exact zeros when
// all rewards are equal. Both modes map all-equal groups to exact zeros.
std::vector<double> compute_advantages(const std::vector<int>& rewards,
                                       const ClipConfig& cfg);
void assign_advantages(RolloutGroup& group, const ClipConfig& cfg);

// Sum of rewards equal to zero: every rollout failed.
bool is_cliff(const RolloutGroup& group);

struct GrpoDiagnostics {
  double mean_ratio = 0.0;
  double clip_fraction = 0.0;  // tokens where the clip bound is the active branch
  std::size_t tokens = 0;
};

// Token-level mean over the group of -min(rho*A, clip(rho)*A) evaluated
// under `pol` against the rollout-time log-probs. Throws NumericFailure with
// the trajectory/token index when a ratio is non-finite.
double grpo_loss(const RolloutGroup& group, const policy::PolicySnapshot& pol,
                 const ClipConfig& cfg, GrpoDiagnostics* diag = nullptr);

// Appends per-token surrogate terms scaled by group_weight / group token
// count, so the summed spec value equals group_weight * grpo_loss. Tokens
// with zero advantage contribute exactly nothing and are skipped.
void append_loss_terms(const RolloutGroup& group, const ClipConfig& cfg,
                       double group_weight, policy::LossSpec& spec);

}  // namespace hdpo::grpo
