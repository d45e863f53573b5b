#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hdpo/gradients.hpp"
#include "hdpo/grpo.hpp"
#include "hdpo/numerics.hpp"
#include "hdpo/policy.hpp"
#include "hdpo/rng.hpp"
#include "hdpo/tasks.hpp"

namespace hdpo::distill {

enum class TeacherMode { frozen, drifting };

struct DistillConfig {
  double lambda = 0.1;  // >= 0
  int top_k = 64;       // capped at |V| when larger
  int max_cliff_prompts_per_step = 32;
  int privileged_rollouts_per_cliff = 4;
  double teacher_success_threshold = 1.0;
  TeacherMode teacher_mode = TeacherMode::drifting;
};

// One accepted privileged trajectory: start context carries the privileged
// block, generated holds the trajectory scored at reward >= threshold.
struct DistillEntry {
  tasks::TaskInstance task;
  policy::Trajectory trajectory;
};

struct DistillationSet {
  std::vector<DistillEntry> entries;
  std::size_t n_tok = 0;  // exact global token count across entries
};

// Tasks of the all-zero-reward groups, in batch order, truncated to cap.
std::vector<tasks::TaskInstance> collect_cliffs(
    const std::vector<grpo::RolloutGroup>& groups, int cap);

// Rollouts conditioned on the privileged context; the generated segment
// excludes the block itself. Scored by the verifier of the original task.
std::vector<policy::Trajectory> privileged_rollouts(const policy::PolicySnapshot& pol,
                                                    const tasks::TaskInstance& task,
                                                    int count, double temperature,
                                                    rng::Stream& rng);

// Retains trajectories whose re-verified reward meets the threshold. An
// empty result is valid: that cliff contributes nothing this step.
std::vector<policy::Trajectory> filter_r1(const std::vector<policy::Trajectory>& rollouts,
                                          const tasks::TaskInstance& task,
                                          double threshold);

// Top-k of the teacher's next-token distribution at ctx, k capped at |V|.
numerics::TopKDistribution teacher_topk(const policy::PolicySnapshot& teacher,
                                        const policy::Context& ctx, int k);

// Full per-step pipeline: cliffs -> privileged rollouts -> filter -> set.
// Privileged generation draws only from streams derived under the given
// root/step, so runs that skip it consume identical randomness elsewhere.
struct CliffDistillation {
  DistillationSet set;
  int cliff_count = 0;       // cliffs used (after cap)
  int privileged_total = 0;  // privileged rollouts generated
  int privileged_passed = 0; // rollouts accepted by the filter
};
CliffDistillation build_distillation_set(const std::vector<grpo::RolloutGroup>& groups,
                                         const policy::PolicySnapshot& generator,
                                         const DistillConfig& cfg, double temperature,
                                         std::uint64_t seed_root, std::int64_t step);

// (1/N_tok) * sum over entries and positions of the truncated JSD between
// the teacher at the privileged context and the student at the same context
// with the privileged block stripped. Throws std::invalid_argument on an
// empty set (callers skip the term instead).
double jsd_distill_loss(const DistillationSet& set,
                        const policy::PolicySnapshot& teacher,
                        const policy::PolicySnapshot& student,
                        const DistillConfig& cfg);

// Appends per-position JSD terms weighted by lambda_weight / N_tok. Teacher
// top-k targets are captured by value (no gradient flows to the teacher).
void append_loss_terms(const DistillationSet& set,
                       const policy::PolicySnapshot& teacher,
                       const DistillConfig& cfg, double lambda_weight,
                       policy::LossSpec& spec);

// L_GRPO + lambda * L_JSD
double hdpo_step_loss(double grpo_loss_value, double distill_loss_value, double lambda);

}  // namespace hdpo::distill
