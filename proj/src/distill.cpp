#include "hdpo/distill.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace hdpo::distill {

std::vector<tasks::TaskInstance> collect_cliffs(
    const std::vector<grpo::RolloutGroup>& groups, int cap) {
  std::vector<tasks::TaskInstance> cliffs;
  if (cap <= 0) return cliffs;
  for (const grpo::RolloutGroup& group : groups) {
    if (!grpo::is_cliff(group)) continue;
    cliffs.push_back(group.task);
    if (static_cast<int>(cliffs.size()) == cap) break;
  }
  return cliffs;
}

std::vector<policy::Trajectory> privileged_rollouts(const policy::PolicySnapshot& pol,
                                                    const tasks::TaskInstance& task,
                                                    int count, double temperature,
                                                    rng::Stream& rng) {
  if (count < 1) throw std::invalid_argument("privileged_rollouts: count < 1");
  const policy::Context ctx = tasks::privileged_context(task);
  const int max_len = tasks::rollout_budget(task);
  std::vector<policy::Trajectory> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    policy::Trajectory traj = policy::sample_rollout(pol, ctx, max_len, temperature, rng);
    traj.reward = tasks::verify(task, traj.generated);
    out.push_back(std::move(traj));
  }
  return out;
}

std::vector<policy::Trajectory> filter_r1(const std::vector<policy::Trajectory>& rollouts,
                                          const tasks::TaskInstance& task,
                                          double threshold) {
  std::vector<policy::Trajectory> accepted;
  for (const policy::Trajectory& traj : rollouts) {
    if (static_cast<double>(tasks::verify(task, traj.generated)) >= threshold)
      accepted.push_back(traj);
  }
  return accepted;
}

numerics::TopKDistribution teacher_topk(const policy::PolicySnapshot& teacher,
                                        const policy::Context& ctx, int k) {
  const std::vector<double> z = policy::logits(teacher, ctx);
  const int capped = std::min(k, static_cast<int>(z.size()));
  return numerics::topk_from_logits(z, capped);
}

CliffDistillation build_distillation_set(const std::vector<grpo::RolloutGroup>& groups,
                                         const policy::PolicySnapshot& generator,
                                         const DistillConfig& cfg, double temperature,
                                         std::uint64_t seed_root, std::int64_t step) {
  CliffDistillation out;
  const std::vector<tasks::TaskInstance> cliffs =
      collect_cliffs(groups, cfg.max_cliff_prompts_per_step);
  out.cliff_count = static_cast<int>(cliffs.size());
  for (std::size_t c = 0; c < cliffs.size(); ++c) {
    rng::Stream stream(rng::derive(seed_root, "privileged",
                                   static_cast<std::uint64_t>(step), c));
    const std::vector<policy::Trajectory> rollouts = privileged_rollouts(
        generator, cliffs[c], cfg.privileged_rollouts_per_cliff, temperature, stream);
    out.privileged_total += static_cast<int>(rollouts.size());
    for (const policy::Trajectory& traj :
         filter_r1(rollouts, cliffs[c], cfg.teacher_success_threshold)) {
      out.privileged_passed += 1;
      out.set.n_tok += traj.generated.size();
      out.set.entries.push_back(DistillEntry{cliffs[c], traj});
    }
  }
  return out;
}

namespace {

policy::LossTerm jsd_position_term(const numerics::TopKDistribution& target,
                                   policy::Context student_ctx, double weight,
                                   std::string label) {
  return policy::LossTerm{
      std::move(student_ctx),
      [target, weight](std::span<const double> z, std::vector<double>* dz) {
        const std::vector<double> q = numerics::softmax(z);
        const double value = weight * numerics::jsd_topk(target, q);
        if (dz != nullptr) {
          const std::vector<double> gq = numerics::jsd_topk_grad_student(target, q);
          double dot = 0.0;
          for (std::size_t j = 0; j < q.size(); ++j) dot += q[j] * gq[j];
          dz->assign(z.size(), 0.0);
          for (std::size_t i = 0; i < z.size(); ++i)
            (*dz)[i] = weight * q[i] * (gq[i] - dot);
        }
        return value;
      },
      std::move(label)};
}

}  // namespace

double jsd_distill_loss(const DistillationSet& set,
                        const policy::PolicySnapshot& teacher,
                        const policy::PolicySnapshot& student,
                        const DistillConfig& cfg) {
  if (set.entries.empty() || set.n_tok == 0)
    throw std::invalid_argument("jsd_distill_loss: empty distillation set");
  double total = 0.0;
  for (const DistillEntry& entry : set.entries) {
    double entry_sum = 0.0;  // per-entry partial, then one merge: the sum is
                             // invariant to how entries are split across workers
    policy::Context teacher_ctx = entry.trajectory.start;
    for (std::int32_t tok : entry.trajectory.generated) {
      const numerics::TopKDistribution target =
          teacher_topk(teacher, teacher_ctx, cfg.top_k);
      const policy::Context student_ctx = teacher_ctx.student_view();
      const std::vector<double> q =
          numerics::softmax(policy::logits(student, student_ctx));
      entry_sum += numerics::jsd_topk(target, q);
      teacher_ctx.generated.push_back(tok);
    }
    total += entry_sum;
  }
  return total / static_cast<double>(set.n_tok);
}

void append_loss_terms(const DistillationSet& set,
                       const policy::PolicySnapshot& teacher,
                       const DistillConfig& cfg, double lambda_weight,
                       policy::LossSpec& spec) {
  if (set.entries.empty() || set.n_tok == 0)
    throw std::invalid_argument("append_loss_terms: empty distillation set");
  const double w = lambda_weight / static_cast<double>(set.n_tok);
  for (std::size_t e = 0; e < set.entries.size(); ++e) {
    const DistillEntry& entry = set.entries[e];
    policy::Context teacher_ctx = entry.trajectory.start;
    for (std::size_t t = 0; t < entry.trajectory.generated.size(); ++t) {
      const numerics::TopKDistribution target =
          teacher_topk(teacher, teacher_ctx, cfg.top_k);
      spec.terms.push_back(jsd_position_term(
          target, teacher_ctx.student_view(), w,
          "jsd entry " + std::to_string(e) + " token " + std::to_string(t)));
      teacher_ctx.generated.push_back(entry.trajectory.generated[t]);
    }
  }
}

double hdpo_step_loss(double grpo_loss_value, double distill_loss_value, double lambda) {
  return grpo_loss_value + lambda * distill_loss_value;
}

}  // namespace hdpo::distill
