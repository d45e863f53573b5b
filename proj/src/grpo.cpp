#include "hdpo/grpo.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "hdpo/errors.hpp"
#include "hdpo/numerics.hpp"

namespace hdpo::grpo {

RolloutGroup generate_group(const policy::PolicySnapshot& pol,
                            const tasks::TaskInstance& task, int G,
                            double temperature, rng::Stream& rng) {
  if (G < 2) throw std::invalid_argument("generate_group: G < 2");
  RolloutGroup group;
  group.task = task;
  group.rollouts.reserve(static_cast<std::size_t>(G));
  group.rewards.reserve(static_cast<std::size_t>(G));
  const policy::Context prompt = tasks::prompt_context(task);
  const int max_len = tasks::rollout_budget(task);
  for (int i = 0; i < G; ++i) {
    policy::Trajectory traj =
        policy::sample_rollout(pol, prompt, max_len, temperature, rng);
    traj.reward = tasks::verify(task, traj.generated);
    group.rewards.push_back(traj.reward);
    group.rollouts.push_back(std::move(traj));
  }
  return group;
}

std::vector<double> compute_advantages(const std::vector<int>& rewards,
                                       const ClipConfig& cfg) {
  const std::size_t g = rewards.size();
  if (g < 2) throw std::invalid_argument("compute_advantages: group size < 2");
  if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0))
    throw std::invalid_argument("compute_advantages: epsilon outside (0,1)");
  int sum = 0;
  for (int r : rewards) sum += r;
  std::vector<double> adv(g, 0.0);
  // all-equal binary rewards: exact zeros in both modes
  if (sum == 0 || sum == static_cast<int>(g)) return adv;
  if (cfg.mode == AdvantageMode::loo) {
    const double scale =
        cfg.rloo_scaling ? static_cast<double>(g) / static_cast<double>(g - 1) : 1.0;
    for (std::size_t i = 0; i < g; ++i) {
      const double others = static_cast<double>(sum - rewards[i]) /
                            static_cast<double>(g - 1);
      adv[i] = scale * (static_cast<double>(rewards[i]) - others);
    }
    return adv;
  }
  const double mu = static_cast<double>(sum) / static_cast<double>(g);
  double var = 0.0;
  for (int r : rewards) var += (r - mu) * (r - mu);
  var /= static_cast<double>(g);
  const double denom = std::max(std::sqrt(var), cfg.std_floor);
  for (std::size_t i = 0; i < g; ++i) adv[i] = (rewards[i] - mu) / denom;
  return adv;
}

void assign_advantages(RolloutGroup& group, const ClipConfig& cfg) {
  group.advantages = compute_advantages(group.rewards, cfg);
}

bool is_cliff(const RolloutGroup& group) {
  int sum = 0;
  for (int r : group.rewards) sum += r;
  return sum == 0;
}

namespace {

// -min(rho*A, clip(rho, 1-eps, 1+eps)*A) and its derivative wrt the new
// log-prob; the unclipped branch is active at ties
struct SurrogateEval {
  double value;
  double dvalue_dlp;  // before the chain through logits
  double ratio;
  bool clip_active;
};

SurrogateEval eval_surrogate(double new_lp, double old_lp, double advantage,
                             double epsilon) {
  SurrogateEval out{};
  const double rho = std::exp(new_lp - old_lp);
  out.ratio = rho;
  const double clipped = std::min(std::max(rho, 1.0 - epsilon), 1.0 + epsilon);
  const double unclipped_obj = rho * advantage;
  const double clipped_obj = clipped * advantage;
  if (unclipped_obj <= clipped_obj) {
    out.value = -unclipped_obj;
    out.dvalue_dlp = -advantage * rho;
    out.clip_active = false;
  } else {
    out.value = -clipped_obj;
    out.dvalue_dlp = 0.0;
    out.clip_active = true;
  }
  return out;
}

}  // namespace

double grpo_loss(const RolloutGroup& group, const policy::PolicySnapshot& pol,
                 const ClipConfig& cfg, GrpoDiagnostics* diag) {
  if (group.advantages.size() != group.rollouts.size())
    throw std::invalid_argument("grpo_loss: advantages not assigned");
  double total = 0.0;
  double ratio_sum = 0.0;
  std::size_t clipped = 0;
  std::size_t tokens = 0;
  for (std::size_t i = 0; i < group.rollouts.size(); ++i) {
    const policy::Trajectory& traj = group.rollouts[i];
    policy::Context ctx = traj.start;
    for (std::size_t t = 0; t < traj.generated.size(); ++t) {
      const std::vector<double> z = policy::logits(pol, ctx);
      const double new_lp =
          z[static_cast<std::size_t>(traj.generated[t])] - numerics::log_sum_exp(z);
      const SurrogateEval ev =
          eval_surrogate(new_lp, traj.logprobs[t], group.advantages[i], cfg.epsilon);
      if (!std::isfinite(ev.ratio))
        throw NumericFailure("grpo ratio", "rollout " + std::to_string(i) +
                                               " token " + std::to_string(t));
      total += ev.value;
      ratio_sum += ev.ratio;
      if (ev.clip_active) ++clipped;
      ++tokens;
      ctx.generated.push_back(traj.generated[t]);
    }
  }
  if (tokens == 0) throw std::invalid_argument("grpo_loss: group has no tokens");
  if (diag != nullptr) {
    diag->mean_ratio = ratio_sum / static_cast<double>(tokens);
    diag->clip_fraction = static_cast<double>(clipped) / static_cast<double>(tokens);
    diag->tokens = tokens;
  }
  return total / static_cast<double>(tokens);
}

void append_loss_terms(const RolloutGroup& group, const ClipConfig& cfg,
                       double group_weight, policy::LossSpec& spec) {
  if (group.advantages.size() != group.rollouts.size())
    throw std::invalid_argument("append_loss_terms: advantages not assigned");
  std::size_t tokens = 0;
  for (const policy::Trajectory& traj : group.rollouts) tokens += traj.generated.size();
  if (tokens == 0) throw std::invalid_argument("append_loss_terms: group has no tokens");
  const double w = group_weight / static_cast<double>(tokens);
  for (std::size_t i = 0; i < group.rollouts.size(); ++i) {
    const double adv = group.advantages[i];
    if (adv == 0.0) continue;
    const policy::Trajectory& traj = group.rollouts[i];
    for (std::size_t t = 0; t < traj.generated.size(); ++t) {
      const std::int32_t tok = traj.generated[t];
      const double old_lp = traj.logprobs[t];
      const double eps = cfg.epsilon;
      const std::string label =
          "ppo rollout " + std::to_string(i) + " token " + std::to_string(t);
      spec.terms.push_back(policy::LossTerm{
          traj.start.with_generated(
              std::span<const std::int32_t>(traj.generated.data(), t)),
          [tok, old_lp, adv, eps, w, label](std::span<const double> z,
                                            std::vector<double>* dz) {
            const double lse = numerics::log_sum_exp(z);
            const double new_lp = z[static_cast<std::size_t>(tok)] - lse;
            const SurrogateEval ev = eval_surrogate(new_lp, old_lp, adv, eps);
            if (!std::isfinite(ev.ratio)) throw NumericFailure("grpo ratio", label);
            if (dz != nullptr) {
              // d lp / d z = onehot(tok) - softmax(z)
              const std::vector<double> p = numerics::softmax(z);
              dz->assign(z.size(), 0.0);
              if (ev.dvalue_dlp != 0.0) {
                for (std::size_t v = 0; v < z.size(); ++v)
                  (*dz)[v] = -w * ev.dvalue_dlp * p[v];
                (*dz)[static_cast<std::size_t>(tok)] += w * ev.dvalue_dlp;
              }
            }
            return w * ev.value;
          },
          label});
    }
  }
}

}  // namespace hdpo::grpo
