#include "hdpo/train.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include "hdpo/distill.hpp"
#include "hdpo/errors.hpp"
#include "hdpo/evaluate.hpp"
#include "hdpo/gradients.hpp"
#include "hdpo/grpo.hpp"
#include "hdpo/rng.hpp"
#include "hdpo/tasks.hpp"

namespace hdpo::train {

double warmup_factor(std::int64_t step, int warmup_steps) {
  if (warmup_steps <= 0) return 1.0;
  const double frac = std::min(
      1.0, static_cast<double>(step) / static_cast<double>(warmup_steps));
  return 0.1 + 0.9 * frac;
}

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

struct Session {
  config::ExperimentConfig cfg;
  grpo::ClipConfig clip;
  distill::DistillConfig dcfg;
  policy::AdamConfig acfg;
  policy::PolicySnapshot pol;
  policy::AdamState adam;
  bool has_frozen_teacher = false;
  policy::PolicySnapshot frozen_teacher;
  std::vector<tasks::TaskInstance> validation;
  std::map<std::string, double> best;
  std::string metrics_path;
  std::string checkpoint_path;
};

bool is_eval_step(const Session& s, std::int64_t step) {
  return step == 0 || step == s.cfg.schedule.total_steps ||
         step % s.cfg.schedule.eval_period == 0;
}

void attach_eval(Session& s, std::int64_t step, metrics::MetricsRecord& rec) {
  const evaluate::EvalResult ev = evaluate::run_eval(
      s.pol, s.validation, s.cfg.schedule.eval_samples_per_prompt,
      s.cfg.schedule.eval_k_list, s.cfg.grpo.temperature, s.cfg.seed, step);
  rec.eval_pass_at_k = ev.pass_at_k;
  for (const auto& [name, value] : ev.pass_at_k) {
    auto it = s.best.find(name);
    if (it == s.best.end() || value > it->second) s.best[name] = value;
  }
  rec.best_pass_at_k = s.best;
  if (step == 0) rec.mean_reward = ev.mean_reward;
}

checkpoint::Checkpoint snapshot(const Session& s, std::int64_t step) {
  checkpoint::Checkpoint ck;
  ck.step = step;
  ck.config_hash = config::config_hash(s.cfg);
  ck.resume_hash = config::resume_hash(s.cfg);
  ck.policy = s.pol;
  ck.adam = s.adam;
  ck.has_frozen_teacher = s.has_frozen_teacher;
  if (s.has_frozen_teacher) ck.frozen_teacher = s.frozen_teacher;
  ck.rng_cursor = static_cast<std::uint64_t>(step);
  ck.best_pass_at_k = s.best;
  return ck;
}

metrics::MetricsRecord train_step(Session& s, std::int64_t step) {
  const auto started = Clock::now();
  metrics::MetricsRecord rec;
  rec.step = step;
  const std::uint64_t ustep = static_cast<std::uint64_t>(step);
  try {
    // prompt batch and grouped rollouts, each under its own derived stream
    rng::Stream batch_rng(rng::derive(s.cfg.seed, "batch", ustep));
    std::vector<grpo::RolloutGroup> groups;
    groups.reserve(static_cast<std::size_t>(s.cfg.tasks.prompts_per_step));
    for (int i = 0; i < s.cfg.tasks.prompts_per_step; ++i) {
      const int family_idx = batch_rng.next_weighted(s.cfg.tasks.family_weights);
      const int diff_idx = batch_rng.next_weighted(s.cfg.tasks.difficulty_weights);
      const tasks::TaskInstance task = tasks::generate_task(
          tasks::family_from_string(
              s.cfg.tasks.families[static_cast<std::size_t>(family_idx)]),
          s.cfg.tasks.difficulties[static_cast<std::size_t>(diff_idx)], batch_rng);
      rng::Stream roll_rng(
          rng::derive(s.cfg.seed, "rollout", ustep, static_cast<std::uint64_t>(i)));
      groups.push_back(grpo::generate_group(s.pol, task, s.cfg.grpo.group_size,
                                            s.cfg.grpo.temperature, roll_rng));
      grpo::assign_advantages(groups.back(), s.clip);
    }

    std::int64_t reward_sum = 0;
    int cliff_count = 0;
    for (const grpo::RolloutGroup& group : groups) {
      for (int r : group.rewards) reward_sum += r;
      cliff_count += grpo::is_cliff(group) ? 1 : 0;
    }
    rec.mean_reward = static_cast<double>(reward_sum) /
                      (static_cast<double>(groups.size()) *
                       static_cast<double>(s.cfg.grpo.group_size));
    rec.cliff_count = cliff_count;
    rec.cliff_fraction =
        static_cast<double>(cliff_count) / static_cast<double>(groups.size());

    // privileged distillation set; lambda = 0 runs never touch its streams
    distill::CliffDistillation cliff;
    if (s.cfg.hdpo.lambda > 0.0)
      cliff = distill::build_distillation_set(groups, s.pol, s.dcfg,
                                              s.cfg.grpo.temperature, s.cfg.seed,
                                              step);
    rec.t_size = static_cast<std::int64_t>(cliff.set.entries.size());
    rec.n_tok = static_cast<std::int64_t>(cliff.set.n_tok);
    rec.priv_pass_rate =
        cliff.privileged_total > 0
            ? static_cast<double>(cliff.privileged_passed) /
                  static_cast<double>(cliff.privileged_total)
            : 0.0;

    // the teacher scores from this step's pre-update weights in both modes
    const bool distilling = s.cfg.hdpo.lambda > 0.0 && !cliff.set.entries.empty();
    policy::PolicySnapshot drifting_teacher;
    if (distilling && s.dcfg.teacher_mode == distill::TeacherMode::drifting)
      drifting_teacher = s.pol;
    const policy::PolicySnapshot& teacher =
        s.dcfg.teacher_mode == distill::TeacherMode::frozen ? s.frozen_teacher
                                                            : drifting_teacher;

    policy::LossSpec spec_grpo;
    const double group_weight = 1.0 / static_cast<double>(groups.size());
    for (const grpo::RolloutGroup& group : groups)
      grpo::append_loss_terms(group, s.clip, group_weight, spec_grpo);
    policy::LossSpec spec_jsd;
    if (distilling)
      distill::append_loss_terms(cliff.set, teacher, s.dcfg, 1.0, spec_jsd);

    const double lr_eff =
        s.cfg.optimizer.lr * warmup_factor(step, s.cfg.optimizer.warmup_steps);
    rec.lr = lr_eff;
    for (int epoch = 0; epoch < s.cfg.grpo.inner_epochs; ++epoch) {
      const policy::LossValueAndGrad out_grpo =
          policy::grad_of_scalar_loss(s.pol, spec_grpo);
      policy::GradientAccumulator grad = out_grpo.grad;
      double jsd_value = 0.0;
      if (distilling) {
        const policy::LossValueAndGrad out_jsd =
            policy::grad_of_scalar_loss(s.pol, spec_jsd);
        jsd_value = out_jsd.value;
        policy::add_scaled(grad, out_jsd.grad, s.cfg.hdpo.lambda);
      }
      const double norm =
          policy::apply_update(s.pol, std::move(grad), s.adam, lr_eff,
                               s.cfg.optimizer.max_grad_norm, s.acfg);
      if (epoch == 0) {
        rec.loss_grpo = out_grpo.value;
        rec.loss_jsd = jsd_value;
        rec.grad_norm = norm;
      }
    }
  } catch (const NumericFailure& e) {
    throw NumericFailure(e.what(), "step " + std::to_string(step));
  }

  if (is_eval_step(s, step)) attach_eval(s, step, rec);
  rec.wall_ms = elapsed_ms(started);
  return rec;
}

Session open_session(const config::ExperimentConfig& cfg) {
  config::validate(cfg);
  Session s;
  s.cfg = cfg;
  s.clip = config::clip_config(cfg);
  s.dcfg = config::distill_config(cfg);
  s.acfg = config::adam_config(cfg);
  s.validation = evaluate::build_validation_set(cfg);
  fs::create_directories(cfg.out_dir);
  s.metrics_path = (fs::path(cfg.out_dir) / "metrics.jsonl").string();
  s.checkpoint_path = (fs::path(cfg.out_dir) / "checkpoint.json").string();
  return s;
}

TrainResult drive(Session& s, std::int64_t start_step) {
  TrainResult result;
  for (std::int64_t step = start_step; step <= s.cfg.schedule.total_steps; ++step) {
    metrics::MetricsRecord rec;
    if (step == 0) {
      const auto started = Clock::now();
      rec.step = 0;
      attach_eval(s, 0, rec);
      rec.wall_ms = elapsed_ms(started);
    } else {
      rec = train_step(s, step);
    }
    metrics::append_metrics(s.metrics_path, rec);
    result.metrics.push_back(std::move(rec));
    if (is_eval_step(s, step))
      checkpoint::save_checkpoint(s.checkpoint_path, snapshot(s, step));
  }
  result.final_checkpoint = snapshot(s, s.cfg.schedule.total_steps);
  checkpoint::save_checkpoint(s.checkpoint_path, result.final_checkpoint);
  return result;
}

}  // namespace

TrainResult run(const config::ExperimentConfig& cfg) {
  Session s = open_session(cfg);

  rng::Stream init(rng::derive(cfg.seed, "init"));
  const policy::PolicyConfig pcfg = config::policy_config(cfg);
  s.pol = pcfg.backend == policy::Backend::tabular
              ? policy::make_tabular(pcfg.vocab_size, pcfg.window, pcfg.eos_id)
              : policy::make_tiny_net(pcfg, init);
  s.adam = policy::make_adam_state(s.pol);
  s.has_frozen_teacher =
      s.dcfg.teacher_mode == distill::TeacherMode::frozen && cfg.hdpo.lambda > 0.0;
  if (s.has_frozen_teacher) s.frozen_teacher = s.pol;

  config::save_config((fs::path(cfg.out_dir) / "config.json").string(), cfg);
  tasks::write_taskset((fs::path(cfg.out_dir) / "validation.jsonl").string(),
                       s.validation);
  std::ofstream(s.metrics_path, std::ios::trunc).close();

  return drive(s, 0);
}

TrainResult resume(const config::ExperimentConfig& cfg,
                   const checkpoint::Checkpoint& ck) {
  Session s = open_session(cfg);
  if (ck.resume_hash != config::resume_hash(cfg))
    throw std::invalid_argument(
        "resume: checkpoint was produced under an incompatible config");
  if (ck.step > cfg.schedule.total_steps)
    throw std::invalid_argument("resume: checkpoint is past total_steps");

  s.pol = ck.policy;
  s.adam = ck.adam;
  s.has_frozen_teacher = ck.has_frozen_teacher;
  if (s.has_frozen_teacher) s.frozen_teacher = ck.frozen_teacher;
  s.best = ck.best_pass_at_k;

  return drive(s, ck.step + 1);
}

}  // namespace hdpo::train
