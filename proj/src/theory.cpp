#include "hdpo/theory.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "hdpo/errors.hpp"
#include "hdpo/numerics.hpp"

namespace hdpo::theory {

RewardFn task_reward(const tasks::TaskInstance& task) {
  return [task](const std::vector<std::int32_t>& completion) {
    return tasks::verify(task, completion);
  };
}

namespace {

struct ScoredSpace {
  policy::EnumeratedSpace space;
  std::vector<int> rewards;
  double p = 0.0;
  std::size_t accepted = 0;
};

ScoredSpace score_space(const policy::PolicySnapshot& ref, const RewardFn& reward,
                        const policy::Context& prompt, int max_len) {
  ScoredSpace out;
  out.space = policy::enumerate_completions(ref, prompt, max_len);
  out.rewards.reserve(out.space.completions.size());
  for (std::size_t i = 0; i < out.space.completions.size(); ++i) {
    const int r = reward(out.space.completions[i]) ? 1 : 0;
    out.rewards.push_back(r);
    if (r == 1) {
      out.p += out.space.probs[i];
      out.accepted += 1;
    }
  }
  return out;
}

double linf_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

}  // namespace

GibbsPolicy build_gibbs(const policy::PolicySnapshot& ref, const RewardFn& reward,
                        const policy::Context& prompt, int max_len, double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("build_gibbs: beta must be positive");
  ScoredSpace scored = score_space(ref, reward, prompt, max_len);
  if (scored.accepted == 0)
    throw DegenerateConditional("build_gibbs: no completion earns reward 1");
  GibbsPolicy out;
  out.beta = beta;
  out.p = scored.p;
  const double boost = std::exp(1.0 / beta);
  out.z = 0.0;
  out.probs.resize(scored.space.probs.size());
  for (std::size_t i = 0; i < scored.space.probs.size(); ++i)
    out.z += scored.space.probs[i] * (scored.rewards[i] == 1 ? boost : 1.0);
  for (std::size_t i = 0; i < scored.space.probs.size(); ++i)
    out.probs[i] =
        scored.space.probs[i] * (scored.rewards[i] == 1 ? boost : 1.0) / out.z;
  out.space = std::move(scored.space);
  out.rewards = std::move(scored.rewards);
  return out;
}

ConditionalPolicy conditional_policy(const policy::PolicySnapshot& ref,
                                     const RewardFn& reward,
                                     const policy::Context& prompt, int max_len) {
  ScoredSpace scored = score_space(ref, reward, prompt, max_len);
  if (scored.accepted == 0)
    throw DegenerateConditional("conditional_policy: no completion earns reward 1");
  ConditionalPolicy out;
  out.p = scored.p;
  out.probs.resize(scored.space.probs.size(), 0.0);
  for (std::size_t i = 0; i < scored.space.probs.size(); ++i)
    if (scored.rewards[i] == 1) out.probs[i] = scored.space.probs[i] / scored.p;
  out.space = std::move(scored.space);
  out.rewards = std::move(scored.rewards);
  return out;
}

double tv_distance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("tv_distance: size mismatch");
  double l1 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) l1 += std::fabs(a[i] - b[i]);
  return 0.5 * l1;
}

std::vector<double> hard_threshold_limit_check(const policy::PolicySnapshot& ref,
                                               const RewardFn& reward,
                                               const policy::Context& prompt,
                                               int max_len,
                                               const std::vector<double>& betas) {
  const ConditionalPolicy cond = conditional_policy(ref, reward, prompt, max_len);
  std::vector<double> tvs;
  tvs.reserve(betas.size());
  for (double beta : betas) {
    const GibbsPolicy gibbs = build_gibbs(ref, reward, prompt, max_len, beta);
    tvs.push_back(tv_distance(gibbs.probs, cond.probs));
  }
  return tvs;
}

RejectionCheck rejection_sampling_check(const policy::PolicySnapshot& ref,
                                        const RewardFn& reward,
                                        const policy::Context& prompt, int max_len,
                                        std::size_t n_samples, rng::Stream& rng) {
  const ConditionalPolicy cond = conditional_policy(ref, reward, prompt, max_len);
  std::map<std::vector<std::int32_t>, std::size_t> index;
  for (std::size_t i = 0; i < cond.space.completions.size(); ++i)
    index[cond.space.completions[i]] = i;

  RejectionCheck out;
  out.samples = n_samples;
  std::vector<std::size_t> counts(cond.space.completions.size(), 0);
  for (std::size_t s = 0; s < n_samples; ++s) {
    const policy::Trajectory traj =
        policy::sample_rollout(ref, prompt, max_len, 1.0, rng);
    if (!reward(traj.generated)) continue;
    out.accepted += 1;
    counts[index.at(traj.generated)] += 1;
  }
  out.acceptance_rate =
      static_cast<double>(out.accepted) / static_cast<double>(n_samples);
  if (out.accepted == 0) return out;  // inconclusive, tv stays at its ceiling
  out.conclusive = true;
  std::vector<double> empirical(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i)
    empirical[i] =
        static_cast<double>(counts[i]) / static_cast<double>(out.accepted);
  out.tv = tv_distance(empirical, cond.probs);
  return out;
}

GapReport measure_realizability_gap(const policy::PolicySnapshot& theta,
                                    const policy::PolicySnapshot* phi,
                                    const tasks::TaskInstance& task,
                                    const policy::Trajectory& teacher_traj) {
  (void)task;  // the trajectory's start context already carries the block
  GapReport report;
  report.privileged_block_tokens =
      static_cast<int>(teacher_traj.start.privileged.size());
  const policy::PolicySnapshot& other = phi != nullptr ? *phi : theta;
  policy::Context teacher_ctx = teacher_traj.start;
  for (std::int32_t tok : teacher_traj.generated) {
    const policy::Context student_ctx = teacher_ctx.student_view();
    const std::vector<double> z_t = policy::logits(theta, teacher_ctx);
    const std::vector<double> z_s = policy::logits(theta, student_ctx);
    const std::vector<double> z_phi = policy::logits(other, teacher_ctx);
    GapRecord rec;
    rec.same_model_gap = linf_diff(z_t, z_s);
    rec.same_model_kl =
        numerics::kl_divergence(numerics::softmax(z_t), numerics::softmax(z_s));
    rec.cross_mismatch = linf_diff(z_phi, z_t);
    rec.cross_total = linf_diff(z_phi, z_s);
    rec.triangle_holds = rec.cross_total <= rec.cross_mismatch + rec.same_model_gap;
    rec.kl_bound_holds =
        rec.same_model_kl <= rec.same_model_gap * rec.same_model_gap / 2.0 + 1e-12;
    report.all_triangle_hold = report.all_triangle_hold && rec.triangle_holds;
    report.all_kl_bound_hold = report.all_kl_bound_hold && rec.kl_bound_holds;
    report.positions.push_back(rec);
    teacher_ctx.generated.push_back(tok);
  }
  return report;
}

KlBoundAuditResult kl_bound_audit(std::size_t trials, rng::Stream& rng) {
  if (trials < 1) throw std::invalid_argument("kl_bound_audit: trials < 1");
  const int sizes[] = {2, 8, 64};
  KlBoundAuditResult out;
  out.trials = trials;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const int n = sizes[trial % 3];
    std::vector<double> z(static_cast<std::size_t>(n));
    std::vector<double> d(static_cast<std::size_t>(n));
    for (double& x : z) x = rng.next_uniform(-5.0, 5.0);
    for (double& x : d) x = rng.next_uniform(-5.0, 5.0);
    const numerics::KlBoundResult r = numerics::kl_perturbation_bound(z, d);
    if (!r.holds) out.violations += 1;
    if (r.bound > 0.0) out.max_ratio = std::max(out.max_ratio, r.kl / r.bound);
  }
  return out;
}

namespace {

// |V|=2 fixed-length-2 uniform space: four completions of mass 1/4 each
struct UniformFour {
  policy::PolicySnapshot ref = policy::make_tabular(2, 4, -1);
  policy::Context prompt = policy::make_prompt({0});
  int max_len = 2;
  RewardFn one_correct = [](const std::vector<std::int32_t>& c) {
    return c == std::vector<std::int32_t>{0, 1} ? 1 : 0;
  };
};

CheckResult check_gibbs_example() {
  UniformFour u;
  CheckResult res{"gibbs-example", false, {}};
  const GibbsPolicy g = build_gibbs(u.ref, u.one_correct, u.prompt, u.max_len, 1.0);
  const double e = std::exp(1.0);
  double sum = 0.0;
  double correct_mass = 0.0;
  for (std::size_t i = 0; i < g.probs.size(); ++i) {
    sum += g.probs[i];
    if (g.rewards[i] == 1) correct_mass += g.probs[i];
  }
  res.quantities["p"] = g.p;
  res.quantities["z"] = g.z;
  res.quantities["z_closed_form"] = 0.75 + 0.25 * e;
  res.quantities["pi_star_correct"] = correct_mass;
  res.quantities["prob_sum"] = sum;
  res.pass = std::fabs(g.p - 0.25) < 1e-12 &&
             std::fabs(g.z - (0.75 + 0.25 * e)) < 1e-9 &&
             std::fabs(correct_mass - e / (e + 3.0)) < 1e-9 &&
             std::fabs(sum - 1.0) < 1e-9;
  return res;
}

CheckResult check_gibbs_constant_reward() {
  UniformFour u;
  CheckResult res{"gibbs-constant-reward", false, {}};
  const RewardFn all_one = [](const std::vector<std::int32_t>&) { return 1; };
  const GibbsPolicy g = build_gibbs(u.ref, all_one, u.prompt, u.max_len, 1.0);
  double max_dev = 0.0;
  for (std::size_t i = 0; i < g.probs.size(); ++i)
    max_dev = std::max(max_dev, std::fabs(g.probs[i] - g.space.probs[i]));
  res.quantities["p"] = g.p;
  res.quantities["max_deviation_from_ref"] = max_dev;
  res.pass = std::fabs(g.p - 1.0) < 1e-12 && max_dev < 1e-12;
  return res;
}

CheckResult check_gibbs_weight_ratio() {
  UniformFour u;
  CheckResult res{"gibbs-weight-ratio", false, {}};
  const double beta = 0.7;
  const GibbsPolicy g = build_gibbs(u.ref, u.one_correct, u.prompt, u.max_len, beta);
  // equal reference masses: the correct/incorrect probability ratio is the
  // Gibbs boost itself
  double correct = 0.0;
  double incorrect = 0.0;
  for (std::size_t i = 0; i < g.probs.size(); ++i) {
    if (g.rewards[i] == 1)
      correct = g.probs[i];
    else
      incorrect = g.probs[i];
  }
  const double ratio = correct / incorrect;
  res.quantities["ratio"] = ratio;
  res.quantities["exp_inv_beta"] = std::exp(1.0 / beta);
  res.pass = std::fabs(ratio - std::exp(1.0 / beta)) < 1e-9;
  return res;
}

CheckResult check_gibbs_normalization(std::uint64_t seed) {
  CheckResult res{"gibbs-normalization", true, {}};
  rng::Stream rs(rng::derive(seed, "gibbs-norm"));
  double worst_sum = 0.0;
  double worst_z = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    policy::PolicySnapshot ref = policy::make_tabular(3, 4, -1);
    // nonuniform rows over a fixed-length space
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        ref.table[{a, b}] = {rs.next_uniform(-2.0, 2.0), rs.next_uniform(-2.0, 2.0),
                             rs.next_uniform(-2.0, 2.0)};
    ref.table[{0}] = {rs.next_uniform(-2.0, 2.0), rs.next_uniform(-2.0, 2.0),
                      rs.next_uniform(-2.0, 2.0)};
    const RewardFn reward = [](const std::vector<std::int32_t>& c) {
      return c[0] == 0 ? 1 : 0;
    };
    const double beta = rs.next_uniform(0.2, 2.0);
    const GibbsPolicy g =
        build_gibbs(ref, reward, policy::make_prompt({0}), 3, beta);
    double sum = 0.0;
    for (double x : g.probs) sum += x;
    const double closed = (1.0 - g.p) + g.p * std::exp(1.0 / beta);
    worst_sum = std::max(worst_sum, std::fabs(sum - 1.0));
    worst_z = std::max(worst_z, std::fabs(g.z - closed));
  }
  res.quantities["worst_prob_sum_error"] = worst_sum;
  res.quantities["worst_partition_error"] = worst_z;
  res.pass = worst_sum < 1e-9 && worst_z < 1e-9;
  return res;
}

CheckResult check_hard_threshold_limit() {
  UniformFour u;
  CheckResult res{"hard-threshold-limit", false, {}};
  const std::vector<double> betas{1.0, 0.1, 0.01};
  const std::vector<double> tvs =
      hard_threshold_limit_check(u.ref, u.one_correct, u.prompt, u.max_len, betas);
  bool monotone = true;
  for (std::size_t i = 1; i < tvs.size(); ++i)
    monotone = monotone && tvs[i] <= tvs[i - 1] + 1e-15;
  // closed form TV = (1-p)/Z on a binary-reward space
  double worst_closed = 0.0;
  for (std::size_t i = 0; i < betas.size(); ++i) {
    const double zb = 0.75 + 0.25 * std::exp(1.0 / betas[i]);
    worst_closed = std::max(worst_closed, std::fabs(tvs[i] - 0.75 / zb));
  }
  res.quantities["tv_beta_1"] = tvs[0];
  res.quantities["tv_beta_0.1"] = tvs[1];
  res.quantities["tv_beta_0.01"] = tvs[2];
  res.quantities["worst_closed_form_error"] = worst_closed;
  res.pass = monotone && tvs.back() < 1e-9 && worst_closed < 1e-12;
  return res;
}

CheckResult check_rejection_sampling(std::uint64_t seed) {
  CheckResult res{"rejection-sampling", false, {}};
  rng::Stream init(rng::derive(seed, "rej-init"));
  policy::PolicySnapshot ref = policy::make_tabular(3, 4, -1);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      ref.table[{a, b}] = {init.next_uniform(-1.0, 1.0), init.next_uniform(-1.0, 1.0),
                           init.next_uniform(-1.0, 1.0)};
  ref.table[{0}] = {init.next_uniform(-1.0, 1.0), init.next_uniform(-1.0, 1.0),
                    init.next_uniform(-1.0, 1.0)};
  const RewardFn reward = [](const std::vector<std::int32_t>& c) {
    return c[0] == 0 ? 1 : 0;
  };
  const policy::Context prompt = policy::make_prompt({0});
  const ConditionalPolicy cond = conditional_policy(ref, reward, prompt, 3);
  rng::Stream rs(rng::derive(seed, "rej-sample"));
  const std::size_t n = 100000;
  const RejectionCheck check = rejection_sampling_check(ref, reward, prompt, 3, n, rs);
  const double sigma = std::sqrt(cond.p * (1.0 - cond.p) / static_cast<double>(n));
  res.quantities["p"] = cond.p;
  res.quantities["acceptance_rate"] = check.acceptance_rate;
  res.quantities["acceptance_sigma"] = sigma;
  res.quantities["tv"] = check.tv;
  res.pass = check.conclusive && check.tv < 0.02 &&
             std::fabs(check.acceptance_rate - cond.p) <= 3.0 * sigma;
  return res;
}

CheckResult check_degenerate_cliff() {
  UniformFour u;
  CheckResult res{"degenerate-cliff", false, {}};
  const RewardFn none = [](const std::vector<std::int32_t>&) { return 0; };
  try {
    (void)build_gibbs(u.ref, none, u.prompt, u.max_len, 1.0);
  } catch (const DegenerateConditional&) {
    res.pass = true;
  }
  res.quantities["raised"] = res.pass ? 1.0 : 0.0;
  return res;
}

CheckResult check_realizability_gap(std::uint64_t seed, bool cross_model) {
  CheckResult res{cross_model ? "realizability-gap-cross-model"
                              : "realizability-gap-same-model",
                  false,
                  {}};
  policy::PolicyConfig cfg;
  cfg.vocab_size = tasks::kMinVocabSize;
  cfg.eos_id = tasks::kEos;
  rng::Stream init_theta(rng::derive(seed, "gap-theta"));
  rng::Stream init_phi(rng::derive(seed, "gap-phi"));
  const policy::PolicySnapshot theta = policy::make_tiny_net(cfg, init_theta);
  const policy::PolicySnapshot phi = policy::make_tiny_net(cfg, init_phi);

  rng::Stream task_rng(rng::derive(seed, "gap-task"));
  rng::Stream roll_rng(rng::derive(seed, "gap-roll"));
  bool all_triangle = true;
  bool all_kl_bound = true;
  bool mismatch_zero = true;
  double max_gap = 0.0;
  double max_kl = 0.0;
  int positions = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const tasks::TaskInstance task =
        tasks::generate_task(tasks::TaskFamily::copy_reverse, 3, task_rng);
    const policy::Trajectory traj = policy::sample_rollout(
        theta, tasks::privileged_context(task), tasks::rollout_budget(task), 1.0,
        roll_rng);
    const GapReport report = measure_realizability_gap(
        theta, cross_model ? &phi : nullptr, task, traj);
    all_triangle = all_triangle && report.all_triangle_hold;
    all_kl_bound = all_kl_bound && report.all_kl_bound_hold;
    for (const GapRecord& rec : report.positions) {
      max_gap = std::max(max_gap, rec.same_model_gap);
      max_kl = std::max(max_kl, rec.same_model_kl);
      if (rec.cross_mismatch != 0.0) mismatch_zero = false;
      ++positions;
    }
  }
  res.quantities["positions"] = positions;
  res.quantities["max_same_model_gap"] = max_gap;
  res.quantities["max_same_model_kl"] = max_kl;
  res.quantities["mismatch_identically_zero"] = mismatch_zero ? 1.0 : 0.0;
  res.pass = all_triangle && all_kl_bound && positions > 0 &&
             (cross_model || mismatch_zero);
  return res;
}

CheckResult check_kl_bound_audit(std::uint64_t seed) {
  CheckResult res{"kl-bound-audit", false, {}};
  rng::Stream rs(rng::derive(seed, "kl-bound-audit"));
  const KlBoundAuditResult audit = kl_bound_audit(10000, rs);
  res.quantities["trials"] = static_cast<double>(audit.trials);
  res.quantities["violations"] = static_cast<double>(audit.violations);
  res.quantities["max_kl_over_bound"] = audit.max_ratio;
  res.pass = audit.violations == 0;
  return res;
}

}  // namespace

std::vector<CheckResult> standard_checks(std::uint64_t seed) {
  std::vector<CheckResult> checks;
  checks.push_back(check_gibbs_example());
  checks.push_back(check_gibbs_constant_reward());
  checks.push_back(check_gibbs_weight_ratio());
  checks.push_back(check_gibbs_normalization(seed));
  checks.push_back(check_hard_threshold_limit());
  checks.push_back(check_rejection_sampling(seed));
  checks.push_back(check_degenerate_cliff());
  checks.push_back(check_realizability_gap(seed, false));
  checks.push_back(check_realizability_gap(seed, true));
  checks.push_back(check_kl_bound_audit(seed));
  return checks;
}

}  // namespace hdpo::theory
