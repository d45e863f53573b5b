#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "hdpo/errors.hpp"
#include "hdpo/numerics.hpp"
#include "hdpo/policy.hpp"
#include "hdpo/rng.hpp"
#include "hdpo/tasks.hpp"
#include "hdpo/theory.hpp"
#include "hdpo/vocab.hpp"

using namespace hdpo;
using policy::PolicySnapshot;
using theory::ConditionalPolicy;
using theory::GibbsPolicy;
using theory::RewardFn;

namespace {

// |V|=2 fixed-length-2 uniform space: four completions of mass 1/4
struct UniformFour {
  PolicySnapshot ref = policy::make_tabular(2, 4, -1);
  policy::Context prompt = policy::make_prompt({0});
  int max_len = 2;
  RewardFn one_correct = [](const std::vector<std::int32_t>& c) {
    return c == std::vector<std::int32_t>{0, 1} ? 1 : 0;
  };
};

std::size_t find_completion(const policy::EnumeratedSpace& space,
                            const std::vector<std::int32_t>& c) {
  for (std::size_t i = 0; i < space.completions.size(); ++i)
    if (space.completions[i] == c) return i;
  REQUIRE(false);
  return 0;
}

}  // namespace

TEST_CASE("uniform reference with one correct completion: exact reweighting") {
  UniformFour u;
  const GibbsPolicy g = theory::build_gibbs(u.ref, u.one_correct, u.prompt, u.max_len, 1.0);
  const double e = std::exp(1.0);
  CHECK(std::fabs(g.p - 0.25) < 1e-15);
  CHECK(std::fabs(g.z - (0.75 + 0.25 * e)) < 1e-12);
  double sum = 0.0;
  for (double x : g.probs) sum += x;
  CHECK(std::fabs(sum - 1.0) < 1e-12);
  const std::size_t hit = find_completion(g.space, {0, 1});
  CHECK(std::fabs(g.probs[hit] - e / (e + 3.0)) < 1e-12);
  // incorrect completions keep equal shares of the rest
  for (std::size_t i = 0; i < g.probs.size(); ++i)
    if (i != hit) CHECK(std::fabs(g.probs[i] - 0.25 / g.z) < 1e-12);

  CHECK_THROWS_AS(
      (void)theory::build_gibbs(u.ref, u.one_correct, u.prompt, u.max_len, 0.0),
      std::invalid_argument);
  CHECK_THROWS_AS(
      (void)theory::build_gibbs(u.ref, u.one_correct, u.prompt, u.max_len, -1.0),
      std::invalid_argument);
}

TEST_CASE("conditional puts masses 0.1 and 0.3 at exactly 0.25 and 0.75") {
  PolicySnapshot ref = policy::make_tabular(2, 4, -1);
  ref.table[{0}] = {std::log(0.4), std::log(0.6)};
  ref.table[{0, 0}] = {std::log(0.25), std::log(0.75)};
  ref.table[{0, 1}] = {std::log(0.5), std::log(0.5)};
  const RewardFn first_zero = [](const std::vector<std::int32_t>& c) {
    return c[0] == 0 ? 1 : 0;
  };
  const ConditionalPolicy cond =
      theory::conditional_policy(ref, first_zero, policy::make_prompt({0}), 2);
  CHECK(std::fabs(cond.p - 0.4) < 1e-12);
  CHECK(std::fabs(cond.probs[find_completion(cond.space, {0, 0})] - 0.25) < 1e-12);
  CHECK(std::fabs(cond.probs[find_completion(cond.space, {0, 1})] - 0.75) < 1e-12);
  CHECK(cond.probs[find_completion(cond.space, {1, 0})] == 0.0);
  CHECK(cond.probs[find_completion(cond.space, {1, 1})] == 0.0);
}

TEST_CASE("constant reward one collapses both policies onto the reference") {
  UniformFour u;
  const RewardFn all_one = [](const std::vector<std::int32_t>&) { return 1; };
  const GibbsPolicy g = theory::build_gibbs(u.ref, all_one, u.prompt, u.max_len, 0.5);
  const ConditionalPolicy cond =
      theory::conditional_policy(u.ref, all_one, u.prompt, u.max_len);
  CHECK(g.p == 1.0);
  CHECK(cond.p == 1.0);
  for (std::size_t i = 0; i < g.probs.size(); ++i) {
    CHECK(std::fabs(g.probs[i] - g.space.probs[i]) < 1e-15);
    CHECK(std::fabs(cond.probs[i] - cond.space.probs[i]) < 1e-15);
  }
  CHECK(theory::tv_distance(g.probs, cond.probs) < 1e-15);
}

TEST_CASE("a near-deterministic correct reference is already its own conditional") {
  PolicySnapshot ref = policy::make_tabular(2, 4, -1);
  ref.table[{0}] = {40.0, 0.0};
  ref.table[{0, 0}] = {0.0, 40.0};  // ref concentrates on completion {0, 1}
  UniformFour shape;
  for (double beta : {2.0, 1.0, 0.25}) {
    const GibbsPolicy g = theory::build_gibbs(ref, shape.one_correct,
                                              policy::make_prompt({0}), 2, beta);
    const ConditionalPolicy cond = theory::conditional_policy(
        ref, shape.one_correct, policy::make_prompt({0}), 2);
    CHECK(g.p > 1.0 - 1e-12);
    CHECK(theory::tv_distance(g.probs, cond.probs) < 1e-12);
    // exact closed form even here: TV = (1-p)/Z
    const double z = (1.0 - g.p) + g.p * std::exp(1.0 / beta);
    CHECK(std::fabs(theory::tv_distance(g.probs, cond.probs) - (1.0 - g.p) / z) <
          1e-15);
  }
}

TEST_CASE("reward never one raises the degenerate-conditional error") {
  UniformFour u;
  const RewardFn none = [](const std::vector<std::int32_t>&) { return 0; };
  CHECK_THROWS_AS((void)theory::build_gibbs(u.ref, none, u.prompt, u.max_len, 1.0),
                  DegenerateConditional);
  CHECK_THROWS_AS((void)theory::conditional_policy(u.ref, none, u.prompt, u.max_len),
                  DegenerateConditional);
}

TEST_CASE("tv distance: identity, symmetry, textbook value, size check") {
  const std::vector<double> a{0.2, 0.8};
  const std::vector<double> b{0.4, 0.6};
  CHECK(theory::tv_distance(a, a) == 0.0);
  CHECK(std::fabs(theory::tv_distance(a, b) - 0.2) < 1e-15);
  CHECK(theory::tv_distance(a, b) == theory::tv_distance(b, a));
  CHECK_THROWS_AS((void)theory::tv_distance(a, {0.1, 0.2, 0.7}),
                  std::invalid_argument);
}

TEST_CASE("lowering the temperature drives the Gibbs policy onto the conditional") {
  UniformFour u;
  const std::vector<double> betas{2.0, 1.0, 0.5, 0.1, 0.01};
  const std::vector<double> tvs = theory::hard_threshold_limit_check(
      u.ref, u.one_correct, u.prompt, u.max_len, betas);
  REQUIRE(tvs.size() == betas.size());
  for (std::size_t i = 1; i < tvs.size(); ++i) CHECK(tvs[i] <= tvs[i - 1]);
  CHECK(tvs.back() < 1e-9);
  // binary rewards admit the closed form TV = (1-p)/Z
  for (std::size_t i = 0; i < betas.size(); ++i) {
    const double z = 0.75 + 0.25 * std::exp(1.0 / betas[i]);
    CHECK(std::fabs(tvs[i] - 0.75 / z) < 1e-12);
  }
}

TEST_CASE("accepted samples match the conditional; acceptance matches p") {
  UniformFour u;
  rng::Stream rs(rng::derive(17, "rejection"));
  const std::size_t n = 100000;
  const theory::RejectionCheck check =
      theory::rejection_sampling_check(u.ref, u.one_correct, u.prompt, u.max_len, n, rs);
  CHECK(check.conclusive);
  CHECK(check.samples == n);
  CHECK(check.tv < 0.02);
  const double sigma = std::sqrt(0.25 * 0.75 / static_cast<double>(n));
  CHECK(std::fabs(check.acceptance_rate - 0.25) <= 3.0 * sigma);
}

TEST_CASE("a near-impossible reward leaves the rejection check inconclusive") {
  PolicySnapshot ref = policy::make_tabular(2, 4, -1);
  ref.table[{0}] = {-40.0, 0.0};  // first token is almost surely 1
  const RewardFn first_zero = [](const std::vector<std::int32_t>& c) {
    return c[0] == 0 ? 1 : 0;
  };
  rng::Stream rs(rng::derive(19, "rare"));
  const theory::RejectionCheck check = theory::rejection_sampling_check(
      ref, first_zero, policy::make_prompt({0}), 2, 200, rs);
  CHECK(!check.conclusive);
  CHECK(check.accepted == 0);
  CHECK(check.tv == 1.0);
}

TEST_CASE("gap records on a hand-set tabular pair") {
  PolicySnapshot theta = policy::make_tabular(tasks::kMinVocabSize, 32, tasks::kEos);
  PolicySnapshot phi = theta;
  tasks::TaskInstance task;
  task.family = tasks::TaskFamily::modular_chain;
  task.difficulty = 1;
  task.prompt_tokens = {3, tasks::kPlus, 4};
  task.ground_truth = {7, tasks::kAnswerMarker, 7};
  task.answer = {7};

  policy::Trajectory traj;
  traj.start = tasks::privileged_context(task);
  traj.generated = {7};

  std::vector<double> z_teacher(tasks::kMinVocabSize, 0.0);
  z_teacher[7] = 2.0;
  std::vector<double> z_student(tasks::kMinVocabSize, 0.0);
  z_student[7] = 0.5;
  z_student[1] = -0.25;
  std::vector<double> z_phi(tasks::kMinVocabSize, 0.0);
  z_phi[7] = 2.5;
  theta.table[policy::table_key(theta, traj.start)] = z_teacher;
  theta.table[policy::table_key(theta, traj.start.student_view())] = z_student;
  phi.table[policy::table_key(phi, traj.start)] = z_phi;
  phi.table[policy::table_key(phi, traj.start.student_view())] = z_student;

  const theory::GapReport same = theory::measure_realizability_gap(theta, nullptr, task, traj);
  REQUIRE(same.positions.size() == 1);
  CHECK(same.privileged_block_tokens ==
        static_cast<int>(task.ground_truth.size()) + 2);
  CHECK(std::fabs(same.positions[0].same_model_gap - 1.5) < 1e-15);
  CHECK(same.positions[0].cross_mismatch == 0.0);
  CHECK(std::fabs(same.positions[0].cross_total - 1.5) < 1e-15);
  CHECK(same.positions[0].triangle_holds);
  CHECK(same.positions[0].kl_bound_holds);
  const double kl = numerics::kl_divergence(numerics::softmax(z_teacher),
                                            numerics::softmax(z_student));
  CHECK(std::fabs(same.positions[0].same_model_kl - kl) < 1e-15);

  // passing theta as its own scorer matches the nullptr behavior exactly
  const theory::GapReport self = theory::measure_realizability_gap(theta, &theta, task, traj);
  CHECK(self.positions[0].cross_mismatch == 0.0);
  CHECK(self.positions[0].cross_total == same.positions[0].cross_total);

  const theory::GapReport cross = theory::measure_realizability_gap(theta, &phi, task, traj);
  CHECK(std::fabs(cross.positions[0].cross_mismatch - 0.5) < 1e-15);
  CHECK(std::fabs(cross.positions[0].cross_total - 2.0) < 1e-15);
  CHECK(cross.positions[0].triangle_holds);
}

TEST_CASE("an empty privileged block yields zero gap everywhere") {
  policy::PolicyConfig cfg;
  cfg.vocab_size = tasks::kMinVocabSize;
  cfg.eos_id = tasks::kEos;
  rng::Stream init(rng::derive(23, "net"));
  const PolicySnapshot theta = policy::make_tiny_net(cfg, init);

  rng::Stream task_rng(rng::derive(23, "task"));
  const tasks::TaskInstance task =
      tasks::generate_task(tasks::TaskFamily::modular_chain, 2, task_rng);
  rng::Stream roll(rng::derive(23, "roll"));
  policy::Trajectory traj = policy::sample_rollout(
      theta, tasks::prompt_context(task), tasks::rollout_budget(task), 1.0, roll);
  REQUIRE(!traj.generated.empty());

  const theory::GapReport report =
      theory::measure_realizability_gap(theta, nullptr, task, traj);
  CHECK(report.privileged_block_tokens == 0);
  for (const theory::GapRecord& rec : report.positions) {
    CHECK(rec.same_model_gap == 0.0);
    CHECK(rec.same_model_kl == 0.0);
    CHECK(rec.cross_mismatch == 0.0);
    CHECK(rec.cross_total == 0.0);
    CHECK(rec.triangle_holds);
    CHECK(rec.kl_bound_holds);
  }
}

TEST_CASE("the softmax-smoothness audit never sees a violation") {
  rng::Stream rs(rng::derive(29, "audit"));
  const theory::KlBoundAuditResult audit = theory::kl_bound_audit(3000, rs);
  CHECK(audit.trials == 3000);
  CHECK(audit.violations == 0);
  CHECK(audit.max_ratio > 0.0);
  CHECK(audit.max_ratio <= 1.0);
  rng::Stream rs2(rng::derive(29, "audit2"));
  CHECK_THROWS_AS((void)theory::kl_bound_audit(0, rs2), std::invalid_argument);
}

TEST_CASE("task_reward is the verifier behind a function") {
  tasks::TaskInstance task;
  task.prompt_tokens = {3, tasks::kPlus, 4};
  task.ground_truth = {7, tasks::kAnswerMarker, 7};
  task.answer = {7};
  const RewardFn reward = theory::task_reward(task);
  CHECK(reward({7}) == 1);
  CHECK(reward({1}) == 0);
  CHECK(reward({tasks::kAnswerMarker, 7, tasks::kEos, 3}) == 1);
}

TEST_CASE("the full check battery passes under several seeds") {
  const std::set<std::string> expected{
      "gibbs-example",          "gibbs-constant-reward",
      "gibbs-weight-ratio",     "gibbs-normalization",
      "hard-threshold-limit",   "rejection-sampling",
      "degenerate-cliff",       "realizability-gap-same-model",
      "realizability-gap-cross-model", "kl-bound-audit"};
  for (std::uint64_t seed : {7ull, 20260814ull}) {
    const std::vector<theory::CheckResult> checks = theory::standard_checks(seed);
    REQUIRE(checks.size() == expected.size());
    std::set<std::string> seen;
    for (const theory::CheckResult& check : checks) {
      INFO(check.name);
      CHECK(check.pass);
      seen.insert(check.name);
    }
    CHECK(seen == expected);
  }
}
