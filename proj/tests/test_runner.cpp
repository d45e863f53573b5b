#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hdpo/checkpoint.hpp"
#include "hdpo/config.hpp"
#include "hdpo/evaluate.hpp"
#include "hdpo/metrics.hpp"
#include "hdpo/policy.hpp"
#include "hdpo/rng.hpp"
#include "hdpo/tasks.hpp"
#include "hdpo/train.hpp"
#include "hdpo/vocab.hpp"

using namespace hdpo;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("hdpo_runner_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

config::ExperimentConfig small_config(const std::string& run_name) {
  config::ExperimentConfig cfg;
  cfg.seed = 11;
  cfg.policy.embed_dim = 4;
  cfg.policy.hidden_dim = 8;
  cfg.tasks.difficulties = {1, 2};
  cfg.tasks.difficulty_weights = {1.0, 1.0};
  cfg.tasks.prompts_per_step = 3;
  cfg.tasks.validation_prompts = 5;
  cfg.grpo.group_size = 4;
  cfg.optimizer.warmup_steps = 4;
  cfg.schedule.total_steps = 6;
  cfg.schedule.eval_period = 3;
  cfg.schedule.eval_samples_per_prompt = 8;
  cfg.schedule.eval_k_list = {1, 4, 8};
  cfg.out_dir = fresh_dir(run_name).string();
  return cfg;
}

// always emits 7, then stops: solves any task whose answer is [7]
policy::PolicySnapshot emit_seven_policy() {
  policy::PolicySnapshot pol =
      policy::make_tabular(tasks::kMinVocabSize, 1, tasks::kEos);
  for (std::int32_t t = 0; t < tasks::kMinVocabSize; ++t) {
    std::vector<double> row(tasks::kMinVocabSize, 0.0);
    row[t == 7 ? static_cast<std::size_t>(tasks::kEos) : 7] = 60.0;
    pol.table[{t}] = row;
  }
  return pol;
}

tasks::TaskInstance chain_task(std::int32_t v0, std::int32_t k,
                               std::int32_t answer) {
  tasks::TaskInstance task;
  task.family = tasks::TaskFamily::modular_chain;
  task.difficulty = 1;
  task.prompt_tokens = {v0, tasks::kPlus, k};
  task.ground_truth = {answer, tasks::kAnswerMarker, answer};
  task.answer = {answer};
  return task;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("warmup rises linearly from a tenth to one and stays there") {
  CHECK(train::warmup_factor(0, 50) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(train::warmup_factor(25, 50) == doctest::Approx(0.55).epsilon(1e-12));
  CHECK(train::warmup_factor(50, 50) == 1.0);
  CHECK(train::warmup_factor(500, 50) == 1.0);
  CHECK(train::warmup_factor(1, 0) == 1.0);
  for (int step = 1; step <= 60; ++step)
    CHECK(train::warmup_factor(step, 50) >= train::warmup_factor(step - 1, 50));
}

TEST_CASE("pass@k agrees with subset enumeration for every n <= 10") {
  for (int n = 1; n <= 10; ++n) {
    for (int c = 0; c <= n; ++c) {
      for (int k = 1; k <= n; ++k) {
        // oracle: fraction of k-subsets of {0..n-1} that touch {0..c-1}
        long total = 0;
        long hit = 0;
        for (unsigned mask = 0; mask < (1u << n); ++mask) {
          if (__builtin_popcount(mask) != k) continue;
          ++total;
          if (mask & ((1u << c) - 1)) ++hit;
        }
        const double oracle = static_cast<double>(hit) / static_cast<double>(total);
        CHECK(std::fabs(evaluate::pass_at_k(n, c, k) - oracle) <= 1e-12);
      }
    }
  }
  CHECK(evaluate::pass_at_k(8, 8, 4) == 1.0);
  CHECK(evaluate::pass_at_k(8, 0, 8) == 0.0);
  CHECK(std::fabs(evaluate::pass_at_k(8, 2, 4) - 11.0 / 14.0) < 1e-15);
  CHECK_THROWS_AS((void)evaluate::pass_at_k(8, 2, 9), std::invalid_argument);
  CHECK_THROWS_AS((void)evaluate::pass_at_k(8, 2, 0), std::invalid_argument);
  CHECK_THROWS_AS((void)evaluate::pass_at_k(8, 9, 4), std::invalid_argument);
  CHECK_THROWS_AS((void)evaluate::pass_at_k(8, -1, 4), std::invalid_argument);
}

TEST_CASE("config serialization round-trips and rejects unknown keys") {
  config::ExperimentConfig cfg;
  cfg.seed = 99;
  cfg.hdpo.lambda = 0.05;
  cfg.tasks.families = {"copy-reverse"};
  cfg.tasks.family_weights = {1.0};
  const std::string text = config::to_json_text(cfg);
  const config::ExperimentConfig back = config::from_json_text(text);
  CHECK(config::to_json_text(back) == text);
  CHECK(config::config_hash(back) == config::config_hash(cfg));

  CHECK_THROWS_AS((void)config::from_json_text("{\"seed\": 1}"),
                  std::invalid_argument);
  std::string with_typo = text;
  with_typo.insert(1, "\"grop\": {},");
  CHECK_THROWS_AS((void)config::from_json_text(with_typo), std::invalid_argument);
  CHECK_THROWS_AS((void)config::from_json_text("not json"), std::invalid_argument);
}

TEST_CASE("dotted overrides reach nested fields and validate types") {
  config::ExperimentConfig cfg;
  config::apply_override(cfg, "grpo.group_size=16");
  CHECK(cfg.grpo.group_size == 16);
  config::apply_override(cfg, "hdpo.lambda=0.05");
  CHECK(cfg.hdpo.lambda == 0.05);
  config::apply_override(cfg, "policy.backend=tabular");
  CHECK(cfg.policy.backend == "tabular");
  config::apply_override(cfg, "schedule.eval_k_list=[1,2]");
  CHECK(cfg.schedule.eval_k_list == std::vector<int>{1, 2});
  config::apply_override(cfg, "tasks.families=[\"copy-reverse\"]");
  CHECK(cfg.tasks.families == std::vector<std::string>{"copy-reverse"});
  config::apply_override(cfg, "out_dir=/tmp/somewhere");
  CHECK(cfg.out_dir == "/tmp/somewhere");
  CHECK_THROWS_AS(config::apply_override(cfg, "grpo.nope=1"), std::invalid_argument);
  CHECK_THROWS_AS(config::apply_override(cfg, "no_equals"), std::invalid_argument);
  CHECK_THROWS_AS(config::apply_override(cfg, "grpo.group_size=\"eight\""),
                  std::invalid_argument);
}

TEST_CASE("validation catches each contract violation") {
  const auto broken = [](auto mutate) {
    config::ExperimentConfig cfg;
    mutate(cfg);
    CHECK_THROWS_AS(config::validate(cfg), std::invalid_argument);
  };
  config::ExperimentConfig ok;
  config::validate(ok);  // the defaults are valid
  broken([](auto& c) { c.grpo.group_size = 1; });
  broken([](auto& c) { c.hdpo.lambda = -0.1; });
  broken([](auto& c) { c.schedule.eval_k_list = {32}; });
  broken([](auto& c) { c.schedule.eval_k_list.clear(); });
  broken([](auto& c) { c.tasks.families = {"unknown-family"}; c.tasks.family_weights = {1.0}; });
  broken([](auto& c) { c.tasks.family_weights = {1.0}; });
  broken([](auto& c) { c.grpo.epsilon = 1.0; });
  broken([](auto& c) { c.grpo.epsilon = 0.0; });
  broken([](auto& c) { c.policy.vocab_size = 10; });
  broken([](auto& c) { c.policy.backend = "transformer"; });
  broken([](auto& c) { c.tasks.difficulties = {0}; c.tasks.difficulty_weights = {1.0}; });
  broken([](auto& c) { c.optimizer.lr = 0.0; });
  broken([](auto& c) { c.schedule.total_steps = -1; });
  broken([](auto& c) { c.hdpo.teacher_mode = "oracle"; });
}

TEST_CASE("hashes cover the full config but resume ignores extent fields") {
  config::ExperimentConfig a;
  config::ExperimentConfig b = a;
  CHECK(config::config_hash(a) == config::config_hash(b));
  CHECK(config::resume_hash(a) == config::resume_hash(b));

  b.schedule.total_steps += 100;
  b.out_dir = "elsewhere";
  CHECK(config::config_hash(a) != config::config_hash(b));
  CHECK(config::resume_hash(a) == config::resume_hash(b));

  b = a;
  b.seed += 1;
  CHECK(config::resume_hash(a) != config::resume_hash(b));
  b = a;
  b.hdpo.lambda += 0.01;
  CHECK(config::resume_hash(a) != config::resume_hash(b));
}

TEST_CASE("metrics stream round-trips and reports malformed lines") {
  const fs::path dir = fresh_dir("metrics");
  const std::string path = (dir / "m.jsonl").string();

  std::vector<metrics::MetricsRecord> want;
  for (int i = 0; i < 4; ++i) {
    metrics::MetricsRecord rec;
    rec.step = i;
    rec.mean_reward = 0.125 * i + 1e-17;
    rec.loss_grpo = -0.25 * i;
    rec.grad_norm = std::sqrt(2.0) * i;
    rec.wall_ms = 3.25 * i;
    if (i % 2 == 0) {
      rec.eval_pass_at_k = {{"pass@1", 0.5 + 1e-16}, {"pass@8", 0.75}};
      rec.best_pass_at_k = rec.eval_pass_at_k;
    }
    metrics::append_metrics(path, rec);
    want.push_back(rec);
  }
  const std::vector<metrics::MetricsRecord> got = metrics::read_metrics(path);
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    CHECK(metrics::to_json_line(got[i]) == metrics::to_json_line(want[i]));
    CHECK(got[i].mean_reward == want[i].mean_reward);
    CHECK(got[i].grad_norm == want[i].grad_norm);
  }

  metrics::MetricsRecord a = want[0];
  metrics::MetricsRecord b = want[0];
  b.wall_ms += 1000.0;
  CHECK(metrics::deterministic_key(a) == metrics::deterministic_key(b));
  b.loss_grpo += 1e-15;
  CHECK(metrics::deterministic_key(a) != metrics::deterministic_key(b));

  const std::string empty_path = (dir / "empty.jsonl").string();
  std::ofstream(empty_path).close();
  CHECK(metrics::read_metrics(empty_path).empty());

  const std::string bad_path = (dir / "bad.jsonl").string();
  std::ofstream bad(bad_path);
  bad << metrics::to_json_line(want[0]) << "\n{broken\n";
  bad.close();
  try {
    (void)metrics::read_metrics(bad_path);
    CHECK(false);
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }
}

TEST_CASE("checkpoints restore every parameter bit for bit") {
  const fs::path dir = fresh_dir("checkpoint");
  policy::PolicyConfig pcfg;
  pcfg.vocab_size = tasks::kMinVocabSize;
  pcfg.embed_dim = 4;
  pcfg.hidden_dim = 8;
  pcfg.eos_id = tasks::kEos;
  rng::Stream init(rng::derive(31, "ck"));
  checkpoint::Checkpoint ck;
  ck.step = 17;
  ck.config_hash = 0xdeadbeefcafe1234ull;
  ck.resume_hash = 42;
  ck.policy = policy::make_tiny_net(pcfg, init);
  ck.adam = policy::make_adam_state(ck.policy);
  // push the optimizer state off zero with one real update
  policy::LossSpec spec;
  spec.terms.push_back(policy::nll_term(policy::make_prompt({1, 2, 3}), 7, 1.0));
  const policy::LossValueAndGrad out = policy::grad_of_scalar_loss(ck.policy, spec);
  (void)policy::apply_update(ck.policy, out.grad, ck.adam, 0.05, 1.0);
  ck.has_frozen_teacher = true;
  ck.frozen_teacher = policy::make_tiny_net(pcfg, init);
  ck.rng_cursor = 17;
  ck.best_pass_at_k = {{"pass@1", 1.0 / 3.0}, {"pass@8", 0.7071067811865476}};

  const std::string path_a = (dir / "a.json").string();
  const std::string path_b = (dir / "b.json").string();
  checkpoint::save_checkpoint(path_a, ck);
  const checkpoint::Checkpoint back = checkpoint::load_checkpoint(path_a);
  checkpoint::save_checkpoint(path_b, back);
  CHECK(slurp(path_a) == slurp(path_b));

  CHECK(back.step == 17);
  CHECK(back.config_hash == ck.config_hash);
  REQUIRE(back.policy.net.w1.size() == ck.policy.net.w1.size());
  for (std::size_t i = 0; i < ck.policy.net.w1.size(); ++i)
    CHECK(back.policy.net.w1[i] == ck.policy.net.w1[i]);
  REQUIRE(back.adam.m.net.w1.size() == ck.adam.m.net.w1.size());
  for (std::size_t i = 0; i < ck.adam.m.net.w1.size(); ++i) {
    CHECK(back.adam.m.net.w1[i] == ck.adam.m.net.w1[i]);
    CHECK(back.adam.v.net.w1[i] == ck.adam.v.net.w1[i]);
  }
  CHECK(back.adam.step == ck.adam.step);
  CHECK(back.has_frozen_teacher);
  CHECK(back.best_pass_at_k.at("pass@8") == 0.7071067811865476);

  // tabular snapshots round-trip their rows too
  checkpoint::Checkpoint tab;
  tab.policy = policy::make_tabular(tasks::kMinVocabSize, 2, tasks::kEos);
  tab.policy.table[{3, 7}] = std::vector<double>(tasks::kMinVocabSize, 0.1);
  tab.policy.table[{3, 7}][5] = -2.0 / 3.0;
  tab.adam = policy::make_adam_state(tab.policy);
  const std::string path_c = (dir / "c.json").string();
  checkpoint::save_checkpoint(path_c, tab);
  const checkpoint::Checkpoint tab_back = checkpoint::load_checkpoint(path_c);
  CHECK(tab_back.policy.table.at({3, 7})[5] == -2.0 / 3.0);
  CHECK(tab_back.policy.cfg.backend == policy::Backend::tabular);

  // version tampering is rejected
  std::string text = slurp(path_a);
  const std::size_t at = text.find("\"version\":1");
  REQUIRE(at != std::string::npos);
  text.replace(at, 11, "\"version\":9");
  std::ofstream(path_a) << text;
  CHECK_THROWS_AS((void)checkpoint::load_checkpoint(path_a), std::runtime_error);
  CHECK_THROWS_AS((void)checkpoint::load_checkpoint((dir / "nope.json").string()),
                  std::runtime_error);
}

TEST_CASE("evaluation hits the exact closed forms on solved and unsolved sets") {
  const policy::PolicySnapshot pol = emit_seven_policy();
  std::vector<tasks::TaskInstance> solved(4, chain_task(3, 4, 7));
  const evaluate::EvalResult all = evaluate::run_eval(pol, solved, 8, {1, 4, 8}, 1.0, 5, 0);
  for (const auto& [name, value] : all.pass_at_k) CHECK(value == 1.0);
  CHECK(all.mean_reward == 1.0);

  std::vector<tasks::TaskInstance> unsolved(4, chain_task(1, 2, 3));
  const evaluate::EvalResult none = evaluate::run_eval(pol, unsolved, 8, {1, 4, 8}, 1.0, 5, 0);
  for (const auto& [name, value] : none.pass_at_k) CHECK(value == 0.0);
  CHECK(none.mean_reward == 0.0);

  std::vector<tasks::TaskInstance> mixed = {chain_task(3, 4, 7), chain_task(1, 2, 3)};
  const evaluate::EvalResult half = evaluate::run_eval(pol, mixed, 8, {1, 4, 8}, 1.0, 5, 0);
  for (const auto& [name, value] : half.pass_at_k) CHECK(value == 0.5);

  CHECK_THROWS_AS((void)evaluate::run_eval(pol, {}, 8, {1}, 1.0, 5, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)evaluate::run_eval(pol, solved, 4, {1, 8}, 1.0, 5, 0),
                  std::invalid_argument);
}

TEST_CASE("evaluation is deterministic and monotone in k") {
  config::ExperimentConfig cfg = small_config("evalprops");
  rng::Stream init(rng::derive(cfg.seed, "init"));
  const policy::PolicySnapshot pol =
      policy::make_tiny_net(config::policy_config(cfg), init);
  const std::vector<tasks::TaskInstance> prompts = evaluate::build_validation_set(cfg);
  REQUIRE(prompts.size() == 5);

  const evaluate::EvalResult a = evaluate::run_eval(pol, prompts, 8, {1, 4, 8}, 1.0, 7, 3);
  const evaluate::EvalResult b = evaluate::run_eval(pol, prompts, 8, {1, 4, 8}, 1.0, 7, 3);
  CHECK(a.pass_at_k == b.pass_at_k);
  CHECK(a.mean_reward == b.mean_reward);
  CHECK(a.pass_at_k.at("pass@1") <= a.pass_at_k.at("pass@4"));
  CHECK(a.pass_at_k.at("pass@4") <= a.pass_at_k.at("pass@8"));
  for (const auto& [name, value] : a.pass_at_k) {
    CHECK(value >= 0.0);
    CHECK(value <= 1.0);
  }

  const std::vector<tasks::TaskInstance> again = evaluate::build_validation_set(cfg);
  REQUIRE(again.size() == prompts.size());
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    CHECK(again[i].prompt_tokens == prompts[i].prompt_tokens);
    CHECK(again[i].ground_truth == prompts[i].ground_truth);
  }
}

TEST_CASE("zero total steps emits exactly the initial evaluation") {
  config::ExperimentConfig cfg = small_config("zerosteps");
  cfg.schedule.total_steps = 0;
  const train::TrainResult result = train::run(cfg);
  REQUIRE(result.metrics.size() == 1);
  CHECK(result.metrics[0].step == 0);
  CHECK(!result.metrics[0].eval_pass_at_k.empty());
  CHECK(result.metrics[0].loss_grpo == 0.0);
  CHECK(result.final_checkpoint.step == 0);
  CHECK(fs::exists(fs::path(cfg.out_dir) / "config.json"));
  CHECK(fs::exists(fs::path(cfg.out_dir) / "validation.jsonl"));
  CHECK(fs::exists(fs::path(cfg.out_dir) / "checkpoint.json"));
  const std::vector<metrics::MetricsRecord> on_disk =
      metrics::read_metrics((fs::path(cfg.out_dir) / "metrics.jsonl").string());
  REQUIRE(on_disk.size() == 1);
  CHECK(metrics::deterministic_key(on_disk[0]) ==
        metrics::deterministic_key(result.metrics[0]));
}

TEST_CASE("training runs are bit-identical under a fixed seed") {
  config::ExperimentConfig cfg_a = small_config("det_a");
  config::ExperimentConfig cfg_b = small_config("det_b");
  const train::TrainResult a = train::run(cfg_a);
  const train::TrainResult b = train::run(cfg_b);
  REQUIRE(a.metrics.size() == b.metrics.size());
  REQUIRE(a.metrics.size() == 7);  // steps 0..6
  for (std::size_t i = 0; i < a.metrics.size(); ++i)
    CHECK(metrics::deterministic_key(a.metrics[i]) ==
          metrics::deterministic_key(b.metrics[i]));

  // eval cadence: 0, 3, 6 carry evaluations, others do not
  const std::set<std::int64_t> eval_steps{0, 3, 6};
  for (const metrics::MetricsRecord& rec : a.metrics) {
    CHECK(rec.eval_pass_at_k.empty() == (eval_steps.count(rec.step) == 0));
    if (!rec.eval_pass_at_k.empty()) {
      CHECK(rec.eval_pass_at_k.at("pass@1") <= rec.eval_pass_at_k.at("pass@4"));
      CHECK(rec.eval_pass_at_k.at("pass@4") <= rec.eval_pass_at_k.at("pass@8"));
      for (const auto& [name, value] : rec.eval_pass_at_k)
        CHECK(rec.best_pass_at_k.at(name) >= value);
    }
  }

  // the stored checkpoint reproduces the in-memory final policy exactly
  const checkpoint::Checkpoint stored = checkpoint::load_checkpoint(
      (fs::path(cfg_a.out_dir) / "checkpoint.json").string());
  CHECK(stored.step == 6);
  REQUIRE(stored.policy.net.w2.size() == a.final_checkpoint.policy.net.w2.size());
  for (std::size_t i = 0; i < stored.policy.net.w2.size(); ++i)
    CHECK(stored.policy.net.w2[i] == a.final_checkpoint.policy.net.w2[i]);
}

TEST_CASE("resuming from a checkpoint replays the uninterrupted run") {
  config::ExperimentConfig full_cfg = small_config("resume_full");
  const train::TrainResult full = train::run(full_cfg);

  config::ExperimentConfig half_cfg = small_config("resume_half");
  half_cfg.schedule.total_steps = 3;
  const train::TrainResult half = train::run(half_cfg);
  CHECK(half.final_checkpoint.step == 3);

  config::ExperimentConfig rest_cfg = small_config("resume_rest");
  const train::TrainResult rest = train::resume(rest_cfg, half.final_checkpoint);
  REQUIRE(rest.metrics.size() == 3);  // steps 4..6
  for (std::size_t i = 0; i < rest.metrics.size(); ++i) {
    CHECK(rest.metrics[i].step == static_cast<std::int64_t>(i) + 4);
    CHECK(metrics::deterministic_key(rest.metrics[i]) ==
          metrics::deterministic_key(full.metrics[i + 4]));
  }
  // final weights agree bitwise with the uninterrupted run
  REQUIRE(rest.final_checkpoint.policy.net.embed.size() ==
          full.final_checkpoint.policy.net.embed.size());
  for (std::size_t i = 0; i < rest.final_checkpoint.policy.net.embed.size(); ++i)
    CHECK(rest.final_checkpoint.policy.net.embed[i] ==
          full.final_checkpoint.policy.net.embed[i]);

  config::ExperimentConfig wrong = small_config("resume_wrong");
  wrong.seed += 1;
  CHECK_THROWS_AS((void)train::resume(wrong, half.final_checkpoint),
                  std::invalid_argument);
  config::ExperimentConfig too_short = small_config("resume_short");
  too_short.schedule.total_steps = 2;
  CHECK_THROWS_AS((void)train::resume(too_short, half.final_checkpoint),
                  std::invalid_argument);
}

TEST_CASE("a zero distillation weight leaves the rollout stream untouched") {
  config::ExperimentConfig with = small_config("lam_on");
  with.hdpo.lambda = 0.1;
  config::ExperimentConfig without = small_config("lam_off");
  without.hdpo.lambda = 0.0;
  const train::TrainResult on = train::run(with);
  const train::TrainResult off = train::run(without);

  // the first update sees identical rollouts; only the loss composition differs
  const metrics::MetricsRecord& s1_on = on.metrics[1];
  const metrics::MetricsRecord& s1_off = off.metrics[1];
  CHECK(s1_on.mean_reward == s1_off.mean_reward);
  CHECK(s1_on.cliff_count == s1_off.cliff_count);
  CHECK(s1_on.loss_grpo == s1_off.loss_grpo);
  for (const metrics::MetricsRecord& rec : off.metrics) {
    CHECK(rec.loss_jsd == 0.0);
    CHECK(rec.t_size == 0);
    CHECK(rec.n_tok == 0);
    CHECK(rec.priv_pass_rate == 0.0);
  }
  // distillation engaged somewhere in the lambda > 0 run
  bool any_jsd = false;
  for (const metrics::MetricsRecord& rec : on.metrics) any_jsd |= rec.t_size > 0;
  CHECK(any_jsd);
}

TEST_CASE("frozen-teacher runs checkpoint the teacher and stay deterministic") {
  config::ExperimentConfig cfg = small_config("frozen");
  cfg.hdpo.teacher_mode = "frozen";
  cfg.schedule.total_steps = 4;
  const train::TrainResult result = train::run(cfg);
  CHECK(result.final_checkpoint.has_frozen_teacher);
  // the frozen teacher still holds the step-0 weights, not the trained ones
  rng::Stream init(rng::derive(cfg.seed, "init"));
  const policy::PolicySnapshot fresh =
      policy::make_tiny_net(config::policy_config(cfg), init);
  REQUIRE(result.final_checkpoint.frozen_teacher.net.w1.size() ==
          fresh.net.w1.size());
  for (std::size_t i = 0; i < fresh.net.w1.size(); ++i)
    CHECK(result.final_checkpoint.frozen_teacher.net.w1[i] == fresh.net.w1[i]);
  bool teacher_differs_from_student = false;
  for (std::size_t i = 0; i < fresh.net.w1.size(); ++i)
    teacher_differs_from_student =
        teacher_differs_from_student ||
        result.final_checkpoint.policy.net.w1[i] != fresh.net.w1[i];
  CHECK(teacher_differs_from_student);
}
