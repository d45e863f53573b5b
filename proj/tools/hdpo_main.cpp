#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hdpo/checkpoint.hpp"
#include "hdpo/config.hpp"
#include "hdpo/evaluate.hpp"
#include "hdpo/metrics.hpp"
#include "hdpo/rng.hpp"
#include "hdpo/tasks.hpp"
#include "hdpo/theory.hpp"
#include "hdpo/train.hpp"

namespace fs = std::filesystem;

namespace {

void print_eval_map(const std::map<std::string, double>& values) {
  for (const auto& [name, value] : values)
    std::cout << "  " << name << " = " << value << '\n';
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& sets,
              const std::string& resume_path,
              const std::optional<std::uint64_t>& seed,
              const std::optional<std::string>& out_dir) {
  hdpo::config::ExperimentConfig cfg = hdpo::config::load_config(config_path);
  for (const std::string& assignment : sets)
    hdpo::config::apply_override(cfg, assignment);
  if (seed) cfg.seed = *seed;
  if (out_dir) cfg.out_dir = *out_dir;
  hdpo::config::validate(cfg);

  hdpo::train::TrainResult result;
  if (resume_path.empty()) {
    result = hdpo::train::run(cfg);
  } else {
    const hdpo::checkpoint::Checkpoint ck =
        hdpo::checkpoint::load_checkpoint(resume_path);
    std::cout << "resuming from step " << ck.step << '\n';
    result = hdpo::train::resume(cfg, ck);
  }

  std::cout << "finished at step " << result.final_checkpoint.step << ", wrote "
            << result.metrics.size() << " metric records to " << cfg.out_dir
            << '\n';
  if (!result.final_checkpoint.best_pass_at_k.empty()) {
    std::cout << "best pass@k across training:\n";
    print_eval_map(result.final_checkpoint.best_pass_at_k);
  }
  return 0;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& tasks_path,
             int samples, std::vector<int> k_list, double temperature,
             const std::optional<std::uint64_t>& seed) {
  const hdpo::checkpoint::Checkpoint ck =
      hdpo::checkpoint::load_checkpoint(checkpoint_path);
  const std::vector<hdpo::tasks::TaskInstance> prompts =
      hdpo::tasks::read_taskset(tasks_path);
  const hdpo::evaluate::EvalResult result = hdpo::evaluate::run_eval(
      ck.policy, prompts, samples, k_list, temperature, seed.value_or(0), 0);
  std::cout << "prompts: " << prompts.size() << ", samples per prompt: " << samples
            << '\n';
  print_eval_map(result.pass_at_k);
  std::cout << "  mean_reward = " << result.mean_reward << '\n';
  return 0;
}

int cmd_verify_theory(std::size_t trials, const std::optional<std::uint64_t>& seed) {
  const std::uint64_t s = seed.value_or(0);
  bool all_pass = true;
  for (const hdpo::theory::CheckResult& check : hdpo::theory::standard_checks(s)) {
    std::cout << (check.pass ? "[pass] " : "[FAIL] ") << check.name;
    for (const auto& [name, value] : check.quantities)
      std::cout << "  " << name << "=" << value;
    std::cout << '\n';
    all_pass = all_pass && check.pass;
  }
  hdpo::rng::Stream audit_rng(hdpo::rng::derive(s, "cli-audit"));
  const hdpo::theory::KlBoundAuditResult audit =
      hdpo::theory::kl_bound_audit(trials, audit_rng);
  const bool audit_pass = audit.violations == 0;
  std::cout << (audit_pass ? "[pass] " : "[FAIL] ") << "smoothness-audit  trials="
            << audit.trials << "  violations=" << audit.violations
            << "  max_kl_over_bound=" << audit.max_ratio << '\n';
  all_pass = all_pass && audit_pass;
  std::cout << (all_pass ? "all checks passed" : "CHECK FAILURES PRESENT") << '\n';
  return all_pass ? 0 : 1;
}

void write_column(const fs::path& dir, const std::string& name,
                  const std::vector<std::pair<std::int64_t, double>>& rows,
                  int& files_written) {
  if (rows.empty()) return;
  const fs::path path = dir / (name + ".dat");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("export: cannot write " + path.string());
  out << "# step " << name << '\n';
  for (const auto& [step, value] : rows) out << step << ' ' << value << '\n';
  ++files_written;
}

int cmd_export(const std::string& metrics_path, const std::string& out_dir) {
  const std::vector<hdpo::metrics::MetricsRecord> records =
      hdpo::metrics::read_metrics(metrics_path);
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);

  using Column = std::vector<std::pair<std::int64_t, double>>;
  std::map<std::string, Column> columns;
  for (const hdpo::metrics::MetricsRecord& rec : records) {
    columns["mean_reward"].emplace_back(rec.step, rec.mean_reward);
    columns["cliff_fraction"].emplace_back(rec.step, rec.cliff_fraction);
    columns["cliff_count"].emplace_back(rec.step, rec.cliff_count);
    columns["t_size"].emplace_back(rec.step, static_cast<double>(rec.t_size));
    columns["n_tok"].emplace_back(rec.step, static_cast<double>(rec.n_tok));
    columns["priv_pass_rate"].emplace_back(rec.step, rec.priv_pass_rate);
    columns["loss_grpo"].emplace_back(rec.step, rec.loss_grpo);
    columns["loss_jsd"].emplace_back(rec.step, rec.loss_jsd);
    columns["grad_norm"].emplace_back(rec.step, rec.grad_norm);
    columns["lr"].emplace_back(rec.step, rec.lr);
    columns["wall_ms"].emplace_back(rec.step, rec.wall_ms);
    for (const auto& [name, value] : rec.eval_pass_at_k)
      columns["eval_" + name].emplace_back(rec.step, value);
    for (const auto& [name, value] : rec.best_pass_at_k)
      columns["best_" + name].emplace_back(rec.step, value);
  }

  int files_written = 0;
  for (const auto& [name, rows] : columns)
    write_column(dir, name, rows, files_written);
  std::cout << "wrote " << files_written << " column files to " << out_dir << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale laboratory for GRPO with privileged self-distillation"};
  app.require_subcommand(1);
  // global flags may appear before or after the subcommand name
  app.fallthrough();

  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  app.add_option("--seed", seed, "override the experiment seed");
  app.add_option("--out-dir", out_dir, "override the output directory");

  auto* train_cmd = app.add_subcommand("train", "run a training experiment");
  std::string config_path;
  std::vector<std::string> sets;
  std::string resume_path;
  train_cmd->add_option("--config", config_path, "experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--set", sets, "dotted.key=value override (repeatable)");
  train_cmd->add_option("--resume", resume_path, "checkpoint to continue from")
      ->check(CLI::ExistingFile);

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a task set");
  std::string eval_checkpoint;
  std::string eval_tasks;
  int eval_samples = 16;
  std::vector<int> eval_k = {1, 4, 8};
  double eval_temperature = 1.0;
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "checkpoint file")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--tasks", eval_tasks, "task set (JSONL)")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--samples", eval_samples, "samples per prompt");
  eval_cmd->add_option("--k", eval_k, "pass@k values to report");
  eval_cmd->add_option("--temperature", eval_temperature, "sampling temperature");

  auto* verify_cmd =
      app.add_subcommand("verify-theory", "run the exact/randomized check battery");
  std::size_t verify_trials = 10000;
  verify_cmd->add_option("--trials", verify_trials, "extra smoothness-audit trials");

  auto* export_cmd =
      app.add_subcommand("export-plotdata", "metrics stream to columnar text");
  std::string export_metrics;
  std::string export_out = "plotdata";
  export_cmd->add_option("--metrics", export_metrics, "metrics stream (JSONL)")
      ->required()
      ->check(CLI::ExistingFile);
  export_cmd->add_option("--out", export_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*train_cmd) return cmd_train(config_path, sets, resume_path, seed, out_dir);
    if (*eval_cmd)
      return cmd_eval(eval_checkpoint, eval_tasks, eval_samples, eval_k,
                      eval_temperature, seed);
    if (*verify_cmd) return cmd_verify_theory(verify_trials, seed);
    if (*export_cmd)
      return cmd_export(export_metrics, out_dir.value_or(export_out));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
