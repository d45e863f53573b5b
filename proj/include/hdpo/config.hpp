#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "hdpo/distill.hpp"
#include "hdpo/grpo.hpp"
#include "hdpo/optimizer.hpp"
#include "hdpo/policy.hpp"

namespace hdpo::config {

struct PolicyBlock {
  int vocab_size = 20;
  std::string backend = "tiny_net";  // or "tabular"
  int window = 8;
  int embed_dim = 16;
  int hidden_dim = 64;
};

struct TaskBlock {
  std::vector<std::string> families = {"modular-chain", "copy-reverse"};
  std::vector<double> family_weights = {0.5, 0.5};
  std::vector<int> difficulties = {1, 2, 3};
  std::vector<double> difficulty_weights = {1.0, 1.0, 1.0};
  int prompts_per_step = 16;
  int validation_prompts = 64;
};

struct GrpoBlock {
  int group_size = 8;  // rollouts per prompt, >= 2
  double temperature = 1.0;
  double epsilon = 0.2;
  std::string advantage_mode = "loo";  // or "mean_std"
  bool rloo_scaling = false;
  int inner_epochs = 1;
};

struct HdpoBlock {
  double lambda = 0.1;  // >= 0; zero disables distillation entirely
  std::string teacher_mode = "drifting";  // or "frozen"
  int top_k = 64;
  int max_cliff_prompts_per_step = 32;
  int privileged_rollouts_per_cliff = 4;
  double teacher_success_threshold = 1.0;
};

struct OptimBlock {
  double lr = 1e-2;
  int warmup_steps = 50;  // linear 0.1x -> 1.0x, then constant
  double weight_decay = 0.01;
  double max_grad_norm = 1.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct ScheduleBlock {
  std::int64_t total_steps = 500;
  int eval_period = 20;
  int eval_samples_per_prompt = 16;
  std::vector<int> eval_k_list = {1, 4, 8};
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  PolicyBlock policy;
  TaskBlock tasks;
  GrpoBlock grpo;
  HdpoBlock hdpo;
  OptimBlock optimizer;
  ScheduleBlock schedule;
  std::string out_dir = "runs/default";
};

// Canonical JSON round-trip. Unknown keys in the input are rejected so typos
// in config files fail loudly instead of silently using defaults.
std::string to_json_text(const ExperimentConfig& cfg);
ExperimentConfig from_json_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);
void save_config(const std::string& path, const ExperimentConfig& cfg);

// Throws std::invalid_argument naming the offending field.
void validate(const ExperimentConfig& cfg);

// Applies "dotted.key=value" (e.g. "grpo.group_size=16"). The value is parsed
// as JSON when possible, else taken as a string. Unknown keys throw.
void apply_override(ExperimentConfig& cfg, std::string_view assignment);

// FNV-1a over the canonical serialization: experiment provenance.
std::uint64_t config_hash(const ExperimentConfig& cfg);
// Same, but ignoring schedule.total_steps and out_dir, which a resumed run
// may legitimately extend or redirect.
std::uint64_t resume_hash(const ExperimentConfig& cfg);

// Views into the module-level configs.
policy::PolicyConfig policy_config(const ExperimentConfig& cfg);
grpo::ClipConfig clip_config(const ExperimentConfig& cfg);
distill::DistillConfig distill_config(const ExperimentConfig& cfg);
policy::AdamConfig adam_config(const ExperimentConfig& cfg);

}  // namespace hdpo::config
