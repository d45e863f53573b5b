#include "hdpo/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace hdpo::config {

using nlohmann::json;

namespace {

json to_json(const ExperimentConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  j["policy"] = {{"vocab_size", cfg.policy.vocab_size},
                 {"backend", cfg.policy.backend},
                 {"window", cfg.policy.window},
                 {"embed_dim", cfg.policy.embed_dim},
                 {"hidden_dim", cfg.policy.hidden_dim}};
  j["tasks"] = {{"families", cfg.tasks.families},
                {"family_weights", cfg.tasks.family_weights},
                {"difficulties", cfg.tasks.difficulties},
                {"difficulty_weights", cfg.tasks.difficulty_weights},
                {"prompts_per_step", cfg.tasks.prompts_per_step},
                {"validation_prompts", cfg.tasks.validation_prompts}};
  j["grpo"] = {{"group_size", cfg.grpo.group_size},
               {"temperature", cfg.grpo.temperature},
               {"epsilon", cfg.grpo.epsilon},
               {"advantage_mode", cfg.grpo.advantage_mode},
               {"rloo_scaling", cfg.grpo.rloo_scaling},
               {"inner_epochs", cfg.grpo.inner_epochs}};
  j["hdpo"] = {{"lambda", cfg.hdpo.lambda},
               {"teacher_mode", cfg.hdpo.teacher_mode},
               {"top_k", cfg.hdpo.top_k},
               {"max_cliff_prompts_per_step", cfg.hdpo.max_cliff_prompts_per_step},
               {"privileged_rollouts_per_cliff", cfg.hdpo.privileged_rollouts_per_cliff},
               {"teacher_success_threshold", cfg.hdpo.teacher_success_threshold}};
  j["optimizer"] = {{"lr", cfg.optimizer.lr},
                    {"warmup_steps", cfg.optimizer.warmup_steps},
                    {"weight_decay", cfg.optimizer.weight_decay},
                    {"max_grad_norm", cfg.optimizer.max_grad_norm},
                    {"beta1", cfg.optimizer.beta1},
                    {"beta2", cfg.optimizer.beta2},
                    {"eps", cfg.optimizer.eps}};
  j["schedule"] = {{"total_steps", cfg.schedule.total_steps},
                   {"eval_period", cfg.schedule.eval_period},
                   {"eval_samples_per_prompt", cfg.schedule.eval_samples_per_prompt},
                   {"eval_k_list", cfg.schedule.eval_k_list}};
  j["out_dir"] = cfg.out_dir;
  return j;
}

// Reads j[key] into out; the key must exist and match the field's type.
template <typename T>
void field(const json& j, const char* key, T& out, const std::string& scope) {
  auto it = j.find(key);
  if (it == j.end())
    throw std::invalid_argument("config: missing key " + scope + key);
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    throw std::invalid_argument("config: bad value for " + scope + key + ": " +
                                e.what());
  }
}

void reject_unknown(const json& j, std::initializer_list<const char*> known,
                    const std::string& scope) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw std::invalid_argument("config: unknown key " + scope + key);
  }
}

ExperimentConfig from_json(const json& j) {
  ExperimentConfig cfg;
  reject_unknown(j, {"seed", "policy", "tasks", "grpo", "hdpo", "optimizer",
                     "schedule", "out_dir"},
                 "");
  field(j, "seed", cfg.seed, "");
  field(j, "out_dir", cfg.out_dir, "");

  const json& p = j.at("policy");
  reject_unknown(p, {"vocab_size", "backend", "window", "embed_dim", "hidden_dim"},
                 "policy.");
  field(p, "vocab_size", cfg.policy.vocab_size, "policy.");
  field(p, "backend", cfg.policy.backend, "policy.");
  field(p, "window", cfg.policy.window, "policy.");
  field(p, "embed_dim", cfg.policy.embed_dim, "policy.");
  field(p, "hidden_dim", cfg.policy.hidden_dim, "policy.");

  const json& t = j.at("tasks");
  reject_unknown(t,
                 {"families", "family_weights", "difficulties", "difficulty_weights",
                  "prompts_per_step", "validation_prompts"},
                 "tasks.");
  field(t, "families", cfg.tasks.families, "tasks.");
  field(t, "family_weights", cfg.tasks.family_weights, "tasks.");
  field(t, "difficulties", cfg.tasks.difficulties, "tasks.");
  field(t, "difficulty_weights", cfg.tasks.difficulty_weights, "tasks.");
  field(t, "prompts_per_step", cfg.tasks.prompts_per_step, "tasks.");
  field(t, "validation_prompts", cfg.tasks.validation_prompts, "tasks.");

  const json& g = j.at("grpo");
  reject_unknown(g,
                 {"group_size", "temperature", "epsilon", "advantage_mode",
                  "rloo_scaling", "inner_epochs"},
                 "grpo.");
  field(g, "group_size", cfg.grpo.group_size, "grpo.");
  field(g, "temperature", cfg.grpo.temperature, "grpo.");
  field(g, "epsilon", cfg.grpo.epsilon, "grpo.");
  field(g, "advantage_mode", cfg.grpo.advantage_mode, "grpo.");
  field(g, "rloo_scaling", cfg.grpo.rloo_scaling, "grpo.");
  field(g, "inner_epochs", cfg.grpo.inner_epochs, "grpo.");

  const json& h = j.at("hdpo");
  reject_unknown(h,
                 {"lambda", "teacher_mode", "top_k", "max_cliff_prompts_per_step",
                  "privileged_rollouts_per_cliff", "teacher_success_threshold"},
                 "hdpo.");
  field(h, "lambda", cfg.hdpo.lambda, "hdpo.");
  field(h, "teacher_mode", cfg.hdpo.teacher_mode, "hdpo.");
  field(h, "top_k", cfg.hdpo.top_k, "hdpo.");
  field(h, "max_cliff_prompts_per_step", cfg.hdpo.max_cliff_prompts_per_step, "hdpo.");
  field(h, "privileged_rollouts_per_cliff", cfg.hdpo.privileged_rollouts_per_cliff,
        "hdpo.");
  field(h, "teacher_success_threshold", cfg.hdpo.teacher_success_threshold, "hdpo.");

  const json& o = j.at("optimizer");
  reject_unknown(o,
                 {"lr", "warmup_steps", "weight_decay", "max_grad_norm", "beta1",
                  "beta2", "eps"},
                 "optimizer.");
  field(o, "lr", cfg.optimizer.lr, "optimizer.");
  field(o, "warmup_steps", cfg.optimizer.warmup_steps, "optimizer.");
  field(o, "weight_decay", cfg.optimizer.weight_decay, "optimizer.");
  field(o, "max_grad_norm", cfg.optimizer.max_grad_norm, "optimizer.");
  field(o, "beta1", cfg.optimizer.beta1, "optimizer.");
  field(o, "beta2", cfg.optimizer.beta2, "optimizer.");
  field(o, "eps", cfg.optimizer.eps, "optimizer.");

  const json& s = j.at("schedule");
  reject_unknown(
      s, {"total_steps", "eval_period", "eval_samples_per_prompt", "eval_k_list"},
      "schedule.");
  field(s, "total_steps", cfg.schedule.total_steps, "schedule.");
  field(s, "eval_period", cfg.schedule.eval_period, "schedule.");
  field(s, "eval_samples_per_prompt", cfg.schedule.eval_samples_per_prompt,
        "schedule.");
  field(s, "eval_k_list", cfg.schedule.eval_k_list, "schedule.");
  return cfg;
}

}  // namespace

std::string to_json_text(const ExperimentConfig& cfg) { return to_json(cfg).dump(2); }

ExperimentConfig from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: parse error: ") + e.what());
  }
  return from_json(j);
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

void save_config(const std::string& path, const ExperimentConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("config: cannot write " + path);
  out << to_json_text(cfg) << '\n';
}

void validate(const ExperimentConfig& cfg) {
  const auto fail = [](const std::string& msg) {
    throw std::invalid_argument("config: " + msg);
  };
  if (cfg.policy.vocab_size < tasks::kMinVocabSize)
    fail("policy.vocab_size below the task vocabulary");
  if (cfg.policy.backend != "tabular" && cfg.policy.backend != "tiny_net")
    fail("policy.backend must be tabular or tiny_net");
  if (cfg.policy.window < 1) fail("policy.window must be positive");
  if (cfg.policy.embed_dim < 1 || cfg.policy.hidden_dim < 1)
    fail("policy dimensions must be positive");

  if (cfg.tasks.families.empty()) fail("tasks.families is empty");
  if (cfg.tasks.families.size() != cfg.tasks.family_weights.size())
    fail("tasks.family_weights length mismatch");
  if (cfg.tasks.difficulties.empty()) fail("tasks.difficulties is empty");
  if (cfg.tasks.difficulties.size() != cfg.tasks.difficulty_weights.size())
    fail("tasks.difficulty_weights length mismatch");
  double family_total = 0.0;
  for (double w : cfg.tasks.family_weights) {
    if (w < 0.0) fail("tasks.family_weights must be nonnegative");
    family_total += w;
  }
  if (!(family_total > 0.0)) fail("tasks.family_weights sum to zero");
  double diff_total = 0.0;
  for (double w : cfg.tasks.difficulty_weights) {
    if (w < 0.0) fail("tasks.difficulty_weights must be nonnegative");
    diff_total += w;
  }
  if (!(diff_total > 0.0)) fail("tasks.difficulty_weights sum to zero");
  for (const std::string& name : cfg.tasks.families)
    (void)tasks::family_from_string(name);  // throws on unknown names
  for (int d : cfg.tasks.difficulties)
    if (d < 1) fail("tasks.difficulties entries must be >= 1");
  if (cfg.tasks.prompts_per_step < 1) fail("tasks.prompts_per_step must be >= 1");
  if (cfg.tasks.validation_prompts < 1) fail("tasks.validation_prompts must be >= 1");

  if (cfg.grpo.group_size < 2) fail("grpo.group_size must be >= 2");
  if (!(cfg.grpo.temperature > 0.0)) fail("grpo.temperature must be positive");
  if (!(cfg.grpo.epsilon > 0.0) || cfg.grpo.epsilon >= 1.0)
    fail("grpo.epsilon must lie in (0, 1)");
  if (cfg.grpo.advantage_mode != "loo" && cfg.grpo.advantage_mode != "mean_std")
    fail("grpo.advantage_mode must be loo or mean_std");
  if (cfg.grpo.inner_epochs < 1) fail("grpo.inner_epochs must be >= 1");

  if (cfg.hdpo.lambda < 0.0) fail("hdpo.lambda must be >= 0");
  if (cfg.hdpo.teacher_mode != "drifting" && cfg.hdpo.teacher_mode != "frozen")
    fail("hdpo.teacher_mode must be drifting or frozen");
  if (cfg.hdpo.top_k < 1) fail("hdpo.top_k must be >= 1");
  if (cfg.hdpo.max_cliff_prompts_per_step < 0)
    fail("hdpo.max_cliff_prompts_per_step must be >= 0");
  if (cfg.hdpo.privileged_rollouts_per_cliff < 1)
    fail("hdpo.privileged_rollouts_per_cliff must be >= 1");

  if (!(cfg.optimizer.lr > 0.0)) fail("optimizer.lr must be positive");
  if (cfg.optimizer.warmup_steps < 0) fail("optimizer.warmup_steps must be >= 0");
  if (cfg.optimizer.weight_decay < 0.0) fail("optimizer.weight_decay must be >= 0");
  if (!(cfg.optimizer.beta1 >= 0.0 && cfg.optimizer.beta1 < 1.0))
    fail("optimizer.beta1 must lie in [0, 1)");
  if (!(cfg.optimizer.beta2 >= 0.0 && cfg.optimizer.beta2 < 1.0))
    fail("optimizer.beta2 must lie in [0, 1)");
  if (!(cfg.optimizer.eps > 0.0)) fail("optimizer.eps must be positive");

  if (cfg.schedule.total_steps < 0) fail("schedule.total_steps must be >= 0");
  if (cfg.schedule.eval_period < 1) fail("schedule.eval_period must be >= 1");
  if (cfg.schedule.eval_samples_per_prompt < 1)
    fail("schedule.eval_samples_per_prompt must be >= 1");
  if (cfg.schedule.eval_k_list.empty()) fail("schedule.eval_k_list is empty");
  for (int k : cfg.schedule.eval_k_list) {
    if (k < 1) fail("schedule.eval_k_list entries must be >= 1");
    if (k > cfg.schedule.eval_samples_per_prompt)
      fail("schedule.eval_k_list entry exceeds eval_samples_per_prompt");
  }
}

void apply_override(ExperimentConfig& cfg, std::string_view assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw std::invalid_argument("override must look like dotted.key=value: " +
                                std::string(assignment));
  std::string key(assignment.substr(0, eq));
  const std::string value(assignment.substr(eq + 1));

  json j = to_json(cfg);
  std::string pointer = "/";
  for (char c : key) pointer += c == '.' ? '/' : c;
  const json::json_pointer ptr(pointer);
  if (!j.contains(ptr))
    throw std::invalid_argument("override: unknown key " + key);
  json parsed = json::parse(value, nullptr, false);
  if (parsed.is_discarded()) parsed = value;  // bare strings need no quotes
  j[ptr] = parsed;
  cfg = from_json(j);
}

namespace {

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  return fnv1a64(to_json(cfg).dump());
}

std::uint64_t resume_hash(const ExperimentConfig& cfg) {
  json j = to_json(cfg);
  j["schedule"].erase("total_steps");
  j.erase("out_dir");
  return fnv1a64(j.dump());
}

policy::PolicyConfig policy_config(const ExperimentConfig& cfg) {
  policy::PolicyConfig out;
  out.vocab_size = cfg.policy.vocab_size;
  out.window = cfg.policy.window;
  out.backend = cfg.policy.backend == "tabular" ? policy::Backend::tabular
                                                : policy::Backend::tiny_net;
  out.embed_dim = cfg.policy.embed_dim;
  out.hidden_dim = cfg.policy.hidden_dim;
  out.eos_id = tasks::kEos;
  return out;
}

grpo::ClipConfig clip_config(const ExperimentConfig& cfg) {
  grpo::ClipConfig out;
  out.epsilon = cfg.grpo.epsilon;
  out.mode = cfg.grpo.advantage_mode == "loo" ? grpo::AdvantageMode::loo
                                              : grpo::AdvantageMode::mean_std;
  out.rloo_scaling = cfg.grpo.rloo_scaling;
  return out;
}

distill::DistillConfig distill_config(const ExperimentConfig& cfg) {
  distill::DistillConfig out;
  out.lambda = cfg.hdpo.lambda;
  out.top_k = cfg.hdpo.top_k;
  out.max_cliff_prompts_per_step = cfg.hdpo.max_cliff_prompts_per_step;
  out.privileged_rollouts_per_cliff = cfg.hdpo.privileged_rollouts_per_cliff;
  out.teacher_success_threshold = cfg.hdpo.teacher_success_threshold;
  out.teacher_mode = cfg.hdpo.teacher_mode == "frozen"
                         ? distill::TeacherMode::frozen
                         : distill::TeacherMode::drifting;
  return out;
}

policy::AdamConfig adam_config(const ExperimentConfig& cfg) {
  policy::AdamConfig out;
  out.beta1 = cfg.optimizer.beta1;
  out.beta2 = cfg.optimizer.beta2;
  out.eps = cfg.optimizer.eps;
  out.weight_decay = cfg.optimizer.weight_decay;
  return out;
}

}  // namespace hdpo::config
