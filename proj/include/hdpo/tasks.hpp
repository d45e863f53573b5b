#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hdpo/policy.hpp"
#include "hdpo/rng.hpp"
#include "hdpo/vocab.hpp"

namespace hdpo::tasks {

enum class TaskFamily { modular_chain, copy_reverse };

std::string to_string(TaskFamily family);
TaskFamily family_from_string(const std::string& name);

struct TaskInstance {
  TaskFamily family = TaskFamily::modular_chain;
  int difficulty = 1;
  std::uint64_t seed = 0;  // instance id, drawn at generation time
  std::vector<std::int32_t> prompt_tokens;
  std::vector<std::int32_t> ground_truth;  // worked trace ending in marker + answer
  std::vector<std::int32_t> answer;        // canonical final answer
};

// modular-chain: prompt [v0, op_1, k_1, ..., op_n, k_n] meaning
// v_i = (v_{i-1} +/- k_i) mod 10; difficulty = n; answer = [v_n];
// trace = [v_1 .. v_n, marker, v_n].
// copy-reverse: prompt is a letter string of length = difficulty;
// answer = reversed string; trace = reversed ++ [marker] ++ reversed.
// The generated trace always passes its own verifier (checked here).
TaskInstance generate_task(TaskFamily family, int difficulty, rng::Stream& rng);

// Binary verifier; total (malformed completions score 0). The completion is
// truncated at the first end-of-sequence token, then the answer is the token
// run after the last answer marker, or the final answer-length tokens when no
// marker is present. Exact match required.
int verify(const TaskInstance& task, const std::vector<std::int32_t>& completion);

policy::Context prompt_context(const TaskInstance& task);

// prompt ++ [open, trace..., close] in the privileged segment; a student view
// of the result is exactly prompt_context.
policy::Context privileged_context(const TaskInstance& task);

// Generation length used for rollouts on this task: trace length plus room
// for the end token and one slack position.
int rollout_budget(const TaskInstance& task);

// Line-delimited structured-text records for frozen task sets.
void write_taskset(const std::string& path, const std::vector<TaskInstance>& tasks);
std::vector<TaskInstance> read_taskset(const std::string& path);

}  // namespace hdpo::tasks
