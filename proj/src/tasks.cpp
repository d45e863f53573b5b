#include "hdpo/tasks.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace hdpo::tasks {

std::int32_t letter_token(char c) {
  if (c < 'a' || c >= 'a' + kNumLetters)
    throw std::invalid_argument("letter_token: character out of range");
  return kLetterBase + static_cast<std::int32_t>(c - 'a');
}

std::vector<std::int32_t> letters_to_tokens(std::string_view s) {
  std::vector<std::int32_t> out;
  out.reserve(s.size());
  for (char c : s) out.push_back(letter_token(c));
  return out;
}

std::string to_string(TaskFamily family) {
  switch (family) {
    case TaskFamily::modular_chain:
      return "modular-chain";
    case TaskFamily::copy_reverse:
      return "copy-reverse";
  }
  throw std::invalid_argument("to_string: unknown task family");
}

TaskFamily family_from_string(const std::string& name) {
  if (name == "modular-chain") return TaskFamily::modular_chain;
  if (name == "copy-reverse") return TaskFamily::copy_reverse;
  throw std::invalid_argument("family_from_string: unknown task family '" + name + "'");
}

TaskInstance generate_task(TaskFamily family, int difficulty, rng::Stream& rng) {
  if (difficulty < 1) throw std::invalid_argument("generate_task: difficulty < 1");
  TaskInstance task;
  task.family = family;
  task.difficulty = difficulty;
  task.seed = rng.next_u64();
  if (family == TaskFamily::modular_chain) {
    std::int32_t value = static_cast<std::int32_t>(rng.next_int(10));
    task.prompt_tokens.push_back(value);
    for (int i = 0; i < difficulty; ++i) {
      const bool minus = rng.next_int(2) == 1;
      const auto k = static_cast<std::int32_t>(1 + rng.next_int(9));
      task.prompt_tokens.push_back(minus ? kMinus : kPlus);
      task.prompt_tokens.push_back(k);
      value = ((minus ? value - k : value + k) % 10 + 10) % 10;
      task.ground_truth.push_back(value);
    }
    task.answer = {value};
  } else {
    std::vector<std::int32_t> reversed;
    for (int i = 0; i < difficulty; ++i)
      task.prompt_tokens.push_back(kLetterBase +
                                   static_cast<std::int32_t>(rng.next_int(kNumLetters)));
    reversed.assign(task.prompt_tokens.rbegin(), task.prompt_tokens.rend());
    task.ground_truth = reversed;
    task.answer = reversed;
  }
  task.ground_truth.push_back(kAnswerMarker);
  task.ground_truth.insert(task.ground_truth.end(), task.answer.begin(),
                           task.answer.end());
  if (verify(task, task.ground_truth) != 1)
    throw std::logic_error("generate_task: ground truth failed its own verifier");
  return task;
}

int verify(const TaskInstance& task, const std::vector<std::int32_t>& completion) {
  std::size_t end = completion.size();
  for (std::size_t i = 0; i < completion.size(); ++i) {
    if (completion[i] == kEos) {
      end = i;
      break;
    }
  }
  std::size_t begin = 0;
  bool marker_found = false;
  for (std::size_t i = end; i > 0; --i) {
    if (completion[i - 1] == kAnswerMarker) {
      begin = i;
      marker_found = true;
      break;
    }
  }
  if (!marker_found && end > task.answer.size()) begin = end - task.answer.size();
  if (end - begin != task.answer.size()) return 0;
  for (std::size_t i = 0; i < task.answer.size(); ++i)
    if (completion[begin + i] != task.answer[i]) return 0;
  return 1;
}

policy::Context prompt_context(const TaskInstance& task) {
  return policy::Context{task.prompt_tokens, {}, {}};
}

policy::Context privileged_context(const TaskInstance& task) {
  policy::Context ctx;
  ctx.prompt = task.prompt_tokens;
  ctx.privileged.reserve(task.ground_truth.size() + 2);
  ctx.privileged.push_back(kPrivOpen);
  ctx.privileged.insert(ctx.privileged.end(), task.ground_truth.begin(),
                        task.ground_truth.end());
  ctx.privileged.push_back(kPrivClose);
  return ctx;
}

int rollout_budget(const TaskInstance& task) {
  return static_cast<int>(task.ground_truth.size()) + 2;
}

void write_taskset(const std::string& path, const std::vector<TaskInstance>& tasks) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_taskset: cannot open " + path);
  for (const TaskInstance& task : tasks) {
    nlohmann::json rec;
    rec["family"] = to_string(task.family);
    rec["difficulty"] = task.difficulty;
    rec["seed"] = task.seed;
    rec["prompt"] = task.prompt_tokens;
    rec["ground_truth"] = task.ground_truth;
    rec["answer"] = task.answer;
    out << rec.dump() << "\n";
  }
  if (!out) throw std::runtime_error("write_taskset: write failed for " + path);
}

std::vector<TaskInstance> read_taskset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_taskset: cannot open " + path);
  std::vector<TaskInstance> tasks;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
      TaskInstance task;
      task.family = family_from_string(rec.at("family").get<std::string>());
      task.difficulty = rec.at("difficulty").get<int>();
      task.seed = rec.at("seed").get<std::uint64_t>();
      task.prompt_tokens = rec.at("prompt").get<std::vector<std::int32_t>>();
      task.ground_truth = rec.at("ground_truth").get<std::vector<std::int32_t>>();
      task.answer = rec.at("answer").get<std::vector<std::int32_t>>();
      tasks.push_back(std::move(task));
    } catch (const std::exception& e) {
      throw std::runtime_error("read_taskset: " + path + ":" +
                               std::to_string(line_no) + ": " + e.what());
    }
  }
  return tasks;
}

}  // namespace hdpo::tasks
