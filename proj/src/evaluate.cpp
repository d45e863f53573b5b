#include "hdpo/evaluate.hpp"

#include <algorithm>
#include <stdexcept>

#include "hdpo/rng.hpp"

namespace hdpo::evaluate {

double pass_at_k(int n, int c, int k) {
  if (c < 0 || c > n) throw std::invalid_argument("pass_at_k: c outside [0, n]");
  if (k < 1 || k > n) throw std::invalid_argument("pass_at_k: k outside [1, n]");
  // 1 - C(n-c, k)/C(n, k) as a product of (n-c-i)/(n-i); any zero factor
  // means every k-subset contains a correct sample
  double miss = 1.0;
  for (int i = 0; i < k; ++i)
    miss *= static_cast<double>(n - c - i) / static_cast<double>(n - i);
  if (n - c < k) miss = 0.0;
  return 1.0 - miss;
}

std::vector<tasks::TaskInstance> build_validation_set(
    const config::ExperimentConfig& cfg) {
  std::vector<tasks::TaskInstance> prompts;
  prompts.reserve(static_cast<std::size_t>(cfg.tasks.validation_prompts));
  rng::Stream stream(rng::derive(cfg.seed, "validation"));
  for (int i = 0; i < cfg.tasks.validation_prompts; ++i) {
    const int family_idx = stream.next_weighted(cfg.tasks.family_weights);
    const int diff_idx = stream.next_weighted(cfg.tasks.difficulty_weights);
    prompts.push_back(tasks::generate_task(
        tasks::family_from_string(cfg.tasks.families[static_cast<std::size_t>(family_idx)]),
        cfg.tasks.difficulties[static_cast<std::size_t>(diff_idx)], stream));
  }
  return prompts;
}

EvalResult run_eval(const policy::PolicySnapshot& pol,
                    const std::vector<tasks::TaskInstance>& prompts,
                    int samples_per_prompt, const std::vector<int>& k_list,
                    double temperature, std::uint64_t seed_root, std::int64_t step) {
  if (prompts.empty()) throw std::invalid_argument("run_eval: empty validation set");
  if (k_list.empty()) throw std::invalid_argument("run_eval: empty k list");
  const int max_k = *std::max_element(k_list.begin(), k_list.end());
  if (samples_per_prompt < max_k)
    throw std::invalid_argument("run_eval: samples per prompt below max k");

  EvalResult out;
  for (int k : k_list) out.pass_at_k["pass@" + std::to_string(k)] = 0.0;
  std::int64_t correct_total = 0;
  for (std::size_t p = 0; p < prompts.size(); ++p) {
    const tasks::TaskInstance& task = prompts[p];
    rng::Stream stream(
        rng::derive(seed_root, "eval", static_cast<std::uint64_t>(step), p));
    const policy::Context prompt = tasks::prompt_context(task);
    const int budget = tasks::rollout_budget(task);
    int correct = 0;
    for (int s = 0; s < samples_per_prompt; ++s) {
      const policy::Trajectory traj =
          policy::sample_rollout(pol, prompt, budget, temperature, stream);
      correct += tasks::verify(task, traj.generated);
    }
    correct_total += correct;
    for (int k : k_list)
      out.pass_at_k["pass@" + std::to_string(k)] +=
          pass_at_k(samples_per_prompt, correct, k);
  }
  for (auto& [name, value] : out.pass_at_k)
    value /= static_cast<double>(prompts.size());
  out.mean_reward = static_cast<double>(correct_total) /
                    (static_cast<double>(prompts.size()) *
                     static_cast<double>(samples_per_prompt));
  return out;
}

}  // namespace hdpo::evaluate
