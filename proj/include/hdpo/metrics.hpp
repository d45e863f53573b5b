#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace hdpo::metrics {

inline constexpr int kMetricsSchema = 1;

// One line per training step. Evaluation maps are empty on non-eval steps.
// wall_ms is informational and excluded from determinism comparisons.
struct MetricsRecord {
  int schema = kMetricsSchema;
  std::int64_t step = 0;
  double mean_reward = 0.0;
  double cliff_fraction = 0.0;
  int cliff_count = 0;
  std::int64_t t_size = 0;  // accepted privileged trajectories
  std::int64_t n_tok = 0;   // global token count behind the distillation loss
  double priv_pass_rate = 0.0;
  double loss_grpo = 0.0;
  double loss_jsd = 0.0;
  double grad_norm = 0.0;  // pre-clip global norm
  double lr = 0.0;         // effective (post-warmup) learning rate
  std::map<std::string, double> eval_pass_at_k;  // "pass@1" -> value
  std::map<std::string, double> best_pass_at_k;  // running max across evals
  double wall_ms = 0.0;
};

std::string to_json_line(const MetricsRecord& rec);
MetricsRecord from_json_line(const std::string& line);

// Drops the wall-clock field; equal results mean deterministically equal.
std::string deterministic_key(const MetricsRecord& rec);

void append_metrics(const std::string& path, const MetricsRecord& rec);
// Malformed input throws std::runtime_error prefixed "path:line:".
std::vector<MetricsRecord> read_metrics(const std::string& path);

}  // namespace hdpo::metrics
