#pragma once

#include <cstdint>
#include <vector>

#include "hdpo/checkpoint.hpp"
#include "hdpo/config.hpp"
#include "hdpo/metrics.hpp"

namespace hdpo::train {

// Linear 0.1x -> 1.0x over warmup_steps, then constant 1.0.
double warmup_factor(std::int64_t step, int warmup_steps);

struct TrainResult {
  checkpoint::Checkpoint final_checkpoint;
  std::vector<metrics::MetricsRecord> metrics;  // also streamed to disk
};

// One GRPO + cliff-distillation update per step, combined into a single
// optimizer application. Writes out_dir/{config.json, validation.jsonl,
// metrics.jsonl, checkpoint.json}; the checkpoint is refreshed at every
// evaluation and at the end. Step 0 emits an initial-evaluation record.
// Numeric failures abort with the step index in the error context.
TrainResult run(const config::ExperimentConfig& cfg);

// Continues from ck.step + 1 under a config whose resume hash matches the
// checkpoint's (total steps and output dir may differ). Appends to the
// existing metrics stream when present and returns only the new records.
TrainResult resume(const config::ExperimentConfig& cfg,
                   const checkpoint::Checkpoint& ck);

}  // namespace hdpo::train
