#pragma once

#include <cstdint>

#include "hdpo/gradients.hpp"
#include "hdpo/policy.hpp"

namespace hdpo::policy {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;  // decoupled
};

struct AdamState {
  std::int64_t step = 0;  // completed updates (bias correction uses step+1)
  GradientAccumulator m;
  GradientAccumulator v;
};

AdamState make_adam_state(const PolicySnapshot& pol);

// In-place global-norm clip; no-op when max_norm <= 0 or the norm is within
// bounds. Returns the pre-clip norm.
double clip_global_norm(GradientAccumulator& grad, double max_norm);

// Global-norm clip followed by one AdamW step (decoupled weight decay).
// Tabular rows touched by the gradient are materialized; existing rows decay
// even with a zero gradient. Returns the pre-clip gradient norm.
double apply_update(PolicySnapshot& pol, GradientAccumulator grad, AdamState& state,
                    double lr, double max_grad_norm, const AdamConfig& cfg = {});

}  // namespace hdpo::policy
