#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hdpo/policy.hpp"

namespace hdpo::policy {

// Gradient (or Adam moment) storage shaped like a PolicySnapshot's
// parameters. Tabular rows are materialized lazily; a missing key is a zero
// row, mirroring the policy's missing-key-is-uniform convention.
struct GradientAccumulator {
  Backend backend = Backend::tabular;
  std::map<std::vector<std::int32_t>, std::vector<double>> table;
  TinyNetParams net;
};

GradientAccumulator make_grad(const PolicySnapshot& pol);

// acc += s * other. Shapes must be congruent.
void add_scaled(GradientAccumulator& acc, const GradientAccumulator& other, double s);
void scale(GradientAccumulator& acc, double s);
double global_norm(const GradientAccumulator& acc);
double max_abs(const GradientAccumulator& acc);

// Adds scale * (dz^T · dlogits/dparams) for the given context.
void accumulate_logit_grad(const PolicySnapshot& pol, const Context& ctx,
                           std::span<const double> dz, double scale,
                           GradientAccumulator& acc);

// One scalar summand of a loss: evaluated on the logits at `ctx`. When the
// gradient output pointer is non-null the callable must also write
// d(term)/d(logits) into it (resized to match z).
struct LossTerm {
  Context ctx;
  std::function<double(std::span<const double>, std::vector<double>*)> fn;
  std::string label;
};

struct LossSpec {
  std::vector<LossTerm> terms;
};

// weight * (-ln softmax(z)[target])
LossTerm nll_term(Context ctx, std::int32_t target, double weight,
                  std::string label = "nll");

// Sum of term values; no gradient work (usable as a finite-difference oracle).
double eval_loss(const PolicySnapshot& pol, const LossSpec& spec);

// Sum of term values plus the analytic parameter gradient. Throws
// NumericFailure naming the offending term when a value or logit gradient
// entry is non-finite.
struct LossValueAndGrad {
  double value = 0.0;
  GradientAccumulator grad;
};
LossValueAndGrad grad_of_scalar_loss(const PolicySnapshot& pol, const LossSpec& spec);

}  // namespace hdpo::policy
