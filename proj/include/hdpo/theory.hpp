#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "hdpo/policy.hpp"
#include "hdpo/rng.hpp"
#include "hdpo/tasks.hpp"

namespace hdpo::theory {

// Binary reward over a completed trajectory.
using RewardFn = std::function<int(const std::vector<std::int32_t>&)>;

RewardFn task_reward(const tasks::TaskInstance& task);

// Exact reweighting pi*(tau) = pi_ref(tau) exp(R(tau)/beta) / Z(beta) over an
// enumerated completion space. Z is computed by direct summation; the closed
// form (1-p) + p exp(1/beta) is an invariant checked in tests.
struct GibbsPolicy {
  policy::EnumeratedSpace space;  // completions with reference probabilities
  std::vector<int> rewards;
  double beta = 1.0;
  double p = 0.0;  // reference mass of R = 1
  double z = 0.0;
  std::vector<double> probs;
};

// Throws DegenerateConditional when no completion earns reward 1 (the cliff
// case: the conditional target does not exist).
GibbsPolicy build_gibbs(const policy::PolicySnapshot& ref, const RewardFn& reward,
                        const policy::Context& prompt, int max_len, double beta);

struct ConditionalPolicy {
  policy::EnumeratedSpace space;
  std::vector<int> rewards;
  double p = 0.0;
  std::vector<double> probs;  // pi_ref(tau) 1[R=1] / p
};

ConditionalPolicy conditional_policy(const policy::PolicySnapshot& ref,
                                     const RewardFn& reward,
                                     const policy::Context& prompt, int max_len);

// Total-variation distance between two distributions over the same
// enumerated space: half the L1 difference.
double tv_distance(const std::vector<double>& a, const std::vector<double>& b);

// TV(Gibbs(beta), conditional) for each beta in the given descending list.
std::vector<double> hard_threshold_limit_check(const policy::PolicySnapshot& ref,
                                               const RewardFn& reward,
                                               const policy::Context& prompt,
                                               int max_len,
                                               const std::vector<double>& betas);

struct RejectionCheck {
  double tv = 1.0;
  double acceptance_rate = 0.0;
  std::size_t accepted = 0;
  std::size_t samples = 0;
  bool conclusive = false;  // false when nothing was accepted
};

// Samples from ref, keeps reward-1 trajectories, and compares the empirical
// accepted distribution against the exact conditional.
RejectionCheck rejection_sampling_check(const policy::PolicySnapshot& ref,
                                        const RewardFn& reward,
                                        const policy::Context& prompt, int max_len,
                                        std::size_t n_samples, rng::Stream& rng);

struct GapRecord {
  double same_model_gap = 0.0;   // ||f_theta(c_T) - f_theta(c_S)||_inf
  double same_model_kl = 0.0;    // KL(softmax(z_T) || softmax(z_S)) under theta
  double cross_mismatch = 0.0;   // ||f_phi(c_T) - f_theta(c_T)||_inf
  double cross_total = 0.0;      // ||f_phi(c_T) - f_theta(c_S)||_inf
  bool triangle_holds = false;   // cross_total <= cross_mismatch + same_model_gap
  bool kl_bound_holds = false;     // same_model_kl <= same_model_gap^2 / 2 + 1e-12
};

struct GapReport {
  std::vector<GapRecord> positions;
  int privileged_block_tokens = 0;  // context-length proxy for the block size
  bool all_triangle_hold = true;
  bool all_kl_bound_hold = true;
};

// Per-position logit gaps along a privileged trajectory. c_T keeps the
// privileged block, c_S strips it; phi = nullptr compares theta with itself
// (the drifting-teacher case, zero mismatch by construction).
GapReport measure_realizability_gap(const policy::PolicySnapshot& theta,
                                    const policy::PolicySnapshot* phi,
                                    const tasks::TaskInstance& task,
                                    const policy::Trajectory& teacher_traj);

struct KlBoundAuditResult {
  std::size_t trials = 0;
  std::size_t violations = 0;
  double max_ratio = 0.0;  // max kl/bound over trials with a positive bound
};

KlBoundAuditResult kl_bound_audit(std::size_t trials, rng::Stream& rng);

struct CheckResult {
  std::string name;
  bool pass = false;
  std::map<std::string, double> quantities;
};

// The full randomized/exact battery behind the verify-theory command.
std::vector<CheckResult> standard_checks(std::uint64_t seed);

}  // namespace hdpo::theory
