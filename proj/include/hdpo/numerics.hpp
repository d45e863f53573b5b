#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace hdpo::numerics {

inline constexpr double kLn2 = 0.69314718055994530941723212145818;

// log(sum_i exp(v_i)) with max subtraction
double log_sum_exp(std::span<const double> v);

// Probability vector from logits, max-subtracted. Throws std::invalid_argument
// on non-finite input or size < 2. Argmax is preserved.
std::vector<double> softmax(std::span<const double> logits);
std::vector<double> softmax_with_temperature(std::span<const double> logits,
                                             double temperature);

bool is_prob_vector(std::span<const double> p, double tol = 1e-9);

// sum_{p(v)>0} p(v) ln(p(v)/q(v)), in nats. Terms with p(v)=0 contribute 0.
// p(v)>0 with q(v)=0 yields +infinity (a distinguished value, so callers can
// filter rather than catch).
double kl_divergence(std::span<const double> p, std::span<const double> q);

// 0.5*KL(p||m) + 0.5*KL(q||m) with m = (p+q)/2. Symmetric, in [0, ln 2].
double jsd_exact(std::span<const double> p, std::span<const double> q);

// A teacher distribution truncated to its top-k tokens and renormalized over
// that support. `support` holds distinct token ids ordered by descending
// teacher logit (ties to the lower id); `probs[i]` is the renormalized mass
// of `support[i]`.
struct TopKDistribution {
  std::vector<std::int32_t> support;
  std::vector<double> probs;
  int k() const { return static_cast<int>(support.size()); }
};

// Builds the top-k truncation of softmax(logits). Renormalization happens
// here and nowhere else; when k equals the vocabulary size it is an exact
// no-op (probabilities are the full softmax, untouched).
TopKDistribution topk_from_logits(std::span<const double> logits, int k);

// Truncated JSD against a full student distribution: the JSD sum restricted
// to the teacher support (teacher mass off-support is zero by construction)
// plus the exact tail term P_rest * ln 2, where P_rest is the student mass
// outside the support, summed directly.
double jsd_topk(const TopKDistribution& teacher,
                std::span<const double> student_full);

// d jsd_topk / d student probability, componentwise over the full vocabulary.
// Entries where the student mass is exactly zero are set to zero (their
// contribution through the softmax chain rule vanishes).
std::vector<double> jsd_topk_grad_student(const TopKDistribution& teacher,
                                          std::span<const double> student_full);

struct KlBoundResult {
  double kl;
  double bound;  // max_v |delta_v|^2 / 2
  bool holds;    // kl <= bound + 1e-12
};

// KL(softmax(z) || softmax(z + delta)) against the logit-perturbation bound.
KlBoundResult kl_perturbation_bound(std::span<const double> z,
                          std::span<const double> delta);

// brace-literal conveniences
namespace detail {
inline std::span<const double> as_span(std::initializer_list<double> v) {
  return {v.begin(), v.size()};
}
}  // namespace detail

inline double log_sum_exp(std::initializer_list<double> v) {
  return log_sum_exp(detail::as_span(v));
}
inline std::vector<double> softmax(std::initializer_list<double> z) {
  return softmax(detail::as_span(z));
}
inline std::vector<double> softmax_with_temperature(std::initializer_list<double> z,
                                                    double temperature) {
  return softmax_with_temperature(detail::as_span(z), temperature);
}
inline bool is_prob_vector(std::initializer_list<double> p, double tol = 1e-9) {
  return is_prob_vector(detail::as_span(p), tol);
}
inline double kl_divergence(std::initializer_list<double> p,
                            std::initializer_list<double> q) {
  return kl_divergence(detail::as_span(p), detail::as_span(q));
}
inline double jsd_exact(std::initializer_list<double> p,
                        std::initializer_list<double> q) {
  return jsd_exact(detail::as_span(p), detail::as_span(q));
}
inline TopKDistribution topk_from_logits(std::initializer_list<double> z, int k) {
  return topk_from_logits(detail::as_span(z), k);
}
inline double jsd_topk(const TopKDistribution& teacher,
                       std::initializer_list<double> student_full) {
  return jsd_topk(teacher, detail::as_span(student_full));
}
inline KlBoundResult kl_perturbation_bound(std::initializer_list<double> z,
                                 std::initializer_list<double> delta) {
  return kl_perturbation_bound(detail::as_span(z), detail::as_span(delta));
}

}  // namespace hdpo::numerics
