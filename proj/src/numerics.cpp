#include "hdpo/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace hdpo::numerics {

namespace {

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw std::invalid_argument(std::string(what) + ": non-finite entry");
  }
}

}  // namespace

double log_sum_exp(std::span<const double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.size() < 2) throw std::invalid_argument("softmax: need at least 2 logits");
  require_finite(logits, "softmax");
  double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double s = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - m);
    s += out[i];
  }
  for (double& x : out) x /= s;
  return out;
}

std::vector<double> softmax_with_temperature(std::span<const double> logits,
                                             double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("softmax: temperature must be > 0");
  std::vector<double> scaled(logits.begin(), logits.end());
  for (double& x : scaled) x /= temperature;
  return softmax(scaled);
}

bool is_prob_vector(std::span<const double> p, double tol) {
  double s = 0.0;
  for (double x : p) {
    if (!(x >= 0.0)) return false;
    s += x;
  }
  return std::abs(s - 1.0) <= tol;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("kl_divergence: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0) return std::numeric_limits<double>::infinity();
    acc += p[i] * std::log(p[i] / q[i]);
  }
  return acc < 0.0 ? 0.0 : acc;
}

double jsd_exact(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("jsd_exact: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0.0) acc += 0.5 * p[i] * std::log(p[i] / m);
    if (q[i] > 0.0) acc += 0.5 * q[i] * std::log(q[i] / m);
  }
  return acc < 0.0 ? 0.0 : acc;
}

TopKDistribution topk_from_logits(std::span<const double> logits, int k) {
  const int n = static_cast<int>(logits.size());
  if (k < 1 || k > n) throw std::invalid_argument("topk_from_logits: k out of range");
  require_finite(logits, "topk_from_logits");

  std::vector<std::int32_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
    if (logits[a] != logits[b]) return logits[a] > logits[b];
    return a < b;
  });
  order.resize(k);

  std::vector<double> full = softmax(logits);
  TopKDistribution out;
  out.support = std::move(order);
  out.probs.resize(k);
  if (k == n) {
    // full support: renormalization is an exact no-op
    for (int i = 0; i < k; ++i) out.probs[i] = full[out.support[i]];
    return out;
  }
  double mass = 0.0;
  for (int i = 0; i < k; ++i) mass += full[out.support[i]];
  for (int i = 0; i < k; ++i) out.probs[i] = full[out.support[i]] / mass;
  return out;
}

namespace {

void check_support(const TopKDistribution& teacher, std::size_t vocab) {
  std::vector<bool> seen(vocab, false);
  for (std::int32_t id : teacher.support) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab)
      throw std::invalid_argument("jsd_topk: support id out of range");
    if (seen[id]) throw std::invalid_argument("jsd_topk: duplicate support id");
    seen[id] = true;
  }
}

}  // namespace

double jsd_topk(const TopKDistribution& teacher,
                std::span<const double> student_full) {
  check_support(teacher, student_full.size());
  std::vector<bool> in_support(student_full.size(), false);
  double acc = 0.0;
  for (std::size_t i = 0; i < teacher.support.size(); ++i) {
    const std::int32_t v = teacher.support[i];
    in_support[v] = true;
    const double t = teacher.probs[i];
    const double q = student_full[v];
    const double m = 0.5 * (t + q);
    if (t > 0.0) acc += 0.5 * t * std::log(t / m);
    if (q > 0.0) acc += 0.5 * q * std::log(q / m);
  }
  double rest = 0.0;  // student mass outside the support, summed directly
  for (std::size_t v = 0; v < student_full.size(); ++v) {
    if (!in_support[v]) rest += student_full[v];
  }
  return acc + rest * kLn2;
}

std::vector<double> jsd_topk_grad_student(const TopKDistribution& teacher,
                                          std::span<const double> student_full) {
  check_support(teacher, student_full.size());
  std::vector<double> grad(student_full.size(), kLn2);  // tail term d/dq = ln 2
  for (std::size_t i = 0; i < teacher.support.size(); ++i) {
    const std::int32_t v = teacher.support[i];
    const double t = teacher.probs[i];
    const double q = student_full[v];
    if (q <= 0.0) {
      grad[v] = 0.0;
      continue;
    }
    const double m = 0.5 * (t + q);
    grad[v] = 0.5 * std::log(q / m);
  }
  for (std::size_t v = 0; v < student_full.size(); ++v) {
    if (student_full[v] <= 0.0) grad[v] = 0.0;
  }
  return grad;
}

KlBoundResult kl_perturbation_bound(std::span<const double> z,
                          std::span<const double> delta) {
  if (z.size() != delta.size()) throw std::invalid_argument("kl_perturbation_bound: size mismatch");
  require_finite(z, "kl_perturbation_bound");
  require_finite(delta, "kl_perturbation_bound");
  std::vector<double> shifted(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) shifted[i] = z[i] + delta[i];
  double kl = kl_divergence(softmax(z), softmax(shifted));
  double inf_norm = 0.0;
  for (double d : delta) inf_norm = std::max(inf_norm, std::abs(d));
  double bound = 0.5 * inf_norm * inf_norm;
  return {kl, bound, kl <= bound + 1e-12};
}

}  // namespace hdpo::numerics
