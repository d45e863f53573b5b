#include "hdpo/policy.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

#include "hdpo/numerics.hpp"

namespace hdpo::policy {

std::vector<std::int32_t> Context::flat() const {
  std::vector<std::int32_t> out;
  out.reserve(size());
  out.insert(out.end(), prompt.begin(), prompt.end());
  out.insert(out.end(), privileged.begin(), privileged.end());
  out.insert(out.end(), generated.begin(), generated.end());
  return out;
}

Context Context::with_generated(std::span<const std::int32_t> prefix) const {
  Context out{prompt, privileged, {}};
  out.generated.assign(prefix.begin(), prefix.end());
  return out;
}

Context make_prompt(std::vector<std::int32_t> tokens) {
  return Context{std::move(tokens), {}, {}};
}

PolicySnapshot make_tabular(int vocab_size, int window, std::int32_t eos_id) {
  if (vocab_size < 2) throw std::invalid_argument("make_tabular: vocab_size < 2");
  if (window < 1) throw std::invalid_argument("make_tabular: window < 1");
  PolicySnapshot pol;
  pol.cfg.vocab_size = vocab_size;
  pol.cfg.window = window;
  pol.cfg.backend = Backend::tabular;
  pol.cfg.eos_id = eos_id;
  return pol;
}

PolicySnapshot make_tiny_net(const PolicyConfig& cfg, rng::Stream& init_rng) {
  if (cfg.vocab_size < 2) throw std::invalid_argument("make_tiny_net: vocab_size < 2");
  if (cfg.window < 1 || cfg.embed_dim < 1 || cfg.hidden_dim < 1)
    throw std::invalid_argument("make_tiny_net: non-positive dimension");
  PolicySnapshot pol;
  pol.cfg = cfg;
  pol.cfg.backend = Backend::tiny_net;
  const std::size_t rows = static_cast<std::size_t>(cfg.vocab_size) + 1;
  const std::size_t in_dim =
      static_cast<std::size_t>(cfg.window) * static_cast<std::size_t>(cfg.embed_dim);
  TinyNetParams& net = pol.net;
  net.embed.resize(rows * static_cast<std::size_t>(cfg.embed_dim));
  net.w1.resize(static_cast<std::size_t>(cfg.hidden_dim) * in_dim);
  net.b1.assign(static_cast<std::size_t>(cfg.hidden_dim), 0.0);
  net.w2.resize(static_cast<std::size_t>(cfg.vocab_size) *
                static_cast<std::size_t>(cfg.hidden_dim));
  net.b2.assign(static_cast<std::size_t>(cfg.vocab_size), 0.0);
  for (double& w : net.embed) w = 0.1 * init_rng.next_gaussian();
  const double s1 = 1.0 / std::sqrt(static_cast<double>(in_dim));
  for (double& w : net.w1) w = s1 * init_rng.next_gaussian();
  // small output scale keeps the initial policy near uniform
  const double s2 = 0.1 / std::sqrt(static_cast<double>(cfg.hidden_dim));
  for (double& w : net.w2) w = s2 * init_rng.next_gaussian();
  return pol;
}

std::vector<std::int32_t> table_key(const PolicySnapshot& pol, const Context& ctx) {
  std::vector<std::int32_t> seq = ctx.flat();
  const std::size_t m = static_cast<std::size_t>(pol.cfg.window);
  if (seq.size() <= m) return seq;
  return std::vector<std::int32_t>(seq.end() - static_cast<std::ptrdiff_t>(m), seq.end());
}

namespace {

void check_tokens(const PolicySnapshot& pol, const std::vector<std::int32_t>& seq) {
  for (std::int32_t t : seq) {
    if (t < 0 || t >= pol.cfg.vocab_size)
      throw std::invalid_argument("logits: token " + std::to_string(t) +
                                  " outside vocabulary");
  }
}

std::vector<double> tiny_net_hidden_input(const PolicySnapshot& pol,
                                          const std::vector<std::int32_t>& seq) {
  const int m = pol.cfg.window;
  const int d = pol.cfg.embed_dim;
  const std::int32_t pad_row = pol.cfg.vocab_size;
  std::vector<double> x(static_cast<std::size_t>(m) * static_cast<std::size_t>(d));
  for (int slot = 0; slot < m; ++slot) {
    // slot m-1 holds the most recent token; earlier slots pad when absent
    const std::ptrdiff_t pos =
        static_cast<std::ptrdiff_t>(seq.size()) - (m - slot);
    const std::int32_t row = pos >= 0 ? seq[static_cast<std::size_t>(pos)] : pad_row;
    const double* e = &pol.net.embed[static_cast<std::size_t>(row) * d];
    std::copy(e, e + d, x.begin() + static_cast<std::ptrdiff_t>(slot) * d);
  }
  return x;
}

}  // namespace

std::vector<double> logits(const PolicySnapshot& pol, const Context& ctx) {
  if (ctx.size() == 0) throw std::invalid_argument("logits: empty context");
  if (pol.cfg.backend == Backend::tabular) {
    std::vector<std::int32_t> key = table_key(pol, ctx);
    check_tokens(pol, key);
    auto it = pol.table.find(key);
    if (it == pol.table.end())
      return std::vector<double>(static_cast<std::size_t>(pol.cfg.vocab_size), 0.0);
    return it->second;
  }
  std::vector<std::int32_t> seq = ctx.flat();
  check_tokens(pol, seq);
  const int nh = pol.cfg.hidden_dim;
  const int nv = pol.cfg.vocab_size;
  const std::vector<double> x = tiny_net_hidden_input(pol, seq);
  const std::size_t in_dim = x.size();
  std::vector<double> h(static_cast<std::size_t>(nh));
  for (int i = 0; i < nh; ++i) {
    double a = pol.net.b1[static_cast<std::size_t>(i)];
    const double* w = &pol.net.w1[static_cast<std::size_t>(i) * in_dim];
    for (std::size_t j = 0; j < in_dim; ++j) a += w[j] * x[j];
    h[static_cast<std::size_t>(i)] = std::tanh(a);
  }
  std::vector<double> z(static_cast<std::size_t>(nv));
  for (int v = 0; v < nv; ++v) {
    double a = pol.net.b2[static_cast<std::size_t>(v)];
    const double* w = &pol.net.w2[static_cast<std::size_t>(v) * nh];
    for (int i = 0; i < nh; ++i) a += w[i] * h[static_cast<std::size_t>(i)];
    z[static_cast<std::size_t>(v)] = a;
  }
  return z;
}

Trajectory sample_rollout(const PolicySnapshot& pol, const Context& prompt,
                          int max_len, double temperature, rng::Stream& rng) {
  if (max_len <= 0) throw std::invalid_argument("sample_rollout: max_len <= 0");
  if (!(temperature > 0.0))
    throw std::invalid_argument("sample_rollout: temperature must be positive");
  Trajectory traj;
  traj.start = prompt;
  traj.sampling_temperature = temperature;
  Context ctx = prompt;
  for (int t = 0; t < max_len; ++t) {
    const std::vector<double> z = logits(pol, ctx);
    const double lse = numerics::log_sum_exp(z);
    std::vector<double> samp = temperature == 1.0
                                   ? numerics::softmax(z)
                                   : numerics::softmax_with_temperature(z, temperature);
    const std::int32_t tok = static_cast<std::int32_t>(rng.next_weighted(samp));
    traj.generated.push_back(tok);
    traj.logprobs.push_back(z[static_cast<std::size_t>(tok)] - lse);
    ctx.generated.push_back(tok);
    if (pol.cfg.eos_id >= 0 && tok == pol.cfg.eos_id) return traj;
  }
  traj.truncated = true;
  return traj;
}

double trajectory_logprob(const PolicySnapshot& pol, const Trajectory& traj) {
  Context ctx = traj.start;
  double total = 0.0;
  for (std::int32_t tok : traj.generated) {
    const std::vector<double> z = logits(pol, ctx);
    total += z[static_cast<std::size_t>(tok)] - numerics::log_sum_exp(z);
    ctx.generated.push_back(tok);
  }
  return total;
}

namespace {

void enumerate_rec(const PolicySnapshot& pol, Context& ctx, double prob,
                   int remaining, EnumeratedSpace& out) {
  if (remaining == 0) {
    out.completions.push_back(ctx.generated);
    out.probs.push_back(prob);
    return;
  }
  const std::vector<double> z = logits(pol, ctx);
  const std::vector<double> p = numerics::softmax(z);
  for (std::int32_t v = 0; v < pol.cfg.vocab_size; ++v) {
    ctx.generated.push_back(v);
    const double pv = prob * p[static_cast<std::size_t>(v)];
    if (pol.cfg.eos_id >= 0 && v == pol.cfg.eos_id) {
      out.completions.push_back(ctx.generated);
      out.probs.push_back(pv);
    } else {
      enumerate_rec(pol, ctx, pv, remaining - 1, out);
    }
    ctx.generated.pop_back();
  }
}

}  // namespace

EnumeratedSpace enumerate_completions(const PolicySnapshot& pol,
                                      const Context& prompt, int max_len) {
  if (max_len <= 0) throw std::invalid_argument("enumerate_completions: max_len <= 0");
  const double leaves =
      std::pow(static_cast<double>(pol.cfg.vocab_size), static_cast<double>(max_len));
  if (leaves > 1e6)
    throw std::invalid_argument("enumerate_completions: |V|^L exceeds 1e6");
  EnumeratedSpace out;
  Context ctx = prompt;
  enumerate_rec(pol, ctx, 1.0, max_len, out);
  return out;
}

}  // namespace hdpo::policy
