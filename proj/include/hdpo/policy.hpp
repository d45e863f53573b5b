#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "hdpo/rng.hpp"

namespace hdpo::policy {

enum class Backend { tabular, tiny_net };

struct PolicyConfig {
  int vocab_size = 20;
  int window = 8;  // tokens of context consumed per prediction
  Backend backend = Backend::tiny_net;
  int embed_dim = 16;
  int hidden_dim = 64;
  std::int32_t eos_id = -1;  // < 0 disables end-of-sequence termination
};

// Conditioning sequence split into role segments. The privileged block (when
// present, including its delimiting markers) sits between prompt and
// generation; the student view of the same context simply drops it.
struct Context {
  std::vector<std::int32_t> prompt;
  std::vector<std::int32_t> privileged;
  std::vector<std::int32_t> generated;

  std::size_t size() const {
    return prompt.size() + privileged.size() + generated.size();
  }
  std::vector<std::int32_t> flat() const;
  Context student_view() const { return Context{prompt, {}, generated}; }
  Context with_generated(std::span<const std::int32_t> prefix) const;
};

Context make_prompt(std::vector<std::int32_t> tokens);

// Tiny MLP: per-token embeddings, the last `window` embeddings concatenated,
// one tanh hidden layer, linear projection to vocabulary logits. The embed
// table carries one extra row (index vocab_size) for positions before the
// sequence start.
struct TinyNetParams {
  std::vector<double> embed;  // (vocab_size + 1) x embed_dim, row-major
  std::vector<double> w1;     // hidden_dim x (window * embed_dim)
  std::vector<double> b1;     // hidden_dim
  std::vector<double> w2;     // vocab_size x hidden_dim
  std::vector<double> b2;     // vocab_size
};

struct PolicySnapshot {
  PolicyConfig cfg;
  // tabular backend: logit rows keyed by the last `window` context tokens;
  // a missing key behaves as a zero (uniform) row
  std::map<std::vector<std::int32_t>, std::vector<double>> table;
  // tiny-net backend
  TinyNetParams net;
};

PolicySnapshot make_tabular(int vocab_size, int window, std::int32_t eos_id = -1);
PolicySnapshot make_tiny_net(const PolicyConfig& cfg, rng::Stream& init_rng);

// Context key used by the tabular backend (the last `window` tokens).
std::vector<std::int32_t> table_key(const PolicySnapshot& pol, const Context& ctx);

// Deterministic logits for the next token. Throws on an empty context.
std::vector<double> logits(const PolicySnapshot& pol, const Context& ctx);

struct Trajectory {
  Context start;  // conditioning context at generation time
  std::vector<std::int32_t> generated;  // includes the eos token when emitted
  std::vector<double> logprobs;  // temperature-1 log-probs of each generated token
  double sampling_temperature = 1.0;
  int reward = 0;
  bool truncated = false;
};

// Autoregressive sampling from softmax(logits / temperature) until eos or
// max_len. Recorded log-probs are those of the temperature-1 distribution
// (the training distribution); the sampling temperature is stored alongside.
Trajectory sample_rollout(const PolicySnapshot& pol, const Context& prompt,
                          int max_len, double temperature, rng::Stream& rng);

// sum_t ln pi(y_t | start + y_<t) under `pol`, recomputed from logits.
double trajectory_logprob(const PolicySnapshot& pol, const Trajectory& traj);

// Exhaustive enumeration of the completion space from `prompt` up to length
// max_len, eos absorbing. Probabilities sum to 1. Guarded to <= 10^6 leaves.
struct EnumeratedSpace {
  std::vector<std::vector<std::int32_t>> completions;
  std::vector<double> probs;
};
EnumeratedSpace enumerate_completions(const PolicySnapshot& pol,
                                      const Context& prompt, int max_len);

}  // namespace hdpo::policy
