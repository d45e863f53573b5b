#include "hdpo/optimizer.hpp"

#include <cmath>
#include <cstddef>
#include <set>
#include <stdexcept>

namespace hdpo::policy {

AdamState make_adam_state(const PolicySnapshot& pol) {
  AdamState st;
  st.m = make_grad(pol);
  st.v = make_grad(pol);
  return st;
}

double clip_global_norm(GradientAccumulator& grad, double max_norm) {
  const double norm = global_norm(grad);
  if (max_norm > 0.0 && norm > max_norm) scale(grad, max_norm / norm);
  return norm;
}

namespace {

void adam_step_array(std::vector<double>& param, const std::vector<double>& g,
                     std::vector<double>& m, std::vector<double>& v, double lr,
                     const AdamConfig& cfg, double bc1, double bc2) {
  for (std::size_t i = 0; i < param.size(); ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    param[i] -= lr * (mhat / (std::sqrt(vhat) + cfg.eps) + cfg.weight_decay * param[i]);
  }
}

}  // namespace

double apply_update(PolicySnapshot& pol, GradientAccumulator grad, AdamState& state,
                    double lr, double max_grad_norm, const AdamConfig& cfg) {
  if (grad.backend != pol.cfg.backend || state.m.backend != pol.cfg.backend ||
      state.v.backend != pol.cfg.backend)
    throw std::invalid_argument("apply_update: backend mismatch");
  const double pre_clip = clip_global_norm(grad, max_grad_norm);
  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));

  if (pol.cfg.backend == Backend::tiny_net) {
    if (grad.net.embed.size() != pol.net.embed.size() ||
        grad.net.w1.size() != pol.net.w1.size() ||
        grad.net.b1.size() != pol.net.b1.size() ||
        grad.net.w2.size() != pol.net.w2.size() ||
        grad.net.b2.size() != pol.net.b2.size())
      throw std::invalid_argument("apply_update: gradient shape mismatch");
    adam_step_array(pol.net.embed, grad.net.embed, state.m.net.embed,
                    state.v.net.embed, lr, cfg, bc1, bc2);
    adam_step_array(pol.net.w1, grad.net.w1, state.m.net.w1, state.v.net.w1, lr, cfg,
                    bc1, bc2);
    adam_step_array(pol.net.b1, grad.net.b1, state.m.net.b1, state.v.net.b1, lr, cfg,
                    bc1, bc2);
    adam_step_array(pol.net.w2, grad.net.w2, state.m.net.w2, state.v.net.w2, lr, cfg,
                    bc1, bc2);
    adam_step_array(pol.net.b2, grad.net.b2, state.m.net.b2, state.v.net.b2, lr, cfg,
                    bc1, bc2);
    return pre_clip;
  }

  const std::size_t width = static_cast<std::size_t>(pol.cfg.vocab_size);
  std::set<std::vector<std::int32_t>> keys;
  for (const auto& [k, row] : pol.table) keys.insert(k);
  for (const auto& [k, row] : grad.table) {
    if (row.size() != width)
      throw std::invalid_argument("apply_update: gradient row width mismatch");
    keys.insert(k);
  }
  for (const auto& [k, row] : state.m.table) keys.insert(k);
  const std::vector<double> zeros(width, 0.0);
  for (const auto& key : keys) {
    auto& param = pol.table[key];
    if (param.empty()) param.assign(width, 0.0);
    auto& m = state.m.table[key];
    if (m.empty()) m.assign(width, 0.0);
    auto& v = state.v.table[key];
    if (v.empty()) v.assign(width, 0.0);
    const auto git = grad.table.find(key);
    const std::vector<double>& g = git == grad.table.end() ? zeros : git->second;
    adam_step_array(param, g, m, v, lr, cfg, bc1, bc2);
  }
  return pre_clip;
}

}  // namespace hdpo::policy
