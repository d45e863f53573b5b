#include "hdpo/gradients.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>

#include "hdpo/errors.hpp"
#include "hdpo/numerics.hpp"

namespace hdpo::policy {

namespace {

void check_net_congruent(const TinyNetParams& a, const TinyNetParams& b,
                         const char* where) {
  if (a.embed.size() != b.embed.size() || a.w1.size() != b.w1.size() ||
      a.b1.size() != b.b1.size() || a.w2.size() != b.w2.size() ||
      a.b2.size() != b.b2.size())
    throw std::invalid_argument(std::string(where) + ": shape mismatch");
}

template <typename Fn>
void for_each_net_array(TinyNetParams& net, Fn fn) {
  fn(net.embed);
  fn(net.w1);
  fn(net.b1);
  fn(net.w2);
  fn(net.b2);
}

template <typename Fn>
void for_each_net_array(const TinyNetParams& net, Fn fn) {
  fn(net.embed);
  fn(net.w1);
  fn(net.b1);
  fn(net.w2);
  fn(net.b2);
}

}  // namespace

GradientAccumulator make_grad(const PolicySnapshot& pol) {
  GradientAccumulator acc;
  acc.backend = pol.cfg.backend;
  if (pol.cfg.backend == Backend::tiny_net) {
    acc.net.embed.assign(pol.net.embed.size(), 0.0);
    acc.net.w1.assign(pol.net.w1.size(), 0.0);
    acc.net.b1.assign(pol.net.b1.size(), 0.0);
    acc.net.w2.assign(pol.net.w2.size(), 0.0);
    acc.net.b2.assign(pol.net.b2.size(), 0.0);
  }
  return acc;
}

void add_scaled(GradientAccumulator& acc, const GradientAccumulator& other, double s) {
  if (acc.backend != other.backend)
    throw std::invalid_argument("add_scaled: backend mismatch");
  if (acc.backend == Backend::tabular) {
    for (const auto& [key, row] : other.table) {
      auto& dst = acc.table[key];
      if (dst.empty()) dst.assign(row.size(), 0.0);
      if (dst.size() != row.size())
        throw std::invalid_argument("add_scaled: row size mismatch");
      for (std::size_t i = 0; i < row.size(); ++i) dst[i] += s * row[i];
    }
    return;
  }
  check_net_congruent(acc.net, other.net, "add_scaled");
  auto axpy = [s](std::vector<double>& dst, const std::vector<double>& src) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += s * src[i];
  };
  axpy(acc.net.embed, other.net.embed);
  axpy(acc.net.w1, other.net.w1);
  axpy(acc.net.b1, other.net.b1);
  axpy(acc.net.w2, other.net.w2);
  axpy(acc.net.b2, other.net.b2);
}

void scale(GradientAccumulator& acc, double s) {
  if (acc.backend == Backend::tabular) {
    for (auto& [key, row] : acc.table)
      for (double& x : row) x *= s;
    return;
  }
  for_each_net_array(acc.net, [s](std::vector<double>& a) {
    for (double& x : a) x *= s;
  });
}

double global_norm(const GradientAccumulator& acc) {
  double sq = 0.0;
  if (acc.backend == Backend::tabular) {
    for (const auto& [key, row] : acc.table)
      for (double x : row) sq += x * x;
  } else {
    for_each_net_array(acc.net, [&sq](const std::vector<double>& a) {
      for (double x : a) sq += x * x;
    });
  }
  return std::sqrt(sq);
}

double max_abs(const GradientAccumulator& acc) {
  double m = 0.0;
  auto upd = [&m](double x) {
    const double a = std::fabs(x);
    if (a > m) m = a;
  };
  if (acc.backend == Backend::tabular) {
    for (const auto& [key, row] : acc.table)
      for (double x : row) upd(x);
  } else {
    for_each_net_array(acc.net, [&](const std::vector<double>& a) {
      for (double x : a) upd(x);
    });
  }
  return m;
}

void accumulate_logit_grad(const PolicySnapshot& pol, const Context& ctx,
                           std::span<const double> dz, double s,
                           GradientAccumulator& acc) {
  if (acc.backend != pol.cfg.backend)
    throw std::invalid_argument("accumulate_logit_grad: backend mismatch");
  if (static_cast<int>(dz.size()) != pol.cfg.vocab_size)
    throw std::invalid_argument("accumulate_logit_grad: dz size mismatch");
  if (pol.cfg.backend == Backend::tabular) {
    // logits of the keyed row are the parameters themselves
    auto& row = acc.table[table_key(pol, ctx)];
    if (row.empty()) row.assign(dz.size(), 0.0);
    for (std::size_t v = 0; v < dz.size(); ++v) row[v] += s * dz[v];
    return;
  }
  check_net_congruent(acc.net, pol.net, "accumulate_logit_grad");

  const int m = pol.cfg.window;
  const int d = pol.cfg.embed_dim;
  const int nh = pol.cfg.hidden_dim;
  const int nv = pol.cfg.vocab_size;
  const std::int32_t pad_row = pol.cfg.vocab_size;
  const std::vector<std::int32_t> seq = ctx.flat();

  // forward pass, retaining x and h for the backward sweep
  std::vector<std::int32_t> rows(static_cast<std::size_t>(m));
  std::vector<double> x(static_cast<std::size_t>(m) * static_cast<std::size_t>(d));
  for (int slot = 0; slot < m; ++slot) {
    const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(seq.size()) - (m - slot);
    const std::int32_t row = pos >= 0 ? seq[static_cast<std::size_t>(pos)] : pad_row;
    rows[static_cast<std::size_t>(slot)] = row;
    const double* e = &pol.net.embed[static_cast<std::size_t>(row) * d];
    std::copy(e, e + d, x.begin() + static_cast<std::ptrdiff_t>(slot) * d);
  }
  const std::size_t in_dim = x.size();
  std::vector<double> h(static_cast<std::size_t>(nh));
  for (int i = 0; i < nh; ++i) {
    double a = pol.net.b1[static_cast<std::size_t>(i)];
    const double* w = &pol.net.w1[static_cast<std::size_t>(i) * in_dim];
    for (std::size_t j = 0; j < in_dim; ++j) a += w[j] * x[j];
    h[static_cast<std::size_t>(i)] = std::tanh(a);
  }

  // z = W2 h + b2
  for (int v = 0; v < nv; ++v) {
    const double g = s * dz[static_cast<std::size_t>(v)];
    if (g == 0.0) continue;
    acc.net.b2[static_cast<std::size_t>(v)] += g;
    double* wrow = &acc.net.w2[static_cast<std::size_t>(v) * nh];
    for (int i = 0; i < nh; ++i) wrow[i] += g * h[static_cast<std::size_t>(i)];
  }
  std::vector<double> dh(static_cast<std::size_t>(nh), 0.0);
  for (int v = 0; v < nv; ++v) {
    const double g = s * dz[static_cast<std::size_t>(v)];
    if (g == 0.0) continue;
    const double* wrow = &pol.net.w2[static_cast<std::size_t>(v) * nh];
    for (int i = 0; i < nh; ++i) dh[static_cast<std::size_t>(i)] += g * wrow[i];
  }

  // h = tanh(a1), a1 = W1 x + b1
  std::vector<double> dx(in_dim, 0.0);
  for (int i = 0; i < nh; ++i) {
    const double hi = h[static_cast<std::size_t>(i)];
    const double da = dh[static_cast<std::size_t>(i)] * (1.0 - hi * hi);
    if (da == 0.0) continue;
    acc.net.b1[static_cast<std::size_t>(i)] += da;
    double* wrow = &acc.net.w1[static_cast<std::size_t>(i) * in_dim];
    const double* prow = &pol.net.w1[static_cast<std::size_t>(i) * in_dim];
    for (std::size_t j = 0; j < in_dim; ++j) {
      wrow[j] += da * x[j];
      dx[j] += da * prow[j];
    }
  }

  // x is the concatenation of embedding rows (shared rows accumulate)
  for (int slot = 0; slot < m; ++slot) {
    double* erow = &acc.net.embed[static_cast<std::size_t>(rows[static_cast<std::size_t>(slot)]) * d];
    const double* dslot = &dx[static_cast<std::size_t>(slot) * d];
    for (int j = 0; j < d; ++j) erow[j] += dslot[j];
  }
}

LossTerm nll_term(Context ctx, std::int32_t target, double weight, std::string label) {
  return LossTerm{
      std::move(ctx),
      [target, weight](std::span<const double> z, std::vector<double>* dz) {
        const double lse = numerics::log_sum_exp(z);
        const double value = -weight * (z[static_cast<std::size_t>(target)] - lse);
        if (dz != nullptr) {
          const std::vector<double> p = numerics::softmax(z);
          dz->assign(z.size(), 0.0);
          for (std::size_t v = 0; v < z.size(); ++v) (*dz)[v] = weight * p[v];
          (*dz)[static_cast<std::size_t>(target)] -= weight;
        }
        return value;
      },
      std::move(label)};
}

double eval_loss(const PolicySnapshot& pol, const LossSpec& spec) {
  double total = 0.0;
  for (const LossTerm& term : spec.terms) {
    const std::vector<double> z = logits(pol, term.ctx);
    total += term.fn(z, nullptr);
  }
  return total;
}

LossValueAndGrad grad_of_scalar_loss(const PolicySnapshot& pol, const LossSpec& spec) {
  LossValueAndGrad out;
  out.grad = make_grad(pol);
  std::vector<double> dz;
  for (const LossTerm& term : spec.terms) {
    const std::vector<double> z = logits(pol, term.ctx);
    const double value = term.fn(z, &dz);
    if (!std::isfinite(value))
      throw NumericFailure("loss term value", term.label);
    if (dz.size() != z.size())
      throw std::invalid_argument("grad_of_scalar_loss: dz size mismatch in " +
                                  term.label);
    for (double g : dz)
      if (!std::isfinite(g)) throw NumericFailure("loss term gradient", term.label);
    accumulate_logit_grad(pol, term.ctx, dz, 1.0, out.grad);
    out.value += value;
  }
  return out;
}

}  // namespace hdpo::policy
