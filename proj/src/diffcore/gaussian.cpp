#include "vdfd/diffcore/gaussian.hpp"

#include <cmath>
#include <memory>

#include "vdfd/common.hpp"

namespace vdfd::diff {

namespace {

Tensor make_op_local(const char* op, Shape shape, std::vector<double> value, std::vector<Tensor> parents,
                     BackwardFn fn) {
  if (finite_checks_enabled()) {
    for (double x : value)
      if (!std::isfinite(x)) fail(cat(op, ": non-finite value in output"));
  }
  auto n = std::make_shared<Node>();
  n->id = next_node_id();
  n->shape = std::move(shape);
  n->value = std::move(value);
  bool needed = false;
  for (const auto& p : parents)
    if (p.grad_needed()) needed = true;
  n->grad_needed = needed;
  if (needed) {
    for (auto& p : parents) n->parents.push_back(p.node());
    n->backward = std::move(fn);
  }
  return Tensor::from_node(std::move(n));
}

void check_same_shape(const GaussianParams& g, const char* who) {
  check(g.mean.defined() && g.log_var.defined(), cat(who, ": undefined Gaussian parameters"));
  check(g.mean.shape() == g.log_var.shape(),
        cat(who, ": mean shape ", shape_str(g.mean.shape()), " != log_var shape ", shape_str(g.log_var.shape())));
}

// Shared kernel: per-element KL, optionally reduced per row.
Tensor kl_impl(const GaussianParams& q, const GaussianParams& p, bool rowwise) {
  check_same_shape(q, "gaussian_kl(q)");
  check_same_shape(p, "gaussian_kl(p)");
  check(q.mean.shape() == p.mean.shape(), cat("gaussian_kl: q shape ", shape_str(q.mean.shape()),
                                              " != p shape ", shape_str(p.mean.shape())));
  const auto& mq = q.mean.data();
  const auto& lq = q.log_var.data();
  const auto& mp = p.mean.data();
  const auto& lp = p.log_var.data();
  const size_t n = mq.size();

  int rows = 1, cols = static_cast<int>(n);
  if (rowwise) {
    check(q.mean.rank() == 2, "gaussian_kl_rowwise: expected rank-2 parameters");
    rows = q.mean.dim(0);
    cols = q.mean.dim(1);
  }

  std::vector<double> out(rows, 0.0);
  // cache layout: [e^{lq-lp} | dm*e^{-lp} | dm^2*e^{-lp}]
  auto cache = std::make_shared<std::vector<double>>(3 * n);
  for (size_t i = 0; i < n; ++i) {
    const double dm = mq[i] - mp[i];
    const double e_qp = std::exp(lq[i] - lp[i]);
    const double dm_ep = dm * std::exp(-lp[i]);
    const double dmsq_ep = dm * dm_ep;
    (*cache)[i] = e_qp;
    (*cache)[n + i] = dm_ep;
    (*cache)[2 * n + i] = dmsq_ep;
    const double term = 0.5 * (lp[i] - lq[i] + e_qp + dmsq_ep - 1.0);
    out[static_cast<size_t>(i) / cols] += term;
  }

  Shape shape = rowwise ? Shape{rows, 1} : Shape{1};
  return make_op_local(
      rowwise ? "gaussian_kl_rowwise" : "gaussian_kl", std::move(shape), std::move(out),
      {q.mean, q.log_var, p.mean, p.log_var},
      [cache, n, cols](const std::vector<double>& g, const std::vector<std::vector<double>*>& pg) {
        for (size_t i = 0; i < n; ++i) {
          const double gi = g[i / cols];
          const double e_qp = (*cache)[i];
          const double dm_ep = (*cache)[n + i];
          const double dmsq_ep = (*cache)[2 * n + i];
          if (pg[0]) (*pg[0])[i] += gi * dm_ep;                          // d/d mu_q
          if (pg[1]) (*pg[1])[i] += gi * 0.5 * (e_qp - 1.0);             // d/d logvar_q
          if (pg[2]) (*pg[2])[i] -= gi * dm_ep;                          // d/d mu_p
          if (pg[3]) (*pg[3])[i] += gi * 0.5 * (1.0 - e_qp - dmsq_ep);   // d/d logvar_p
        }
      });
}

}  // namespace

GaussianParams make_gaussian(Tensor mean, Tensor log_var, double clamp_lo, double clamp_hi) {
  check(mean.defined() && log_var.defined(), "make_gaussian: undefined inputs");
  check(mean.shape() == log_var.shape(),
        cat("make_gaussian: mean shape ", shape_str(mean.shape()), " != log_var shape ",
            shape_str(log_var.shape())));
  return GaussianParams{std::move(mean), clamp(log_var, clamp_lo, clamp_hi)};
}

GaussianParams standard_normal_like(const GaussianParams& g) {
  check_same_shape(g, "standard_normal_like");
  return GaussianParams{Tensor::zeros(g.mean.shape()), Tensor::zeros(g.mean.shape())};
}

GaussianParams stop_grad(const GaussianParams& g) {
  return GaussianParams{stop_grad(g.mean), stop_grad(g.log_var)};
}

Tensor gaussian_kl(const GaussianParams& q, const GaussianParams& p) { return kl_impl(q, p, false); }

Tensor gaussian_kl_rowwise(const GaussianParams& q, const GaussianParams& p) { return kl_impl(q, p, true); }

Tensor reparameterize(const GaussianParams& g, Rng& rng) {
  check_same_shape(g, "reparameterize");
  const auto& m = g.mean.data();
  const auto& lv = g.log_var.data();
  const size_t n = m.size();
  auto eps = std::make_shared<std::vector<double>>(n);
  auto sigma = std::make_shared<std::vector<double>>(n);
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i) {
    (*eps)[i] = rng.normal();
    (*sigma)[i] = std::exp(0.5 * lv[i]);
    out[i] = m[i] + (*sigma)[i] * (*eps)[i];
  }
  return make_op_local("reparameterize", g.mean.shape(), std::move(out), {g.mean, g.log_var},
                       [eps, sigma](const std::vector<double>& gr, const std::vector<std::vector<double>*>& pg) {
                         for (size_t i = 0; i < gr.size(); ++i) {
                           if (pg[0]) (*pg[0])[i] += gr[i];
                           if (pg[1]) (*pg[1])[i] += gr[i] * 0.5 * (*sigma)[i] * (*eps)[i];
                         }
                       });
}

}  // namespace vdfd::diff
