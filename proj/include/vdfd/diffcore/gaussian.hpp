#pragma once

#include "vdfd/diffcore/ops.hpp"
#include "vdfd/diffcore/rng.hpp"
#include "vdfd/diffcore/tensor.hpp"

namespace vdfd::diff {

// Diagonal Gaussian in (mean, log-variance) parameterization. log_var is
// expected to be pre-clamped; make_gaussian applies the clamp.
struct GaussianParams {
  Tensor mean;
  Tensor log_var;

  bool defined() const { return mean.defined() && log_var.defined(); }
};

inline constexpr double kLogVarClampLo = -10.0;
inline constexpr double kLogVarClampHi = 10.0;

GaussianParams make_gaussian(Tensor mean, Tensor log_var, double clamp_lo = kLogVarClampLo,
                             double clamp_hi = kLogVarClampHi);

// N(0, I) with the same shape as g, as constants.
GaussianParams standard_normal_like(const GaussianParams& g);

GaussianParams stop_grad(const GaussianParams& g);

// KL(q || p) summed over all dimensions (scalar). Non-negative, zero iff the
// parameters agree elementwise.
Tensor gaussian_kl(const GaussianParams& q, const GaussianParams& p);
// Per-row KL for [R, D] parameter matrices -> [R, 1].
Tensor gaussian_kl_rowwise(const GaussianParams& q, const GaussianParams& p);

// mean + sigma * eps with eps ~ N(0, I) drawn from rng. Gradients flow to the
// parameters, never to the noise.
Tensor reparameterize(const GaussianParams& g, Rng& rng);

}  // namespace vdfd::diff
