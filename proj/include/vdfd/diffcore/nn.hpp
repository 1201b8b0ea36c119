#pragma once

#include <string>

#include "vdfd/diffcore/ops.hpp"
#include "vdfd/diffcore/params.hpp"

namespace vdfd::diff {

// x [R, in] -> x W + b [R, out]
struct Linear {
  ParamRef w, b;
  int in = 0, out = 0;

  static Linear create(ParamStore& store, const std::string& prefix, int in, int out, Rng& rng);
  Tensor operator()(const ParamStore& store, const Tensor& x) const;
};

// Gated recurrent cell, gate order [r | z | n] in the fused weight matrices.
struct GruCell {
  ParamRef w_ih, w_hh, b_ih, b_hh;
  int in = 0, hidden = 0;

  static GruCell create(ParamStore& store, const std::string& prefix, int in, int hidden, Rng& rng);
  // x [R, in], h [R, hidden] -> h' [R, hidden]
  Tensor operator()(const ParamStore& store, const Tensor& x, const Tensor& h) const;
};

}  // namespace vdfd::diff
