#include "vdfd/diffcore/nn.hpp"

#include <cmath>

#include "vdfd/common.hpp"

namespace vdfd::diff {

Linear Linear::create(ParamStore& store, const std::string& prefix, int in, int out, Rng& rng) {
  check(in > 0 && out > 0, cat("Linear '", prefix, "': bad dims ", in, "x", out));
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  Linear l;
  l.in = in;
  l.out = out;
  l.w = store.add_uniform(prefix + ".w", {in, out}, bound, rng);
  l.b = store.add_uniform(prefix + ".b", {1, out}, bound, rng);
  return l;
}

Tensor Linear::operator()(const ParamStore& store, const Tensor& x) const {
  return add(matmul(x, store.get(w)), store.get(b));
}

GruCell GruCell::create(ParamStore& store, const std::string& prefix, int in, int hidden, Rng& rng) {
  check(in > 0 && hidden > 0, cat("GruCell '", prefix, "': bad dims ", in, "x", hidden));
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  GruCell c;
  c.in = in;
  c.hidden = hidden;
  c.w_ih = store.add_uniform(prefix + ".w_ih", {in, 3 * hidden}, bound, rng);
  c.w_hh = store.add_uniform(prefix + ".w_hh", {hidden, 3 * hidden}, bound, rng);
  c.b_ih = store.add_uniform(prefix + ".b_ih", {1, 3 * hidden}, bound, rng);
  c.b_hh = store.add_uniform(prefix + ".b_hh", {1, 3 * hidden}, bound, rng);
  return c;
}

Tensor GruCell::operator()(const ParamStore& store, const Tensor& x, const Tensor& h) const {
  check(x.rank() == 2 && x.dim(1) == in,
        cat("GruCell: input shape ", shape_str(x.shape()), " does not match in=", in));
  check(h.rank() == 2 && h.dim(1) == hidden && h.dim(0) == x.dim(0),
        cat("GruCell: hidden shape ", shape_str(h.shape()), " does not match input ", shape_str(x.shape())));

  const Tensor gi = add(matmul(x, store.get(w_ih)), store.get(b_ih));  // [R, 3H]
  const Tensor gh = add(matmul(h, store.get(w_hh)), store.get(b_hh));

  const Tensor r = sigmoid(add(slice(gi, 1, 0, hidden), slice(gh, 1, 0, hidden)));
  const Tensor z = sigmoid(add(slice(gi, 1, hidden, hidden), slice(gh, 1, hidden, hidden)));
  const Tensor n = tanh(add(slice(gi, 1, 2 * hidden, hidden), mul(r, slice(gh, 1, 2 * hidden, hidden))));

  // h' = (1 - z) * n + z * h
  const Tensor one_minus_z = sub(Tensor::scalar(1.0), z);
  return add(mul(one_minus_z, n), mul(z, h));
}

}  // namespace vdfd::diff
