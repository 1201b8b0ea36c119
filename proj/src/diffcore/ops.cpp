#include "vdfd/diffcore/ops.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "vdfd/common.hpp"

namespace vdfd::diff {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMap = Eigen::Map<const EMat>;
using MMap = Eigen::Map<EMat>;

void check_all_finite(const std::vector<double>& v, const char* op) {
  if (!finite_checks_enabled()) return;
  for (double x : v) {
    if (!std::isfinite(x)) fail(cat(op, ": non-finite value in output"));
  }
}

Tensor make_op(const char* op, Shape shape, std::vector<double> value, std::vector<Tensor> parents, BackwardFn fn) {
  check(numel(shape) == static_cast<std::int64_t>(value.size()),
        cat(op, ": internal shape/data mismatch"));
  check_all_finite(value, op);
  auto n = std::make_shared<Node>();
  n->id = next_node_id();
  n->shape = std::move(shape);
  n->value = std::move(value);
  bool needed = false;
  for (const auto& p : parents) {
    check(p.defined(), cat(op, ": undefined input tensor"));
    if (p.grad_needed()) needed = true;
  }
  n->grad_needed = needed;
  if (needed) {
    n->parents.reserve(parents.size());
    for (auto& p : parents) n->parents.push_back(p.node());
    n->backward = std::move(fn);
  }
  return Tensor::from_node(std::move(n));
}

struct View2d {
  int rows, cols;
};

View2d as2d(const Tensor& t) {
  if (t.rank() == 1) return {1, t.dim(0)};
  check(t.rank() == 2, cat("op supports rank 1 or 2 tensors, got ", shape_str(t.shape())));
  return {t.dim(0), t.dim(1)};
}

enum class BinKind { Add, Sub, Mul };

const char* bin_name(BinKind k) {
  switch (k) {
    case BinKind::Add: return "add";
    case BinKind::Sub: return "sub";
    default: return "mul";
  }
}

// Reduce a full-shaped gradient back onto a possibly-broadcast operand.
std::vector<double> reduce_to(const std::vector<double>& g, View2d out, View2d in) {
  std::vector<double> r(static_cast<size_t>(in.rows) * in.cols, 0.0);
  for (int i = 0; i < out.rows; ++i) {
    const int ii = in.rows == 1 ? 0 : i;
    for (int j = 0; j < out.cols; ++j) {
      const int jj = in.cols == 1 ? 0 : j;
      r[static_cast<size_t>(ii) * in.cols + jj] += g[static_cast<size_t>(i) * out.cols + j];
    }
  }
  return r;
}

Tensor binary_op(BinKind kind, const Tensor& a, const Tensor& b) {
  const char* op = bin_name(kind);
  View2d va = as2d(a), vb = as2d(b);
  const bool a_scalar = a.size() == 1, b_scalar = b.size() == 1;
  if (!a_scalar && !b_scalar) {
    check((va.rows == vb.rows || va.rows == 1 || vb.rows == 1) && (va.cols == vb.cols || va.cols == 1 || vb.cols == 1),
          cat(op, ": incompatible shapes ", shape_str(a.shape()), " and ", shape_str(b.shape())));
  }
  View2d vo{std::max(va.rows, vb.rows), std::max(va.cols, vb.cols)};
  Shape out_shape = (a.rank() == 1 && b.rank() == 1) ? Shape{vo.cols} : Shape{vo.rows, vo.cols};

  const auto& da = a.data();
  const auto& db = b.data();
  std::vector<double> out(static_cast<size_t>(vo.rows) * vo.cols);
  for (int i = 0; i < vo.rows; ++i) {
    const int ia = va.rows == 1 ? 0 : i, ib = vb.rows == 1 ? 0 : i;
    for (int j = 0; j < vo.cols; ++j) {
      const int ja = va.cols == 1 ? 0 : j, jb = vb.cols == 1 ? 0 : j;
      const double x = da[static_cast<size_t>(ia) * va.cols + ja];
      const double y = db[static_cast<size_t>(ib) * vb.cols + jb];
      out[static_cast<size_t>(i) * vo.cols + j] = kind == BinKind::Add ? x + y : (kind == BinKind::Sub ? x - y : x * y);
    }
  }

  auto da_copy = kind == BinKind::Mul ? std::make_shared<std::vector<double>>(da) : nullptr;
  auto db_copy = kind == BinKind::Mul ? std::make_shared<std::vector<double>>(db) : nullptr;
  return make_op(op, std::move(out_shape), std::move(out), {a, b},
                 [kind, va, vb, vo, da_copy, db_copy](const std::vector<double>& g,
                                                      const std::vector<std::vector<double>*>& pg) {
                   if (pg[0]) {
                     std::vector<double> ga(g.size());
                     if (kind == BinKind::Mul) {
                       for (int i = 0; i < vo.rows; ++i)
                         for (int j = 0; j < vo.cols; ++j) {
                           const int ib = vb.rows == 1 ? 0 : i, jb = vb.cols == 1 ? 0 : j;
                           ga[static_cast<size_t>(i) * vo.cols + j] =
                               g[static_cast<size_t>(i) * vo.cols + j] *
                               (*db_copy)[static_cast<size_t>(ib) * vb.cols + jb];
                         }
                     } else {
                       ga = g;
                     }
                     auto r = reduce_to(ga, vo, va);
                     for (size_t k = 0; k < r.size(); ++k) (*pg[0])[k] += r[k];
                   }
                   if (pg[1]) {
                     std::vector<double> gb(g.size());
                     if (kind == BinKind::Mul) {
                       for (int i = 0; i < vo.rows; ++i)
                         for (int j = 0; j < vo.cols; ++j) {
                           const int ia = va.rows == 1 ? 0 : i, ja = va.cols == 1 ? 0 : j;
                           gb[static_cast<size_t>(i) * vo.cols + j] =
                               g[static_cast<size_t>(i) * vo.cols + j] *
                               (*da_copy)[static_cast<size_t>(ia) * va.cols + ja];
                         }
                     } else if (kind == BinKind::Sub) {
                       for (size_t k = 0; k < g.size(); ++k) gb[k] = -g[k];
                     } else {
                       gb = g;
                     }
                     auto r = reduce_to(gb, vo, vb);
                     for (size_t k = 0; k < r.size(); ++k) (*pg[1])[k] += r[k];
                   }
                 });
}

using UnaryFwd = double (*)(double);
using UnaryBwd = double (*)(double x, double y);  // dy/dx from input x and output y

Tensor unary_op(const char* op, const Tensor& t, UnaryFwd f, UnaryBwd df) {
  const auto& d = t.data();
  std::vector<double> out(d.size());
  for (size_t i = 0; i < d.size(); ++i) out[i] = f(d[i]);
  auto x_copy = std::make_shared<std::vector<double>>(d);
  auto y_copy = std::make_shared<std::vector<double>>(out);
  return make_op(op, t.shape(), std::move(out), {t},
                 [x_copy, y_copy, df](const std::vector<double>& g, const std::vector<std::vector<double>*>& pg) {
                   if (!pg[0]) return;
                   for (size_t i = 0; i < g.size(); ++i)
                     (*pg[0])[i] += g[i] * df((*x_copy)[i], (*y_copy)[i]);
                 });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return binary_op(BinKind::Add, a, b); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary_op(BinKind::Sub, a, b); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary_op(BinKind::Mul, a, b); }

Tensor matmul(const Tensor& a, const Tensor& b) {
  check(a.rank() == 2 && b.rank() == 2,
        cat("matmul: expected rank-2 inputs, got ", shape_str(a.shape()), " and ", shape_str(b.shape())));
  check(a.dim(1) == b.dim(0),
        cat("matmul: inner dims differ, ", shape_str(a.shape()), " x ", shape_str(b.shape())));
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(static_cast<size_t>(m) * n);
  {
    CMap ma(a.data().data(), m, k), mb(b.data().data(), k, n);
    MMap mo(out.data(), m, n);
    mo.noalias() = ma * mb;
  }
  auto a_copy = std::make_shared<std::vector<double>>(a.data());
  auto b_copy = std::make_shared<std::vector<double>>(b.data());
  return make_op("matmul", {m, n}, std::move(out), {a, b},
                 [m, k, n, a_copy, b_copy](const std::vector<double>& g, const std::vector<std::vector<double>*>& pg) {
                   CMap mg(g.data(), m, n);
                   if (pg[0]) {
                     CMap mb(b_copy->data(), k, n);
                     MMap ga(pg[0]->data(), m, k);
                     ga.noalias() += mg * mb.transpose();
                   }
                   if (pg[1]) {
                     CMap ma(a_copy->data(), m, k);
                     MMap gb(pg[1]->data(), k, n);
                     gb.noalias() += ma.transpose() * mg;
                   }
                 });
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  check(!parts.empty(), "concat: no inputs");
  const int rank = parts[0].rank();
  check(axis >= 0 && axis < rank, cat("concat: axis ", axis, " out of range for rank ", rank));
  for (const auto& p : parts) check(p.rank() == rank, "concat: mixed ranks");

  if (rank == 1) {
    check(axis == 0, "concat: rank-1 axis must be 0");
    int total = 0;
    for (const auto& p : parts) total += p.dim(0);
    std::vector<double> out;
    out.reserve(total);
    std::vector<int> offsets;
    for (const auto& p : parts) {
      offsets.push_back(static_cast<int>(out.size()));
      out.insert(out.end(), p.data().begin(), p.data().end());
    }
    std::vector<int> sizes;
    for (const auto& p : parts) sizes.push_back(p.dim(0));
    return make_op("concat", {total}, std::move(out), parts,
                   [offsets, sizes](const std::vector<double>& g, const std::vector<std::vector<double>*>& pg) {
                     for (size_t i = 0; i < pg.size(); ++i) {
                       if (!pg[i]) continue;
                       for (int j = 0; j < sizes[i]; ++j) (*pg[i])[j] += g[offsets[i] + j];
                     }
                   });
  }

  const int other = 1 - axis;
  const int fixed = parts[0].dim(other);
  int total = 0;
  for (const auto& p : parts) {
    check(p.dim(other) == fixed,
          cat("concat: shape mismatch along non-concat axis: ", shape_str(parts[0].shape()), " vs ",
              shape_str(p.shape())));
    total += p.dim(axis);
  }
  Shape out_shape = axis == 0 ? Shape{total, fixed} : Shape{fixed, total};
  const int rows = out_shape[0], cols = out_shape[1];
  std::vector<double> out(static_cast<size_t>(rows) * cols);
  std::vector<int> starts;
  {
    int off = 0;
    for (const auto& p : parts) {
      starts.push_back(off);
      const auto& d = p.data();
      if (axis == 0) {
        std::copy(d.begin(), d.end(), out.begin() + static_cast<size_t>(off) * cols);
      } else {
        const int pc = p.dim(1);
        for (int r = 0; r < rows; ++r)
          std::copy(d.begin() + static_cast<size_t>(r) * pc, d.begin() + static_cast<size_t>(r + 1) * pc,
                    out.begin() + static_cast<size_t>(r) * cols + off);
      }
      off += p.dim(axis);
    }
  }
  std::vector<int> lens;
  for (const auto& p : parts) lens.push_back(p.dim(axis));
  return make_op("concat", out_shape, std::move(out), parts,
                 [axis, rows, cols, starts, lens](const std::vector<double>& g,
                                                  const std::vector<std::vector<double>*>& pg) {
                   for (size_t i = 0; i < pg.size(); ++i) {
                     if (!pg[i]) continue;
                     if (axis == 0) {
                       for (int j = 0; j < lens[i] * cols; ++j)
                         (*pg[i])[j] += g[static_cast<size_t>(starts[i]) * cols + j];
                     } else {
                       for (int r = 0; r < rows; ++r)
                         for (int c = 0; c < lens[i]; ++c)
                           (*pg[i])[static_cast<size_t>(r) * lens[i] + c] +=
                               g[static_cast<size_t>(r) * cols + starts[i] + c];
                     }
                   }
                 });
}

Tensor slice(const Tensor& t, int axis, int start, int length) {
  const int rank = t.rank();
  check(axis >= 0 && axis < rank, cat("slice: axis ", axis, " out of range for ", shape_str(t.shape())));
  check(length > 0 && start >= 0 && start + length <= t.dim(axis),
        cat("slice: range [", start, ", ", start + length, ") out of bounds for ", shape_str(t.shape()), " axis ",
            axis));
  if (rank == 1) {
    std::vector<double> out(t.data().begin() + start, t.data().begin() + start + length);
    return make_op("slice", {length}, std::move(out), {t},
                   [start, length](const std::vector<double>& g, const std::vector<std::vector<double>*>& pg) {
                     if (!pg[0]) return;
                     for (int j = 0; j < length; ++j) (*pg[0])[start + j] += g[j];
                   });
  }
  const int rows = t.dim(0), cols = t.dim(1);
  Shape out_shape = axis == 0 ? Shape{length, cols} : Shape{rows, length};
  std::vector<double> out(static_cast<size_t>(numel(out_shape)));
  const auto& d = t.data();
  if (axis == 0) {
    std::copy(d.begin() + static_cast<size_t>(start) * cols, d.begin() + static_cast<size_t>(start + length) * cols,
              out.begin());
  } else {
    for (int r = 0; r < rows; ++r)
      std::copy(d.begin() + static_cast<size_t>(r) * cols + start,
                d.begin() + static_cast<size_t>(r) * cols + start + length, out.begin() + static_cast<size_t>(r) * length);
  }
  return make_op("slice", out_shape, std::move(out), {t},
                 [axis, rows, cols, start, length](const std::vector<double>& g,
                                                   const std::vector<std::vector<double>*>& pg) {
                   if (!pg[0]) return;
                   if (axis == 0) {
                     for (int j = 0; j < length * cols; ++j) (*pg[0])[static_cast<size_t>(start) * cols + j] += g[j];
                   } else {
                     for (int r = 0; r < rows; ++r)
                       for (int c = 0; c < length; ++c)
                         (*pg[0])[static_cast<size_t>(r) * cols + start + c] += g[static_cast<size_t>(r) * length + c];
                   }
                 });
}

Tensor reshape(const Tensor& t, Shape shape) {
  check(numel(shape) == t.size(),
        cat("reshape: cannot view ", shape_str(t.shape()), " as ", shape_str(shape)));
  return make_op("reshape", std::move(shape), t.data(), {t},
                 [](const std::vector<double>& g, const std::vector<std::vector<double>*>& pg) {
                   if (!pg[0]) return;
                   for (size_t i = 0; i < g.size(); ++i) (*pg[0])[i] += g[i];
                 });
}

Tensor relu(const Tensor& t) {
  return unary_op(
      "relu", t, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor tanh(const Tensor& t) {
  return unary_op(
      "tanh", t, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& t) {
  return unary_op(
      "sigmoid", t, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor elu(const Tensor& t) {
  return unary_op(
      "elu", t, [](double x) { return x >= 0.0 ? x : std::expm1(x); },
      [](double x, double y) { return x >= 0.0 ? 1.0 : y + 1.0; });
}

Tensor abs(const Tensor& t) {
  return unary_op(
      "abs", t, [](double x) { return std::fabs(x); },
      [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Tensor exp(const Tensor& t) {
  return unary_op(
      "exp", t, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor neg(const Tensor& t) {
  return unary_op(
      "neg", t, [](double x) { return -x; }, [](double, double) { return -1.0; });
}

Tensor clamp(const Tensor& t, double lo, double hi) {
  check(lo <= hi, cat("clamp: lo ", lo, " > hi ", hi));
  const auto& d = t.data();
  std::vector<double> out(d.size());
  for (size_t i = 0; i < d.size(); ++i) out[i] = std::min(hi, std::max(lo, d[i]));
  auto x_copy = std::make_shared<std::vector<double>>(d);
  return make_op("clamp", t.shape(), std::move(out), {t},
                 [x_copy, lo, hi](const std::vector<double>& g, const std::vector<std::vector<double>*>& pg) {
                   if (!pg[0]) return;
                   for (size_t i = 0; i < g.size(); ++i) {
                     const double x = (*x_copy)[i];
                     if (x >= lo && x <= hi) (*pg[0])[i] += g[i];
                   }
                 });
}

Tensor scale(const Tensor& t, double c) { return mul(t, Tensor::scalar(c)); }
Tensor add_const(const Tensor& t, double c) { return add(t, Tensor::scalar(c)); }

Tensor sum(const Tensor& t) {
  double s = 0.0;
  for (double x : t.data()) s += x;
  return make_op("sum", {1}, {s}, {t},
                 [](const std::vector<double>& g, const std::vector<std::vector<double>*>& pg) {
                   if (!pg[0]) return;
                   for (auto& v : *pg[0]) v += g[0];
                 });
}

Tensor sum_axis(const Tensor& t, int axis) {
  check(t.rank() == 2, cat("sum_axis: expected rank-2 input, got ", shape_str(t.shape())));
  check(axis == 0 || axis == 1, cat("sum_axis: bad axis ", axis));
  const int rows = t.dim(0), cols = t.dim(1);
  const auto& d = t.data();
  if (axis == 0) {
    std::vector<double> out(cols, 0.0);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) out[c] += d[static_cast<size_t>(r) * cols + c];
    return make_op("sum_axis", {1, cols}, std::move(out), {t},
                   [rows, cols](const std::vector<double>& g, const std::vector<std::vector<double>*>& pg) {
                     if (!pg[0]) return;
                     for (int r = 0; r < rows; ++r)
                       for (int c = 0; c < cols; ++c) (*pg[0])[static_cast<size_t>(r) * cols + c] += g[c];
                   });
  }
  std::vector<double> out(rows, 0.0);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) out[r] += d[static_cast<size_t>(r) * cols + c];
  return make_op("sum_axis", {rows, 1}, std::move(out), {t},
                 [rows, cols](const std::vector<double>& g, const std::vector<std::vector<double>*>& pg) {
                   if (!pg[0]) return;
                   for (int r = 0; r < rows; ++r)
                     for (int c = 0; c < cols; ++c) (*pg[0])[static_cast<size_t>(r) * cols + c] += g[r];
                 });
}

Tensor mean(const Tensor& t) {
  const double n = static_cast<double>(t.size());
  double s = 0.0;
  for (double x : t.data()) s += x;
  return make_op("mean", {1}, {s / n}, {t},
                 [n](const std::vector<double>& g, const std::vector<std::vector<double>*>& pg) {
                   if (!pg[0]) return;
                   const double gi = g[0] / n;
                   for (auto& v : *pg[0]) v += gi;
                 });
}

Tensor mse(const Tensor& a, const Tensor& b) {
  check(a.shape() == b.shape(),
        cat("mse: shape mismatch ", shape_str(a.shape()), " vs ", shape_str(b.shape())));
  const auto& da = a.data();
  const auto& db = b.data();
  const double n = static_cast<double>(da.size());
  double s = 0.0;
  for (size_t i = 0; i < da.size(); ++i) {
    const double d = da[i] - db[i];
    s += d * d;
  }
  auto diff = std::make_shared<std::vector<double>>(da.size());
  for (size_t i = 0; i < da.size(); ++i) (*diff)[i] = da[i] - db[i];
  return make_op("mse", {1}, {s / n}, {a, b},
                 [diff, n](const std::vector<double>& g, const std::vector<std::vector<double>*>& pg) {
                   const double c = 2.0 * g[0] / n;
                   if (pg[0])
                     for (size_t i = 0; i < diff->size(); ++i) (*pg[0])[i] += c * (*diff)[i];
                   if (pg[1])
                     for (size_t i = 0; i < diff->size(); ++i) (*pg[1])[i] -= c * (*diff)[i];
                 });
}

Tensor mse_rowwise(const Tensor& a, const Tensor& b) {
  check(a.rank() == 2 && a.shape() == b.shape(),
        cat("mse_rowwise: need equal rank-2 shapes, got ", shape_str(a.shape()), " vs ", shape_str(b.shape())));
  const int rows = a.dim(0), cols = a.dim(1);
  const auto& da = a.data();
  const auto& db = b.data();
  std::vector<double> out(rows, 0.0);
  auto diff = std::make_shared<std::vector<double>>(da.size());
  for (int r = 0; r < rows; ++r) {
    double s = 0.0;
    for (int c = 0; c < cols; ++c) {
      const size_t i = static_cast<size_t>(r) * cols + c;
      const double d = da[i] - db[i];
      (*diff)[i] = d;
      s += d * d;
    }
    out[r] = s / cols;
  }
  return make_op("mse_rowwise", {rows, 1}, std::move(out), {a, b},
                 [diff, rows, cols](const std::vector<double>& g, const std::vector<std::vector<double>*>& pg) {
                   for (int r = 0; r < rows; ++r) {
                     const double c2 = 2.0 * g[r] / cols;
                     for (int c = 0; c < cols; ++c) {
                       const size_t i = static_cast<size_t>(r) * cols + c;
                       if (pg[0]) (*pg[0])[i] += c2 * (*diff)[i];
                       if (pg[1]) (*pg[1])[i] -= c2 * (*diff)[i];
                     }
                   }
                 });
}

Tensor softmax(const Tensor& t) {
  View2d v = as2d(t);
  const auto& d = t.data();
  std::vector<double> out(d.size());
  for (int r = 0; r < v.rows; ++r) {
    const size_t base = static_cast<size_t>(r) * v.cols;
    double mx = d[base];
    for (int c = 1; c < v.cols; ++c) mx = std::max(mx, d[base + c]);
    double z = 0.0;
    for (int c = 0; c < v.cols; ++c) {
      out[base + c] = std::exp(d[base + c] - mx);
      z += out[base + c];
    }
    for (int c = 0; c < v.cols; ++c) out[base + c] /= z;
  }
  auto y_copy = std::make_shared<std::vector<double>>(out);
  return make_op("softmax", t.shape(), std::move(out), {t},
                 [y_copy, v](const std::vector<double>& g, const std::vector<std::vector<double>*>& pg) {
                   if (!pg[0]) return;
                   for (int r = 0; r < v.rows; ++r) {
                     const size_t base = static_cast<size_t>(r) * v.cols;
                     double dot = 0.0;
                     for (int c = 0; c < v.cols; ++c) dot += g[base + c] * (*y_copy)[base + c];
                     for (int c = 0; c < v.cols; ++c)
                       (*pg[0])[base + c] += (*y_copy)[base + c] * (g[base + c] - dot);
                   }
                 });
}

Tensor stop_grad(const Tensor& t) {
  // Value-identical constant: no parents, so no gradient can cross it.
  return Tensor::constant(t.shape(), t.data());
}

Tensor repeat_interleave_cols(const Tensor& t, int k) {
  check(t.rank() == 2, cat("repeat_interleave_cols: expected rank-2, got ", shape_str(t.shape())));
  check(k >= 1, "repeat_interleave_cols: k must be >= 1");
  const int rows = t.dim(0), cols = t.dim(1);
  const auto& d = t.data();
  std::vector<double> out(static_cast<size_t>(rows) * cols * k);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const double x = d[static_cast<size_t>(r) * cols + c];
      for (int j = 0; j < k; ++j) out[(static_cast<size_t>(r) * cols + c) * k + j] = x;
    }
  return make_op("repeat_interleave_cols", {rows, cols * k}, std::move(out), {t},
                 [rows, cols, k](const std::vector<double>& g, const std::vector<std::vector<double>*>& pg) {
                   if (!pg[0]) return;
                   for (int r = 0; r < rows; ++r)
                     for (int c = 0; c < cols; ++c) {
                       double s = 0.0;
                       for (int j = 0; j < k; ++j) s += g[(static_cast<size_t>(r) * cols + c) * k + j];
                       (*pg[0])[static_cast<size_t>(r) * cols + c] += s;
                     }
                 });
}

Tensor block_sum_cols(const Tensor& t, int block) {
  check(t.rank() == 2, cat("block_sum_cols: expected rank-2, got ", shape_str(t.shape())));
  const int rows = t.dim(0), cols = t.dim(1);
  check(block >= 1 && cols % block == 0, cat("block_sum_cols: cols ", cols, " not divisible by block ", block));
  const int nblocks = cols / block;
  const auto& d = t.data();
  std::vector<double> out(static_cast<size_t>(rows) * block, 0.0);
  for (int r = 0; r < rows; ++r)
    for (int b = 0; b < nblocks; ++b)
      for (int c = 0; c < block; ++c)
        out[static_cast<size_t>(r) * block + c] += d[static_cast<size_t>(r) * cols + b * block + c];
  return make_op("block_sum_cols", {rows, block}, std::move(out), {t},
                 [rows, cols, block, nblocks](const std::vector<double>& g,
                                              const std::vector<std::vector<double>*>& pg) {
                   if (!pg[0]) return;
                   for (int r = 0; r < rows; ++r)
                     for (int b = 0; b < nblocks; ++b)
                       for (int c = 0; c < block; ++c)
                         (*pg[0])[static_cast<size_t>(r) * cols + b * block + c] +=
                             g[static_cast<size_t>(r) * block + c];
                 });
}

Tensor block_left_matmul(const Tensor& m, const Tensor& h) {
  check(m.rank() == 2 && m.dim(0) == m.dim(1), cat("block_left_matmul: operator must be square, got ",
                                                   shape_str(m.shape())));
  check(!m.grad_needed(), "block_left_matmul: operator must be constant");
  const int n = m.dim(0);
  check(h.rank() == 2 && h.dim(0) % n == 0,
        cat("block_left_matmul: rows of ", shape_str(h.shape()), " not a multiple of ", n));
  const int blocks = h.dim(0) / n, f = h.dim(1);
  std::vector<double> out(h.data().size());
  {
    CMap mm(m.data().data(), n, n);
    for (int b = 0; b < blocks; ++b) {
      CMap hb(h.data().data() + static_cast<size_t>(b) * n * f, n, f);
      MMap ob(out.data() + static_cast<size_t>(b) * n * f, n, f);
      ob.noalias() = mm * hb;
    }
  }
  auto m_copy = std::make_shared<std::vector<double>>(m.data());
  return make_op("block_left_matmul", h.shape(), std::move(out), {m, h},
                 [n, blocks, f, m_copy](const std::vector<double>& g, const std::vector<std::vector<double>*>& pg) {
                   if (!pg[1]) return;
                   CMap mm(m_copy->data(), n, n);
                   for (int b = 0; b < blocks; ++b) {
                     CMap gb(g.data() + static_cast<size_t>(b) * n * f, n, f);
                     MMap hb(pg[1]->data() + static_cast<size_t>(b) * n * f, n, f);
                     hb.noalias() += mm.transpose() * gb;
                   }
                 });
}

// --- dispatcher ---------------------------------------------------------------

namespace {
const std::pair<OpKind, const char*> kOpNames[] = {
    {OpKind::Matmul, "matmul"}, {OpKind::Add, "add"},         {OpKind::Mul, "mul"},
    {OpKind::Sub, "sub"},       {OpKind::Concat, "concat"},   {OpKind::Slice, "slice"},
    {OpKind::Relu, "relu"},     {OpKind::Tanh, "tanh"},       {OpKind::Sigmoid, "sigmoid"},
    {OpKind::Elu, "elu"},       {OpKind::Abs, "abs"},         {OpKind::Sum, "sum"},
    {OpKind::Mean, "mean"},     {OpKind::Mse, "mse"},         {OpKind::Softmax, "softmax"},
};

void need_inputs(OpKind kind, const std::vector<Tensor>& inputs, size_t n) {
  check(inputs.size() == n, cat(op_kind_name(kind), ": expected ", n, " inputs, got ", inputs.size()));
}
}  // namespace

std::string op_kind_name(OpKind kind) {
  for (const auto& [k, name] : kOpNames)
    if (k == kind) return name;
  return "unknown";
}

OpKind op_kind_from_string(const std::string& name) {
  for (const auto& [k, n] : kOpNames)
    if (name == n) return k;
  fail(cat("unknown op_kind '", name, "'"));
}

const std::vector<OpKind>& all_op_kinds() {
  static const std::vector<OpKind> kinds = [] {
    std::vector<OpKind> v;
    for (const auto& [k, n] : kOpNames) v.push_back(k);
    return v;
  }();
  return kinds;
}

Tensor forward(OpKind kind, const std::vector<Tensor>& inputs, const OpAttrs& attrs) {
  switch (kind) {
    case OpKind::Matmul: need_inputs(kind, inputs, 2); return matmul(inputs[0], inputs[1]);
    case OpKind::Add: need_inputs(kind, inputs, 2); return add(inputs[0], inputs[1]);
    case OpKind::Mul: need_inputs(kind, inputs, 2); return mul(inputs[0], inputs[1]);
    case OpKind::Sub: need_inputs(kind, inputs, 2); return sub(inputs[0], inputs[1]);
    case OpKind::Concat: return concat(inputs, attrs.axis < 0 ? 0 : attrs.axis);
    case OpKind::Slice:
      need_inputs(kind, inputs, 1);
      return slice(inputs[0], attrs.axis < 0 ? 0 : attrs.axis, attrs.start, attrs.length);
    case OpKind::Relu: need_inputs(kind, inputs, 1); return relu(inputs[0]);
    case OpKind::Tanh: need_inputs(kind, inputs, 1); return tanh(inputs[0]);
    case OpKind::Sigmoid: need_inputs(kind, inputs, 1); return sigmoid(inputs[0]);
    case OpKind::Elu: need_inputs(kind, inputs, 1); return elu(inputs[0]);
    case OpKind::Abs: need_inputs(kind, inputs, 1); return abs(inputs[0]);
    case OpKind::Sum:
      need_inputs(kind, inputs, 1);
      return attrs.axis < 0 ? sum(inputs[0]) : sum_axis(inputs[0], attrs.axis);
    case OpKind::Mean: need_inputs(kind, inputs, 1); return mean(inputs[0]);
    case OpKind::Mse: need_inputs(kind, inputs, 2); return mse(inputs[0], inputs[1]);
    case OpKind::Softmax: need_inputs(kind, inputs, 1); return softmax(inputs[0]);
  }
  fail("forward: unhandled op_kind");
}

int argmax_masked(const std::vector<double>& values, const std::vector<bool>& legal) {
  check(values.size() == legal.size(), "argmax_masked: mask size mismatch");
  int best = -1;
  for (size_t i = 0; i < values.size(); ++i) {
    if (!legal[i]) continue;
    if (best < 0 || values[i] > values[best]) best = static_cast<int>(i);
  }
  check(best >= 0, "argmax_masked: no legal action");
  return best;
}

Tensor onehot(int index, int n) {
  check(index >= 0 && index < n, cat("onehot: index ", index, " out of range [0, ", n, ")"));
  std::vector<double> d(n, 0.0);
  d[index] = 1.0;
  return Tensor::constant({n}, std::move(d));
}

}  // namespace vdfd::diff
