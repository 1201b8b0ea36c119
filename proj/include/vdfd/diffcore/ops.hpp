#pragma once

#include <string>
#include <vector>

#include "vdfd/diffcore/tensor.hpp"

namespace vdfd::diff {

// --- elementwise / structural ops -------------------------------------------
// Binary ops broadcast when shapes differ: a scalar broadcasts against
// anything; otherwise both operands are viewed as 2-D and each dim must match
// or be 1 (row bias [1,C], column mask [R,1]).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

Tensor matmul(const Tensor& a, const Tensor& b);  // [m,k] x [k,n] -> [m,n]

Tensor concat(const std::vector<Tensor>& parts, int axis);
Tensor slice(const Tensor& t, int axis, int start, int length);
Tensor reshape(const Tensor& t, Shape shape);

Tensor relu(const Tensor& t);
Tensor tanh(const Tensor& t);
Tensor sigmoid(const Tensor& t);
Tensor elu(const Tensor& t);
Tensor abs(const Tensor& t);
Tensor exp(const Tensor& t);
Tensor neg(const Tensor& t);
Tensor clamp(const Tensor& t, double lo, double hi);
Tensor scale(const Tensor& t, double c);
Tensor add_const(const Tensor& t, double c);

Tensor sum(const Tensor& t);                    // scalar
Tensor sum_axis(const Tensor& t, int axis);     // keeps dims: axis 0 -> [1,C], axis 1 -> [R,1]
Tensor mean(const Tensor& t);                   // scalar
Tensor mse(const Tensor& a, const Tensor& b);   // scalar, mean over all elements
Tensor mse_rowwise(const Tensor& a, const Tensor& b);  // [R,1]
Tensor softmax(const Tensor& t);                // along last axis

Tensor stop_grad(const Tensor& t);

// Repeats each column k times consecutively: [R,C] -> [R, C*k].
Tensor repeat_interleave_cols(const Tensor& t, int k);
// Sums n consecutive column blocks of width `block`: [R, n*block] -> [R, block].
Tensor block_sum_cols(const Tensor& t, int block);
// Applies a fixed [n,n] operator to every consecutive n-row block of H
// ([R*n, F] -> [R*n, F]). Gradients flow to H only; m must be constant.
Tensor block_left_matmul(const Tensor& m, const Tensor& h);

// --- spec-facing generic dispatcher ------------------------------------------
enum class OpKind { Matmul, Add, Mul, Sub, Concat, Slice, Relu, Tanh, Sigmoid, Elu, Abs, Sum, Mean, Mse, Softmax };

struct OpAttrs {
  int axis = -1;  // concat axis; sum axis (-1 = full reduction)
  int start = 0;  // slice
  int length = 0; // slice
};

Tensor forward(OpKind kind, const std::vector<Tensor>& inputs, const OpAttrs& attrs = {});
OpKind op_kind_from_string(const std::string& name);
const std::vector<OpKind>& all_op_kinds();
std::string op_kind_name(OpKind kind);

// --- value-level helpers (no graph participation) ----------------------------
int argmax_masked(const std::vector<double>& values, const std::vector<bool>& legal);
Tensor onehot(int index, int n);

}  // namespace vdfd::diff
