#include "vdfd/diffcore/tensor.hpp"

#include <atomic>
#include <cmath>

#include "vdfd/common.hpp"

namespace vdfd::diff {

namespace {
std::atomic<std::uint64_t> g_next_id{1};
bool g_finite_checks = true;

void check_finite(const std::vector<double>& v, const char* where) {
  if (!g_finite_checks) return;
  for (double x : v) {
    if (!std::isfinite(x)) fail(cat("non-finite value in ", where));
  }
}
}  // namespace

void set_finite_checks(bool enabled) { g_finite_checks = enabled; }
bool finite_checks_enabled() { return g_finite_checks; }

std::uint64_t next_node_id() { return g_next_id.fetch_add(1); }

std::int64_t numel(const Shape& shape) {
  std::int64_t n = 1;
  for (int d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

static Tensor make_leaf(Shape shape, std::vector<double> data, bool is_param, const char* where) {
  check(!shape.empty(), "tensor shape must be non-empty");
  for (int d : shape) check(d > 0, cat("tensor dims must be positive, got ", shape_str(shape)));
  check(numel(shape) == static_cast<std::int64_t>(data.size()),
        cat("data length ", data.size(), " does not match shape ", shape_str(shape)));
  check_finite(data, where);
  auto n = std::make_shared<Node>();
  n->id = g_next_id.fetch_add(1);
  n->shape = std::move(shape);
  n->value = std::move(data);
  n->is_param = is_param;
  n->grad_needed = is_param;
  return Tensor::from_node(std::move(n));
}

Tensor Tensor::constant(Shape shape, std::vector<double> data) {
  return make_leaf(std::move(shape), std::move(data), false, "constant");
}

Tensor Tensor::zeros(Shape shape) {
  auto n = numel(shape);
  return make_leaf(std::move(shape), std::vector<double>(static_cast<size_t>(n), 0.0), false, "zeros");
}

Tensor Tensor::full(Shape shape, double v) {
  auto n = numel(shape);
  return make_leaf(std::move(shape), std::vector<double>(static_cast<size_t>(n), v), false, "full");
}

Tensor Tensor::scalar(double v) { return make_leaf({1}, {v}, false, "scalar"); }

Tensor Tensor::param(Shape shape, std::vector<double> data) {
  return make_leaf(std::move(shape), std::move(data), true, "param");
}

const Shape& Tensor::shape() const {
  check(defined(), "use of undefined tensor");
  return node_->shape;
}

int Tensor::rank() const { return static_cast<int>(shape().size()); }

int Tensor::dim(int i) const {
  const auto& s = shape();
  check(i >= 0 && i < static_cast<int>(s.size()), cat("dim index ", i, " out of range for ", shape_str(s)));
  return s[i];
}

std::int64_t Tensor::size() const { return numel(shape()); }

const std::vector<double>& Tensor::data() const {
  check(defined(), "use of undefined tensor");
  return node_->value;
}

double Tensor::scalar_value() const {
  check(size() == 1, cat("expected scalar, got shape ", shape_str(shape())));
  return node_->value[0];
}

double Tensor::at(std::int64_t i) const {
  check(i >= 0 && i < size(), "tensor index out of range");
  return node_->value[static_cast<size_t>(i)];
}

bool Tensor::requires_grad() const { return defined() && node_->is_param; }
bool Tensor::grad_needed() const { return defined() && node_->grad_needed; }
std::uint64_t Tensor::id() const {
  check(defined(), "use of undefined tensor");
  return node_->id;
}

GradMap backward(const Tensor& loss) {
  check(loss.defined(), "backward: undefined loss");
  check(loss.size() == 1, cat("backward: loss must be scalar, got shape ", shape_str(loss.shape())));

  // Topological order over grad-needing nodes, iterative DFS.
  std::vector<Node*> order;
  std::unordered_map<Node*, int> state;  // 0 unseen, 1 open, 2 done
  if (loss.grad_needed()) {
    std::vector<Node*> stack{loss.node().get()};
    while (!stack.empty()) {
      Node* n = stack.back();
      int& st = state[n];
      if (st == 0) {
        st = 1;
        for (const auto& p : n->parents) {
          if (p->grad_needed && state[p.get()] == 0) stack.push_back(p.get());
        }
      } else {
        stack.pop_back();
        if (st == 1) {
          st = 2;
          order.push_back(n);
        }
      }
    }
  }

  std::unordered_map<Node*, std::vector<double>> grads;
  grads[loss.node().get()] = {1.0};

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    auto gi = grads.find(n);
    if (gi == grads.end()) continue;  // unreachable through differentiable paths
    if (!n->backward) continue;       // leaf
    std::vector<std::vector<double>*> parent_grads(n->parents.size(), nullptr);
    for (size_t i = 0; i < n->parents.size(); ++i) {
      Node* p = n->parents[i].get();
      if (!p->grad_needed) continue;
      auto& buf = grads[p];
      if (buf.empty()) buf.assign(p->value.size(), 0.0);
      parent_grads[i] = &buf;
    }
    n->backward(gi->second, parent_grads);
  }

  GradMap out;
  for (Node* n : order) {
    if (!n->is_param) continue;
    auto gi = grads.find(n);
    if (gi == grads.end()) continue;
    out.emplace(n->id, Tensor::constant(n->shape, std::move(gi->second)));
  }
  return out;
}

}  // namespace vdfd::diff
