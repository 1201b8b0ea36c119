#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

namespace vdfd::diff {

using Shape = std::vector<int>;

std::int64_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

class Node;
using NodePtr = std::shared_ptr<Node>;

// Accumulates this node's output gradient into the parents' gradient buffers.
// Entries of the pointer list are null for parents that do not need gradients.
using BackwardFn =
    std::function<void(const std::vector<double>& grad, const std::vector<std::vector<double>*>& parent_grads)>;

class Node {
 public:
  std::uint64_t id = 0;
  Shape shape;
  std::vector<double> value;
  bool is_param = false;    // leaf registered for gradients
  bool grad_needed = false; // some parameter lies upstream
  std::vector<NodePtr> parents;
  BackwardFn backward;
};

// Dense tensor participating in a define-by-run reverse-mode graph. The graph
// is the web of shared_ptr parents hanging off each node; it is rebuilt every
// training step and freed when the step's tensors go out of scope. Tensors
// are value types: copying shares the immutable node.
class Tensor {
 public:
  Tensor() = default;

  static Tensor constant(Shape shape, std::vector<double> data);
  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double v);
  static Tensor scalar(double v);
  // Leaf with requires_grad: backward() reports a gradient for it.
  static Tensor param(Shape shape, std::vector<double> data);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  int rank() const;
  int dim(int i) const;
  std::int64_t size() const;
  const std::vector<double>& data() const;
  double scalar_value() const;
  double at(std::int64_t i) const;

  bool requires_grad() const;
  bool grad_needed() const;
  std::uint64_t id() const;

  const NodePtr& node() const { return node_; }
  static Tensor from_node(NodePtr n) {
    Tensor t;
    t.node_ = std::move(n);
    return t;
  }

 private:
  NodePtr node_;
};

// parameter/leaf id -> gradient tensor (same shape as the leaf)
using GradMap = std::unordered_map<std::uint64_t, Tensor>;

// Reverse-mode sweep from a scalar loss. Returns gradients for every
// requires_grad leaf reachable from the loss; leaves behind stop_grad (or on
// paths of zero total derivative) are simply absent, which callers treat as
// a zero gradient.
GradMap backward(const Tensor& loss);

// Whether op outputs are scanned for NaN/Inf. On by default.
void set_finite_checks(bool enabled);
bool finite_checks_enabled();

std::uint64_t next_node_id();

}  // namespace vdfd::diff
