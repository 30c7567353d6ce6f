#include "hypirb/autodiff/tensor.hpp"

#include <sstream>
#include <unordered_set>

namespace hypirb::ad {

namespace {
thread_local bool g_grad_mode = true;
}  // namespace

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::vector<double>& Node::ensure_grad() {
  if (grad.empty()) grad.assign(data.size(), 0.0);
  return grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  for (auto d : shape) {
    if (d == 0) throw ShapeError("tensor dims must be positive, got " + shape_str(shape));
  }
  auto node = std::make_shared<Node>();
  node->data.assign(shape_numel(shape), value);
  node->shape = std::move(shape);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  for (auto d : shape) {
    if (d == 0) throw ShapeError("tensor dims must be positive, got " + shape_str(shape));
  }
  if (shape_numel(shape) != values.size()) {
    throw ShapeError("shape " + shape_str(shape) + " does not match " + std::to_string(values.size()) +
                     " values");
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->data = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) { return from({1}, {value}, requires_grad); }

const Shape& Tensor::shape() const {
  if (!node_) throw GraphError("use of undefined tensor");
  return node_->shape;
}

std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) throw ShapeError("axis " + std::to_string(axis) + " out of range for " + shape_str(s));
  return s[axis];
}

std::size_t Tensor::numel() const { return shape_numel(shape()); }

std::span<const double> Tensor::data() const {
  if (!node_) throw GraphError("use of undefined tensor");
  return node_->data;
}

std::span<double> Tensor::mutable_data() {
  if (!node_) throw GraphError("use of undefined tensor");
  if (node_->entry) throw GraphError("cannot mutate the result of a recorded operation");
  return node_->data;
}

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape()));
  return node_->data[0];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

void Tensor::set_requires_grad(bool flag) {
  if (!node_) throw GraphError("use of undefined tensor");
  if (node_->entry) throw GraphError("requires_grad can only be toggled on leaves");
  node_->requires_grad = flag;
}

bool Tensor::is_leaf() const { return node_ && !node_->entry; }

bool Tensor::has_grad() const { return node_ && !node_->grad.empty(); }

std::span<const double> Tensor::grad() const {
  if (!has_grad()) throw GraphError("tensor has no gradient");
  return node_->grad;
}

std::span<double> Tensor::mutable_grad() {
  if (!node_) throw GraphError("use of undefined tensor");
  return node_->ensure_grad();
}

void Tensor::zero_grad() {
  if (node_) node_->grad.clear();
}

Tensor Tensor::clone(bool requires_grad) const {
  return from(shape(), std::vector<double>(data().begin(), data().end()), requires_grad);
}

Tensor Tensor::detach() const { return clone(false); }

std::vector<const TapeEntry*> tape_of(const Tensor& root) {
  std::vector<const TapeEntry*> order;
  if (!root.defined()) return order;
  // Iterative post-order DFS over nodes that carry an entry.
  std::unordered_set<const Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  if (root.node()->entry) {
    stack.emplace_back(root.node().get(), 0);
    seen.insert(root.node().get());
  }
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    const auto& inputs = node->entry->inputs;
    if (next < inputs.size()) {
      Node* child = inputs[next++].get();
      if (child->entry && child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
      continue;
    }
    order.push_back(node->entry.get());
    stack.pop_back();
  }
  return order;
}

void backward(const Tensor& root) {
  if (!root.defined()) throw GraphError("backward on undefined tensor");
  if (root.numel() != 1) throw ShapeError("backward requires a scalar root, got " + shape_str(root.shape()));
  if (!root.requires_grad()) throw GraphError("backward on a tensor detached from any differentiable input");

  // Collect nodes in the same post-order as tape_of so each output node can
  // be paired with its entry during the reverse sweep.
  std::vector<Node*> order;
  std::unordered_set<const Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  Node* root_node = root.node().get();
  if (root_node->entry) {
    stack.emplace_back(root_node, 0);
    seen.insert(root_node);
  }
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    const auto& inputs = node->entry->inputs;
    if (next < inputs.size()) {
      Node* child = inputs[next++].get();
      if (child->entry && child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
      continue;
    }
    order.push_back(node);
    stack.pop_back();
  }

  // Intermediate gradients are scratch space for this sweep.
  for (Node* n : order) n->grad.clear();
  root_node->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->grad.empty()) continue;
    n->entry->backward(*n);
  }
}

NoGradGuard::NoGradGuard() : previous_(g_grad_mode) { g_grad_mode = false; }
NoGradGuard::~NoGradGuard() { g_grad_mode = previous_; }

bool grad_mode_enabled() { return g_grad_mode; }

}  // namespace hypirb::ad
