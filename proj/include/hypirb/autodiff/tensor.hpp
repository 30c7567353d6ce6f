#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hypirb::ad {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class GraphError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct Node;

/// One recorded primitive application. `inputs` are the operand nodes; the
/// closure reads the output node's gradient and accumulates into the inputs.
struct TapeEntry {
  const char* op = "";
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node& out)> backward;
};

struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  std::unique_ptr<TapeEntry> entry;  // null for leaves

  std::vector<double>& ensure_grad();
};

/// Dense row-major array of 64-bit reals with an optional gradient slot.
///
/// Tensors are cheap handles: copying a Tensor aliases the same storage.
/// Results of primitives are immutable; leaves may be mutated in place by
/// optimizers between graph constructions.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t dim(std::size_t axis) const;
  std::size_t rank() const { return shape().size(); }
  std::size_t numel() const;

  std::span<const double> data() const;
  /// Writable view; only valid on leaves (parameters, buffers).
  std::span<double> mutable_data();
  double item() const;
  double at(std::size_t flat_index) const { return data()[flat_index]; }

  bool requires_grad() const;
  void set_requires_grad(bool flag);
  bool is_leaf() const;
  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();

  /// Deep copy of the values into a fresh leaf.
  Tensor clone(bool requires_grad = false) const;
  /// Same storage semantics as clone() but never records or requires grad.
  Tensor detach() const;

  const std::shared_ptr<Node>& node() const { return node_; }
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<Node> node_;
};

/// Reverse pass from a scalar root. Gradients accumulate into every
/// requires_grad ancestor; the graph stays intact so the pass may be repeated.
void backward(const Tensor& root);

/// Returns the recorded entries reachable from `root` in topological order
/// (inputs before consumers). Exposed for inspection and tests.
std::vector<const TapeEntry*> tape_of(const Tensor& root);

/// While alive, primitives on this thread do not record tape entries.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_mode_enabled();

}  // namespace hypirb::ad
