#pragma once

// Dense 64-bit tensors with a dynamically taped reverse-mode gradient.
//
// A Tensor is a cheap handle to a shared node. Leaves created with
// requires_grad=true accumulate gradients; every op output produced while
// grad mode is on records its inputs and a backward closure, so the graph is
// rebuilt on each forward pass and discarded with its last handle.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace let::ad {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  std::vector<double>& grad_buffer() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

}  // namespace detail

class Tensor {
 public:
  Tensor();
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value);
  // Row vector [1, n].
  static Tensor row(std::vector<double> data, bool requires_grad = false);
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> data, bool requires_grad = false);

  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t numel() const { return node_->value.size(); }
  // Rank-2 accessors; rank-1 tensors are viewed as a single row.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const { return node_->value; }
  // Direct write access; only meaningful for leaves (optimizer updates).
  std::span<double> mutable_data() { return node_->value; }
  double item() const;
  double at(std::size_t r, std::size_t c) const;
  std::vector<double> row_values(std::size_t r) const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on);
  bool is_leaf() const { return node_->inputs.empty() && !node_->backward; }
  bool has_grad() const { return !node_->grad.empty(); }
  // Gradient buffer; all zeros when nothing has been accumulated.
  std::vector<double> grad() const;
  void zero_grad();

  // Populates gradients of every requires_grad tensor reachable from this
  // scalar. Throws let::Error when numel() != 1.
  void backward() const;

  // Copy of the value with no graph attached.
  Tensor detach() const;

  const char* op_name() const { return node_->op; }
  bool same_node(const Tensor& other) const { return node_ == other.node_; }

  // Internal: used by op implementations.
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

// Grad mode is thread-local; ops run under a NoGradGuard record nothing.
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Number of nodes visited by the most recent backward() on this thread.
std::size_t last_backward_node_count();

}  // namespace let::ad
