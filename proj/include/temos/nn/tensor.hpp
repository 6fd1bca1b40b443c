#pragma once

// Reverse-mode autodiff tensor. A Tensor is a shared handle to a Node that
// owns its values, its gradient accumulator and (for op outputs) the edges
// back to its inputs plus a closure that pushes the node's gradient into them.
//
// Values are never changed by ops. Parameters are the only nodes whose values
// are mutated, and only by the optimizer between graph constructions.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "temos/errors.hpp"

namespace temos::nn {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into parents' grads.
  std::function<void(Node&)> backward;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), T(0));
  }
};

template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  static Tensor from(Shape shape, std::vector<T> values, bool requires_grad = false) {
    if (shape_numel(shape) != values.size()) {
      throw InvalidArgument("tensor: shape " + shape_str(shape) + " does not match " +
                            std::to_string(values.size()) + " values");
    }
    auto node = std::make_shared<Node<T>>();
    node->shape = std::move(shape);
    node->value = std::move(values);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
  }

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    const std::size_t n = shape_numel(shape);
    return from(std::move(shape), std::vector<T>(n, T(0)), requires_grad);
  }

  static Tensor full(Shape shape, T v) {
    const std::size_t n = shape_numel(shape);
    return from(std::move(shape), std::vector<T>(n, v));
  }

  static Tensor scalar(T v) { return from({}, {v}); }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t numel() const { return node_->value.size(); }
  bool requires_grad() const { return node_->requires_grad; }

  std::span<const T> values() const { return node_->value; }
  // Parameter updates and initialisation only.
  std::span<T> mutable_values() { return node_->value; }

  std::span<const T> grad() const {
    node_->ensure_grad();
    return node_->grad;
  }
  std::span<T> mutable_grad() {
    node_->ensure_grad();
    return node_->grad;
  }
  void zero_grad() {
    if (node_) node_->grad.assign(node_->value.size(), T(0));
  }

  T item() const {
    if (numel() != 1) throw InvalidArgument("item(): tensor " + shape_str(shape()) + " is not a scalar");
    return node_->value[0];
  }

  // Same values, no history.
  Tensor detach() const { return from(shape(), node_->value, false); }

  Node<T>* node() const { return node_.get(); }
  const std::shared_ptr<Node<T>>& node_ptr() const { return node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

// Creates an op output. The backward closure is attached only when at least
// one input needs a gradient, so evaluation-mode graphs carry no history.
template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> values,
                      std::vector<std::shared_ptr<Node<T>>> parents,
                      std::function<void(Node<T>&)> backward) {
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  const bool any = std::any_of(parents.begin(), parents.end(),
                               [](const auto& p) { return p && p->requires_grad; });
  if (any) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward = std::move(backward);
  }
  return Tensor<T>(std::move(node));
}

// Reverse-mode sweep from a scalar. Leaf gradients accumulate across calls;
// interior gradients are reset at the start of every sweep.
template <typename T>
void backward(const Tensor<T>& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw InvalidArgument("backward: loss must be a scalar tensor, got " +
                          (loss.defined() ? shape_str(loss.shape()) : std::string("undefined")));
  }
  Node<T>* root = loss.node();
  if (!root->requires_grad) return;

  // Iterative DFS post-order; state 1 = on the stack, 2 = finished.
  std::unordered_map<Node<T>*, int> state;
  std::vector<Node<T>*> order;
  std::vector<std::pair<Node<T>*, std::size_t>> stack;
  stack.emplace_back(root, 0);
  state[root] = 1;
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* parent = node->parents[next++].get();
      if (!parent->requires_grad) continue;
      auto it = state.find(parent);
      if (it == state.end()) {
        state[parent] = 1;
        stack.emplace_back(parent, 0);
      } else if (it->second == 1) {
        throw InvalidArgument("backward: computation graph contains a cycle");
      }
    } else {
      state[node] = 2;
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node<T>* node : order) {
    if (node->backward) node->grad.assign(node->value.size(), T(0));
  }
  root->ensure_grad();
  root->grad[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* node = *it;
    if (!node->backward) continue;
    for (auto& p : node->parents) {
      if (p->requires_grad) p->ensure_grad();
    }
    node->backward(*node);
  }
}

}  // namespace temos::nn
