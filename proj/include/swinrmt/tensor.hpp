/*
 * Copyright (c) 2026, The SwinRMT Authors.  All rights reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "swinrmt/errors.hpp"

namespace swinrmt {

using Shape = std::vector<std::size_t>;

inline std::size_t numel_of(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace detail {

struct Node;
using NodePtr = std::shared_ptr<Node>;

// Backward rules read `self.grad` and accumulate into the parents' grads.
using BackwardFn = std::function<void(Node& self)>;

struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  bool is_leaf = true;
  bool released = false;  // graph edges dropped after a backward sweep
  std::uint64_t seq = 0;
  std::string op = "leaf";
  std::vector<NodePtr> parents;
  BackwardFn backward;

  std::span<double> grad_buffer() {
    if (grad.empty()) grad.assign(data.size(), 0.0);
    return grad;
  }
};

inline std::uint64_t next_seq() {
  static std::atomic<std::uint64_t> counter{0};
  return ++counter;
}

inline bool& grad_enabled_flag() {
  thread_local bool enabled = true;
  return enabled;
}

inline bool& finite_checks_flag() {
#ifdef NDEBUG
  static bool enabled = false;
#else
  static bool enabled = true;
#endif
  return enabled;
}

inline std::string& corrupted_backward_flag() {
  static std::string op;
  return op;
}

}  // namespace detail

/// True when newly created ops are recorded on the tape.
inline bool grad_enabled() { return detail::grad_enabled_flag(); }

/// Disables tape recording for the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard() : previous_(detail::grad_enabled_flag()) { detail::grad_enabled_flag() = false; }
  ~NoGradGuard() { detail::grad_enabled_flag() = previous_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Toggles the NaN/Inf check run on every op result. On by default in debug builds.
inline void set_finite_checks(bool enabled) { detail::finite_checks_flag() = enabled; }
inline bool finite_checks() { return detail::finite_checks_flag(); }

/// Test fixture hook: every backward rule of ops named `op` sees its upstream
/// gradient scaled by 1.5. Empty string disables it.
inline void corrupt_backward_for_testing(std::string op) {
  detail::corrupted_backward_flag() = std::move(op);
}

class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape, double fill = 0.0) : node_(std::make_shared<detail::Node>()) {
    node_->data.assign(numel_of(shape), fill);
    node_->shape = std::move(shape);
    node_->seq = detail::next_seq();
  }

  Tensor(Shape shape, std::vector<double> values) : node_(std::make_shared<detail::Node>()) {
    if (numel_of(shape) != values.size()) {
      throw ShapeError("tensor of shape " + shape_str(shape) + " needs " +
                       std::to_string(numel_of(shape)) + " values, got " +
                       std::to_string(values.size()));
    }
    node_->shape = std::move(shape);
    node_->data = std::move(values);
    node_->seq = detail::next_seq();
  }

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape), 0.0); }
  static Tensor ones(Shape shape) { return Tensor(std::move(shape), 1.0); }
  static Tensor scalar(double v) { return Tensor(Shape{}, std::vector<double>{v}); }

  bool defined() const { return node_ != nullptr; }

  const Shape& shape() const { return node().shape; }
  std::size_t dim() const { return shape().size(); }
  std::size_t size(std::size_t axis) const {
    if (axis >= dim()) throw ShapeError("axis " + std::to_string(axis) + " out of range for " + shape_str(shape()));
    return shape()[axis];
  }
  std::size_t numel() const { return node().data.size(); }

  std::span<const double> data() const { return node().data; }

  /// Writable storage; only leaves may be written, since recorded ops capture values.
  std::span<double> mutable_data() {
    if (!node().is_leaf) throw AutogradError("cannot mutate the result of a recorded op '" + node().op + "'");
    return node().data;
  }

  bool has_grad() const { return !node().grad.empty(); }
  std::span<const double> grad() const { return node().grad; }

  bool requires_grad() const { return node().requires_grad; }
  Tensor& set_requires_grad(bool flag) {
    if (!node().is_leaf) throw AutogradError("requires_grad can only be set on leaves");
    node().requires_grad = flag;
    return *this;
  }

  double item() const {
    if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape()));
    return node().data[0];
  }

  double at(std::initializer_list<std::size_t> index) const { return node().data[offset(index)]; }

  std::size_t offset(std::initializer_list<std::size_t> index) const {
    const Shape& s = shape();
    if (index.size() != s.size()) throw ShapeError("index rank mismatch for " + shape_str(s));
    std::size_t off = 0;
    std::size_t axis = 0;
    for (std::size_t i : index) {
      if (i >= s[axis]) throw ShapeError("index out of range for " + shape_str(s));
      off = off * s[axis] + i;
      ++axis;
    }
    return off;
  }

  void zero_grad() { node().grad.clear(); }

  /// Copy of the values with no tape attachment.
  Tensor detach() const { return Tensor(shape(), std::vector<double>(data().begin(), data().end())); }

  const std::string& op_name() const { return node().op; }

  /// Reverse sweep from a scalar loss. Interior graph edges are released
  /// afterwards, so a second call on the same loss is an error.
  void backward() const;

  detail::Node& node() const {
    if (!node_) throw AutogradError("use of an undefined tensor");
    return *node_;
  }
  const detail::NodePtr& node_ptr() const { return node_; }

  static Tensor from_node(detail::NodePtr node) {
    Tensor t;
    t.node_ = std::move(node);
    return t;
  }

 private:
  detail::NodePtr node_;
};

/// Records an op result. `backward` runs only when some input requires grad
/// and recording is enabled; otherwise the result is a plain constant.
inline Tensor make_op(Shape shape, std::vector<double> values, std::string_view op,
                      const std::vector<Tensor>& inputs, detail::BackwardFn backward) {
  auto node = std::make_shared<detail::Node>();
  if (numel_of(shape) != values.size()) {
    throw ShapeError(std::string(op) + ": result shape " + shape_str(shape) + " does not match " +
                     std::to_string(values.size()) + " values");
  }
  node->shape = std::move(shape);
  node->data = std::move(values);
  node->seq = detail::next_seq();
  node->op = std::string(op);
  node->is_leaf = false;

  if (finite_checks()) {
    for (std::size_t i = 0; i < node->data.size(); ++i) {
      if (!std::isfinite(node->data[i])) {
        throw NumericError(node->op, "non-finite value in result of '" + node->op + "' at flat index " +
                                         std::to_string(i));
      }
    }
  }

  bool needs_grad = false;
  if (grad_enabled()) {
    for (const Tensor& t : inputs) {
      if (t.defined() && t.requires_grad()) {
        needs_grad = true;
        break;
      }
    }
  }
  if (needs_grad) {
    node->requires_grad = true;
    for (const Tensor& t : inputs) node->parents.push_back(t.defined() ? t.node_ptr() : nullptr);
    node->backward = std::move(backward);
  }
  return Tensor::from_node(std::move(node));
}

inline void Tensor::backward() const {
  detail::Node& root = node();
  if (root.data.size() != 1) {
    throw AutogradError("backward needs a scalar loss, got shape " + shape_str(root.shape));
  }
  if (root.released) throw AutogradError("backward was already run through this graph; rebuild it first");
  if (!root.requires_grad) throw AutogradError("loss is not connected to any tensor that requires grad");

  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<detail::Node*> stack{&root};
  while (!stack.empty()) {
    detail::Node* n = stack.back();
    stack.pop_back();
    if (!seen.insert(n).second) continue;
    if (n->released) throw AutogradError("graph reaches a node already consumed by an earlier backward");
    order.push_back(n);
    for (const auto& p : n->parents) {
      if (p && p->requires_grad) stack.push_back(p.get());
    }
  }
  std::sort(order.begin(), order.end(), [](const detail::Node* a, const detail::Node* b) { return a->seq > b->seq; });

  root.grad_buffer()[0] += 1.0;
  const std::string& corrupted = detail::corrupted_backward_flag();
  for (detail::Node* n : order) {
    if (!n->backward || n->grad.empty()) continue;
    if (!corrupted.empty() && n->op == corrupted) {
      for (double& g : n->grad) g *= 1.5;
    }
    n->backward(*n);
  }
  // Oldest first: a node is released only after everything it points to.
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* n = *it;
    if (n->is_leaf) continue;
    n->parents.clear();
    n->backward = nullptr;
    n->released = true;
  }
}

/// Accumulation target for a parent's gradient, or an empty span when that
/// parent does not take part in differentiation.
inline std::span<double> parent_grad(detail::Node& self, std::size_t i) {
  if (i >= self.parents.size() || !self.parents[i] || !self.parents[i]->requires_grad) return {};
  return self.parents[i]->grad_buffer();
}

}  // namespace swinrmt
