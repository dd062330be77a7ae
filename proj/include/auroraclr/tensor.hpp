// Copyright 2026 The auroraclr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

/// \file tensor.hpp
/// Dense float64 tensors and the reverse-mode tape that records operations on them.
///
/// A Tensor is a cheap reference-counted handle. Operations producing a tensor
/// from inputs that require gradients append a node to the calling thread's
/// current Tape; backward() replays the nodes in reverse order. Leaf gradients
/// accumulate across backward() calls until zero_grad() is called.

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "auroraclr/errors.hpp"

namespace auroraclr {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_str(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) out << (i ? "x" : "") << shape[i];
  out << ']';
  return out.str();
}

namespace detail {

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until a gradient reaches this tensor
  bool requires_grad = false;
  // Non-zero when this tensor is the output of a node on a tape.
  std::uint64_t tape_generation = 0;
  std::size_t tape_index = 0;

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  }
};

using ImplPtr = std::shared_ptr<TensorImpl>;

inline std::uint64_t next_generation() {
  static std::atomic<std::uint64_t> counter{0};
  return ++counter;
}

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false)
      : impl_(std::make_shared<detail::TensorImpl>()) {
    if (shape_numel(shape) != data.size()) {
      throw DimensionError("tensor data length " + std::to_string(data.size()) +
                           " does not match shape " + shape_str(shape));
    }
    impl_->shape = std::move(shape);
    impl_->data = std::move(data);
    impl_->requires_grad = requires_grad;
  }

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    const auto n = shape_numel(shape);
    return Tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
  }

  static Tensor full(Shape shape, double value, bool requires_grad = false) {
    const auto n = shape_numel(shape);
    return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
  }

  static Tensor scalar(double value, bool requires_grad = false) {
    return Tensor({}, {value}, requires_grad);
  }

  // Row vector / matrix helpers used heavily by tests.
  static Tensor vector(std::vector<double> values, bool requires_grad = false) {
    const auto n = values.size();
    return Tensor({n}, std::move(values), requires_grad);
  }

  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                       bool requires_grad = false) {
    return Tensor({rows, cols}, std::move(values), requires_grad);
  }

  static Tensor from_impl(detail::ImplPtr impl) {
    Tensor t;
    t.impl_ = std::move(impl);
    return t;
  }

  bool defined() const { return impl_ != nullptr; }

  const Shape& shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t dim(std::size_t axis) const {
    if (axis >= rank()) {
      throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " +
                           shape_str(shape()));
    }
    return impl_->shape[axis];
  }
  std::size_t numel() const { return impl_->data.size(); }

  std::span<const double> data() const { return impl_->data; }
  // Writable view for in-place parameter updates. Must not be used on a
  // tensor whose value has already been consumed by a recorded operation.
  std::span<double> mutable_data() { return impl_->data; }

  double operator[](std::size_t i) const { return impl_->data[i]; }

  double item() const {
    if (numel() != 1) {
      throw ContractError("item() on tensor of shape " + shape_str(shape()));
    }
    return impl_->data[0];
  }

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool value) { impl_->requires_grad = value; }

  bool is_leaf() const { return impl_->tape_generation == 0; }

  bool has_grad() const { return !impl_->grad.empty(); }
  std::span<const double> grad() const { return impl_->grad; }
  std::span<double> mutable_grad() {
    impl_->ensure_grad();
    return impl_->grad;
  }
  void zero_grad() { impl_->grad.clear(); }

  // Deep copy as a fresh leaf (no tape linkage, no gradient).
  Tensor detach(bool requires_grad = false) const {
    return Tensor(impl_->shape, impl_->data, requires_grad);
  }

  const detail::ImplPtr& impl() const { return impl_; }

 private:
  detail::ImplPtr impl_;
};

// A recorded operation. `backward` reads the output gradient and accumulates
// into the gradients of the inputs that require them.
struct TapeNode {
  std::vector<detail::ImplPtr> inputs;
  detail::ImplPtr output;
  std::function<void(std::span<const double> grad_out)> backward;
};

// Ordered operation log. Nodes are appended as operations execute, so the
// log is topologically sorted by construction.
class Tape {
 public:
  Tape() : generation_(detail::next_generation()) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // The tape operations on this thread record into.
  static Tape& current() { return *current_slot(); }

  std::size_t size() const { return nodes_.size(); }
  const TapeNode& node(std::size_t i) const { return nodes_[i]; }
  std::uint64_t generation() const { return generation_; }

  // Drops all nodes. Tensors produced earlier become constants.
  void clear() {
    release_outputs();
    nodes_.clear();
    generation_ = detail::next_generation();
  }

  bool contains(const Tensor& t) const {
    return t.defined() && t.impl()->tape_generation == generation_ &&
           t.impl()->tape_index < nodes_.size() &&
           nodes_[t.impl()->tape_index].output == t.impl();
  }

  void push(TapeNode node) {
    node.output->tape_generation = generation_;
    node.output->tape_index = nodes_.size();
    nodes_.push_back(std::move(node));
  }

  static bool& recording_enabled() {
    thread_local bool enabled = true;
    return enabled;
  }

  ~Tape() { release_outputs(); }

 private:
  friend class TapeScope;

  void release_outputs() {
    for (auto& n : nodes_) {
      n.output->tape_generation = 0;
      n.output->requires_grad = false;
    }
  }

  static Tape*& current_slot() {
    thread_local Tape default_tape;
    thread_local Tape* slot = &default_tape;
    return slot;
  }

  std::vector<TapeNode> nodes_;
  std::uint64_t generation_;
};

// Installs a fresh tape as the current one for the lifetime of the scope.
class TapeScope {
 public:
  TapeScope() : previous_(Tape::current_slot()) { Tape::current_slot() = &tape_; }
  ~TapeScope() { Tape::current_slot() = previous_; }
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

  Tape& tape() { return tape_; }

 private:
  Tape tape_;
  Tape* previous_;
};

// Disables recording on this thread for the lifetime of the guard.
class NoGradGuard {
 public:
  NoGradGuard() : previous_(Tape::recording_enabled()) { Tape::recording_enabled() = false; }
  ~NoGradGuard() { Tape::recording_enabled() = previous_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

namespace detail {

inline bool any_requires_grad(std::initializer_list<const Tensor*> inputs) {
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

// Wraps a freshly computed value as an operation output, recording a tape
// node when any input requires a gradient and recording is enabled.
inline Tensor make_result(Shape shape, std::vector<double> data,
                          std::initializer_list<const Tensor*> inputs,
                          std::function<void(std::span<const double>)> backward) {
  Tensor out(std::move(shape), std::move(data));
  if (!Tape::recording_enabled() || !any_requires_grad(inputs)) return out;
  out.set_requires_grad(true);
  TapeNode node;
  node.inputs.reserve(inputs.size());
  for (const Tensor* t : inputs) node.inputs.push_back(t->impl());
  node.output = out.impl();
  node.backward = std::move(backward);
  Tape::current().push(std::move(node));
  return out;
}

// Gradient sink for an input: nullptr when the input does not require grad.
inline std::vector<double>* grad_sink(const ImplPtr& impl) {
  if (!impl->requires_grad) return nullptr;
  impl->ensure_grad();
  return &impl->grad;
}

}  // namespace detail

// Reverse-mode sweep from a scalar loss on the current tape. Every
// requires_grad ancestor receives its gradient; leaf gradients accumulate,
// intermediate gradients are recomputed from scratch on each call.
inline void backward(const Tensor& loss) {
  if (loss.numel() != 1) {
    throw ContractError("backward() requires a scalar loss, got shape " + shape_str(loss.shape()));
  }
  Tape& tape = Tape::current();
  if (!tape.contains(loss)) {
    if (loss.is_leaf() && loss.requires_grad()) {
      loss.impl()->ensure_grad();
      loss.impl()->grad[0] += 1.0;
      return;
    }
    throw ContractError("backward() called on a tensor that is not on the current tape");
  }
  const std::size_t last = loss.impl()->tape_index;
  for (std::size_t i = 0; i <= last; ++i) tape.node(i).output->grad.clear();
  loss.impl()->grad.assign(1, 1.0);
  for (std::size_t i = last + 1; i-- > 0;) {
    const TapeNode& n = tape.node(i);
    if (n.output->grad.empty()) continue;  // not an ancestor of the loss
    n.backward(n.output->grad);
  }
}

}  // namespace auroraclr
