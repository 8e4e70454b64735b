/* Copyright 2026 The swunet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "swunet/tensor.hpp"

namespace swunet {

/// One value in the computation graph. Gradients are allocated lazily.
template <typename T>
struct Node {
  explicit Node(Tensor<T> v) : value(std::move(v)) {}

  Tensor<T> value;
  Tensor<T> grad;
  bool has_grad = false;
  bool requires_grad = false;
  Parameter<T>* param = nullptr;
  std::function<void(Node&)> backward;

  /// Zero-initialised on first access.
  Tensor<T>& grad_buffer() {
    if (!has_grad) {
      grad = Tensor<T>(value.shape());
      has_grad = true;
    }
    return grad;
  }
};

template <typename T>
using Var = std::shared_ptr<Node<T>>;

/// Ordered record of differentiable operations. A non-recording tape keeps
/// nothing alive, so inference frees intermediates as soon as they go out of
/// scope.
template <typename T>
class Tape {
 public:
  explicit Tape(bool recording = true) : recording_(recording) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }
  std::size_t size() const { return nodes_.size(); }

  Var<T> constant(Tensor<T> value) {
    auto node = std::make_shared<Node<T>>(std::move(value));
    push(node);
    return node;
  }

  /// Non-parameter input whose gradient is wanted (gradient checks).
  Var<T> leaf(Tensor<T> value) {
    auto node = std::make_shared<Node<T>>(std::move(value));
    node->requires_grad = recording_;
    push(node);
    return node;
  }

  Var<T> param(Parameter<T>& p) {
    auto node = std::make_shared<Node<T>>(p.value);
    node->requires_grad = recording_;
    node->param = &p;
    push(node);
    return node;
  }

  /// Registers the output of an operation. `fn` receives the output node
  /// and must push its gradient into `inputs`.
  Var<T> record(Tensor<T> value, std::initializer_list<Var<T>> inputs,
                std::function<void(Node<T>&)> fn) {
    auto node = std::make_shared<Node<T>>(std::move(value));
    if (recording_) {
      for (const auto& in : inputs) {
        if (in && in->requires_grad) {
          node->requires_grad = true;
          break;
        }
      }
      if (node->requires_grad) node->backward = std::move(fn);
    }
    push(node);
    return node;
  }

  /// Reverse sweep from a scalar loss. Parameter gradients accumulate
  /// across calls; intermediate gradients are recomputed each call.
  void backward(const Var<T>& loss) {
    if (!recording_) throw ArgumentError("backward on a non-recording tape");
    if (!loss || loss->value.size() != 1) {
      throw ArgumentError("backward requires a scalar loss");
    }
    std::size_t end = nodes_.size();
    while (end > 0 && nodes_[end - 1] != loss) --end;
    if (end == 0) throw ArgumentError("loss was not recorded on this tape");
    for (auto& n : nodes_) n->has_grad = false;
    loss->grad_buffer().fill(T(1));
    for (std::size_t i = end; i-- > 0;) {
      Node<T>& node = *nodes_[i];
      if (!node.has_grad || !node.requires_grad) continue;
      if (node.backward) node.backward(node);
      if (node.param) {
        auto dst = node.param->grad.data();
        auto src = node.grad.data();
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
      }
    }
  }

  void clear() { nodes_.clear(); }

 private:
  void push(const Var<T>& node) {
    if (recording_) nodes_.push_back(node);
  }

  bool recording_;
  std::vector<Var<T>> nodes_;
};

/// Adds `g` into the gradient of `v` if it participates in differentiation.
template <typename T>
inline void accumulate_grad(const Var<T>& v, const Tensor<T>& g) {
  if (!v || !v->requires_grad) return;
  auto dst = v->grad_buffer().data();
  auto src = g.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace swunet
