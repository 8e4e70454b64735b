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

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "swunet/errors.hpp"

namespace swunet {

/// Batch/channel/height/width extent of a rank-4 tensor.
struct Shape {
  int n = 1;
  int c = 1;
  int h = 1;
  int w = 1;

  std::size_t numel() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const {
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," +
           std::to_string(h) + "," + std::to_string(w) + ")";
  }
};

/// Dense rank-4 array stored contiguously in n→c→h→w row-major order.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() : Tensor(Shape{}) {}
  explicit Tensor(Shape shape, T fill = T(0)) : shape_(shape) {
    if (shape.n < 1 || shape.c < 1 || shape.h < 1 || shape.w < 1) {
      throw ShapeError("tensor dimensions must be >= 1, got " + shape.str());
    }
    data_.assign(shape.numel(), fill);
  }
  Tensor(Shape shape, std::vector<T> data) : Tensor(shape) {
    if (data.size() != shape.numel()) {
      throw ShapeError("data length " + std::to_string(data.size()) +
                       " does not match shape " + shape.str());
    }
    data_ = std::move(data);
  }
  Tensor(int n, int c, int h, int w, T fill = T(0))
      : Tensor(Shape{n, c, h, w}, fill) {}

  static Tensor scalar(T v) { return Tensor(Shape{}, v); }

  const Shape& shape() const { return shape_; }
  int n() const { return shape_.n; }
  int c() const { return shape_.c; }
  int h() const { return shape_.h; }
  int w() const { return shape_.w; }
  std::size_t size() const { return data_.size(); }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  T* raw() { return data_.data(); }
  const T* raw() const { return data_.data(); }

  std::size_t index(int n, int c, int h, int w) const {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + h) *
               shape_.w +
           w;
  }
  T& at(int n, int c, int h, int w) { return data_[index(n, c, h, w)]; }
  T at(int n, int c, int h, int w) const { return data_[index(n, c, h, w)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  T operator[](std::size_t i) const { return data_[i]; }

  /// Pointer to the (n, c) plane.
  T* plane(int n, int c) { return data_.data() + index(n, c, 0, 0); }
  const T* plane(int n, int c) const { return data_.data() + index(n, c, 0, 0); }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(shape_);
    std::transform(data_.begin(), data_.end(), out.data().begin(),
                   [](T v) { return static_cast<U>(v); });
    return out;
  }

  bool operator==(const Tensor& o) const {
    return shape_ == o.shape_ && data_ == o.data_;
  }

 private:
  Shape shape_;
  std::vector<T> data_;
};

/// Trainable tensor with its accumulated gradient.
template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  int rank = 4;  // logical rank used for checkpoints; biases/BN vectors are 1
  bool trainable = true;

  Parameter(std::string name_, Tensor<T> value_, int rank_ = 4)
      : name(std::move(name_)),
        value(std::move(value_)),
        grad(value.shape()),
        rank(rank_) {}

  void zero_grad() { grad.fill(T(0)); }
};

}  // namespace swunet
